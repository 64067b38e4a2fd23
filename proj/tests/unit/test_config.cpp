#include <chrono>
#include <fstream>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "pakemail/client_config.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/imap_smtp.hpp"
#include "pakemail/maildir.hpp"
#include "temp_dir.hpp"

using namespace pakemail;

namespace {

bool live_mail() {
    const char* v = std::getenv("PAKEMAIL_LIVE_MAIL");
    return v && std::string(v) == "1";
}

struct EnvGuard {
    std::string name;
    EnvGuard(const char* n, const char* v) : name(n) { ::setenv(n, v, 1); }
    ~EnvGuard() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("key = value parsing") {
        auto kv = parse_config_text("# comment\nidentity = alice@x  \n\ntransport=relay:127.0.0.1:9 # trailing\n");
        CHECK(kv.at("identity") == "alice@x");
        CHECK(kv.at("transport") == "relay:127.0.0.1:9");
        CHECK_THROWS_AS(parse_config_text("a = 1\njunk\n"), InvalidArgument);
        CHECK_THROWS_AS(parse_config_text("= 1\n"), InvalidArgument);
    }

    TEST_CASE("transport specs") {
        CHECK(TransportSpec::parse("loopback").kind == TransportKind::loopback);
        CHECK(TransportSpec::parse("maildir:/tmp/x").location == "/tmp/x");
        CHECK(TransportSpec::parse("relay:h:1").str() == "relay:h:1");
        CHECK(TransportSpec::parse("imap-smtp").kind == TransportKind::imap_smtp);
        CHECK_THROWS(TransportSpec::parse("carrier-pigeon"));
        CHECK_THROWS(TransportSpec::parse("relay:nohost"));
    }

    TEST_CASE("file, then environment") {
        TempDir tmp;
        auto file = tmp / "pakemail.conf";
        std::ofstream(file) << "identity = alice@x\ngroup = toy\ntimeout_seconds = 5\nkeystore = " << (tmp / "ks").string()
                            << "\n";
        auto c = ClientConfig::load(file);
        CHECK(c.identity == "alice@x");
        CHECK(c.resolved_timeout() == std::chrono::seconds(5));
        CHECK_THROWS_AS(c.resolve_group(), InvalidArgument);
        c.allow_toy_group = true;
        CHECK(&c.resolve_group() == &toy_group());
        {
            EnvGuard e("PAKEMAIL_IDENTITY", "carol@x");
            EnvGuard t("PAKEMAIL_TRANSPORT", "maildir:/var/spool/x");
            auto d = ClientConfig::load(file);
            CHECK(d.identity == "carol@x");
            CHECK(d.transport.kind == TransportKind::maildir);
            CHECK(d.timeout == std::chrono::seconds(5));
        }
        CHECK_THROWS(ClientConfig::load(tmp / "missing.conf"));
        std::ofstream(file) << "max_failed_attempts = lots\n";
        CHECK_THROWS_AS(ClientConfig::load(file), InvalidArgument);
    }

    TEST_CASE("default timeouts follow the transport") {
        ClientConfig c;
        CHECK(c.resolved_timeout() == std::chrono::seconds(30));
        c.transport = TransportSpec::parse("maildir:/x");
        CHECK(c.resolved_timeout() == std::chrono::hours(72));
    }

    TEST_CASE("mail account settings") {
        auto cfg = MailAccountConfig::from_settings({{"smtp_host", "smtp.example"}, {"imap_host", "imap.example"},
                                                     {"smtp_user", "u"}, {"imap_user", "u"}});
        CHECK(cfg.smtp_port == 465);
        CHECK(cfg.imap_port == 993);
        CHECK(cfg.imap_folder == "INBOX");
        CHECK_THROWS_AS(MailAccountConfig{}.validate(), InvalidArgument);
        EnvGuard port("PAKEMAIL_SMTP_PORT", "587");
        CHECK(MailAccountConfig::from_settings({}).smtp_port == 587);
    }

    TEST_CASE("unreachable mail server is a transport error") {
        MailAccountConfig cfg;
        cfg.smtp_host = cfg.imap_host = "127.0.0.1";
        cfg.smtp_port = cfg.imap_port = 1;
        cfg.smtp_user = cfg.imap_user = "u";
        cfg.smtp_password = cfg.imap_password = "p";
        cfg.timeout_seconds = 2;
        ImapSmtpTransport t(cfg);
        TransportEnvelope env{ExchangeId::random(), Flow::initiator_tag, Identity("a@x"), Identity("b@x"),
                              std::nullopt, Bytes{1}};
        CHECK_THROWS_AS(t.send(env), TransportError);
        CHECK_THROWS_AS(t.poll(Identity("b@x")), TransportError);
    }

    // Opt-in: PAKEMAIL_LIVE_MAIL=1 plus PAKEMAIL_SMTP_* / PAKEMAIL_IMAP_* for
    // an account that receives mail sent to PAKEMAIL_LIVE_ADDRESS.
    TEST_CASE("live IMAP/SMTP round trip" * doctest::skip(!live_mail())) {
        auto cfg = MailAccountConfig::from_env();
        cfg.validate();
        const char* addr = std::getenv("PAKEMAIL_LIVE_ADDRESS");
        REQUIRE(addr);
        ImapSmtpTransport t(cfg);
        TransportEnvelope env{ExchangeId::random(), Flow::initiator_tag, Identity(addr), Identity(addr),
                              std::nullopt, Bytes{1, 2, 3}};
        t.send(env);
        bool found = false;
        for (int i = 0; i < 30 && !found; ++i) {
            for (const auto& e : t.poll(Identity(addr)).envelopes) found |= e == env;
            if (!found) std::this_thread::sleep_for(std::chrono::seconds(2));
        }
        CHECK(found);
    }
}
