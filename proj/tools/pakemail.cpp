// pakemail: command-line front end.

#include <signal.h>
#include <termios.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pakemail/attack_cost.hpp"
#include "pakemail/client_config.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/keystore.hpp"
#include "pakemail/relay_server.hpp"
#include "pakemail/session_manager.hpp"
#include "pakemail/trustwords.hpp"

using namespace pakemail;

namespace {

enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kMismatch = 2,
    kTimeout = 3,
    kLockout = 4,
    kTransport = 5,
    kNoChain = 6,
    kNoAttackSurface = 7,
    kProtocol = 8,
};

struct Globals {
    std::optional<std::string> config_path;
    std::optional<std::string> identity;
    std::optional<std::string> keystore;
    std::optional<std::string> transport;
    std::optional<std::string> group;
    std::optional<std::string> binding;
    std::optional<unsigned> timeout_seconds;
    std::optional<unsigned> max_failed;
    bool toy = false;
};

ClientConfig resolve(const Globals& g) {
    auto cfg = ClientConfig::load(g.config_path ? std::optional<std::filesystem::path>(*g.config_path) : std::nullopt);
    if (g.identity) cfg.identity = *g.identity;
    if (g.keystore) cfg.keystore = *g.keystore;
    else if (g.identity && !cfg.settings.count("keystore")) cfg.keystore = ClientConfig::load(std::nullopt).keystore.parent_path() / (*g.identity + ".keystore");
    if (g.transport) cfg.transport = TransportSpec::parse(*g.transport);
    if (g.group) cfg.group = *g.group;
    if (g.binding) cfg.binding = binding_mode_from_string(*g.binding);
    if (g.timeout_seconds) cfg.timeout = std::chrono::seconds(*g.timeout_seconds);
    if (g.max_failed) cfg.max_failed_attempts = *g.max_failed;
    cfg.allow_toy_group = g.toy;
    return cfg;
}

std::optional<std::string> passphrase() {
    const char* p = std::getenv("PAKEMAIL_KEYSTORE_PASSPHRASE");
    if (!p || !*p) return std::nullopt;
    return std::string(p);
}

Identity require_identity(const ClientConfig& cfg) {
    if (!cfg.identity) throw InvalidArgument("no identity configured; use --identity or set identity in the config");
    return Identity(*cfg.identity);
}

std::unique_ptr<Keystore> open_keystore(const ClientConfig& cfg) {
    return std::make_unique<Keystore>(cfg.keystore, passphrase());
}

struct Client {
    ClientConfig cfg;
    std::unique_ptr<Keystore> keystore;
    std::unique_ptr<TransportBackend> backend;
    std::unique_ptr<SessionManager> manager;
};

Client connect(const Globals& g) {
    Client c;
    c.cfg = resolve(g);
    auto self = require_identity(c.cfg);
    const Group& group = c.cfg.resolve_group();
    c.keystore = open_keystore(c.cfg);
    auto rec = c.keystore->self();
    if (!rec) throw StateError("keystore " + c.cfg.keystore.string() + " is not initialised; run `pakemail init`");
    if (rec->identity != self)
        throw InvalidArgument("keystore belongs to " + rec->identity.str() + ", not " + self.str());
    c.backend = make_transport(c.cfg.transport, c.cfg.settings);
    ManagerOptions opts;
    AttemptPolicy policy;
    policy.timeout = c.cfg.resolved_timeout();
    if (c.cfg.max_failed_attempts) policy.max_failed_attempts = *c.cfg.max_failed_attempts;
    opts.policy = policy;
    opts.group = &group;
    opts.mode = c.cfg.binding;
    c.manager = std::make_unique<SessionManager>(*c.keystore, *c.backend, opts);
    return c;
}

const Wordlist& wordlist_for(const ClientConfig& cfg, std::optional<Wordlist>& storage) {
    if (!cfg.wordlist) return Wordlist::synthetic();
    storage = Wordlist::load(*cfg.wordlist);
    return *storage;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
}

// No-echo prompt on the controlling terminal; a pipe supplies one line.
std::string read_secret(const std::string& prompt) {
    std::string secret;
    if (isatty(STDIN_FILENO)) {
        std::cerr << prompt << std::flush;
        termios old{};
        tcgetattr(STDIN_FILENO, &old);
        termios quiet = old;
        quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
        tcsetattr(STDIN_FILENO, TCSAFLUSH, &quiet);
        std::getline(std::cin, secret);
        tcsetattr(STDIN_FILENO, TCSAFLUSH, &old);
        std::cerr << '\n';
    } else {
        std::getline(std::cin, secret);
    }
    if (!secret.empty() && secret.back() == '\r') secret.pop_back();
    return secret;
}

int report(const Client& c, const ExchangeResult& r) {
    for (const auto& w : c.manager->take_warnings()) std::cerr << "warning: " << w << '\n';
    switch (r.outcome) {
        case Outcome::success: {
            std::optional<Wordlist> storage;
            const auto& words = wordlist_for(c.cfg, storage);
            std::cout << "SUCCESS: " << r.peer.str() << " is authenticated\n"
                      << "  peer fingerprint: " << r.peer_fingerprint->hex() << '\n'
                      << "  trustwords: " << join(trustwords(c.manager->fingerprint(), *r.peer_fingerprint, words))
                      << '\n'
                      << "  exchange: " << r.id.hex() << '\n';
            return kOk;
        }
        case Outcome::password_mismatch:
            if (r.chained) {
                std::cout << "FAILURE: password-mismatch (stored chain keys disagree)\n"
                          << "  hint: run `pakemail auth " << r.peer.str() << "` with a fresh shared secret\n";
            } else {
                std::cout << "FAILURE: password-mismatch: the passwords did not match\n";
            }
            return kMismatch;
        case Outcome::aborted_by_timeout:
            std::cout << "FAILURE: aborted-by-timeout: the peer did not respond (" << r.detail << ")\n";
            return kTimeout;
        case Outcome::protocol_error:
            std::cout << "FAILURE: protocol-error: " << r.detail << '\n';
            return kProtocol;
    }
    return kProtocol;
}

std::optional<Role> parse_role(const std::optional<std::string>& s) {
    if (!s) return std::nullopt;
    return role_from_string(*s);
}

int cmd_init(const Globals& g, bool force) {
    auto cfg = resolve(g);
    auto self = require_identity(cfg);
    auto ks = open_keystore(cfg);
    if (auto existing = ks->self(); existing && !force) {
        if (existing->identity != self)
            throw InvalidArgument("keystore belongs to " + existing->identity.str());
        std::cout << "already initialised: " << existing->identity.str() << '\n'
                  << "fingerprint: " << existing->fingerprint.hex() << '\n';
        return kOk;
    }
    auto rec = generate_self(self);
    ks->set_self(rec);
    std::cout << (force ? "new key pair for " : "initialised ") << rec.identity.str() << '\n'
              << "fingerprint: " << rec.fingerprint.hex() << '\n'
              << "keystore: " << cfg.keystore.string() << '\n';
    return kOk;
}

int cmd_auth(const Globals& g, const std::string& peer, const std::optional<std::string>& role, bool override) {
    auto c = connect(g);
    std::cerr << "Agree on the secret in person or by phone. Never send the secret itself by email or chat.\n";
    auto secret = read_secret("shared secret for " + peer + ": ");
    if (secret.empty()) throw InvalidArgument("the shared secret must not be empty");
    auto id = c.manager->begin(Identity(peer), as_bytes(secret), parse_role(role), override);
    std::fill(secret.begin(), secret.end(), '\0');
    return report(c, c.manager->wait(id));
}

int cmd_renew(const Globals& g, const std::string& peer, const std::optional<std::string>& role) {
    {
        // A lost keystore means a lost chain key, not a configuration error.
        auto cfg = resolve(g);
        if (!open_keystore(cfg)->self()) throw NoChainError("keystore has no key pair, so no chain key for " + peer);
    }
    auto c = connect(g);
    return report(c, c.manager->reauthenticate_chained(Identity(peer), parse_role(role)));
}

std::string fmt(const attack::Real& v, int digits = 6) {
    std::ostringstream out;
    out << std::setprecision(digits) << v;
    return out.str();
}

void attack_row(const attack::AttackParams& p, const char* label) {
    auto q = attack::q_no_preimage(p);
    auto e = attack::effort(p);
    std::cout << std::left << std::setw(5) << p.b << std::setw(5) << p.r << std::setw(5) << p.u << std::setw(5)
              << p.ell() << std::setw(5) << p.t() << std::setw(6) << p.p << std::setw(22) << fmt(q.value(), 18)
              << std::setw(14) << fmt(q.complement(), 6) << std::setw(14) << fmt(e.attempts, 6) << std::fixed
              << std::setprecision(2) << e.log2_attempts << std::defaultfloat;
    if (label) std::cout << "  " << label;
    std::cout << '\n';
}

int cmd_attack_cost(unsigned b, unsigned r, unsigned u, double p, bool cases) {
    const char* header = "b    r    u    ell  t    p     q                     1-q           e             log2(e)\n";
    if (cases) {
        std::cout << header;
        for (const auto& c : attack::five_word_cases()) attack_row(c.params, c.label);
        return kOk;
    }
    auto params = attack::AttackParams::make(b, r, u, p);
    try {
        attack::effort(params);
        std::cout << header;
        attack_row(params, nullptr);
    } catch (const attack::NoAttackSurface& e) {
        std::cout << "no attack: every one of the " << params.ell()
                  << " middle bits is checked (t = 0), so no key other than the target matches\n";
        return kNoAttackSurface;
    }
    return kOk;
}

int cmd_trustwords(const Globals& g, const std::vector<std::string>& args, int count) {
    auto cfg = resolve(g);
    std::optional<Wordlist> storage;
    const auto& words = wordlist_for(cfg, storage);
    Fingerprint a, b;
    if (args.size() == 2) {
        a = Fingerprint::from_hex(args[0]);
        b = Fingerprint::from_hex(args[1]);
    } else if (args.size() == 1) {
        auto ks = open_keystore(cfg);
        auto self = ks->self();
        auto peer = ks->peer(Identity(args[0]));
        if (!self) throw StateError("keystore is not initialised");
        if (!peer || !peer->fingerprint) throw StateError("no fingerprint known for " + args[0]);
        a = self->fingerprint;
        b = *peer->fingerprint;
    } else {
        throw InvalidArgument("trustwords takes two fingerprints or one peer identity");
    }
    std::cout << join(trustwords(a, b, words, count)) << '\n';
    return kOk;
}

int cmd_relay_serve(const std::string& listen, const std::optional<std::string>& log) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);  // server threads inherit the mask

    auto store = log ? std::make_unique<relay::MailboxStore>(*log) : std::make_unique<relay::MailboxStore>();
    relay::RelayServer server(*store, net::Endpoint::parse(listen));
    server.start();
    std::cout << "relay listening on " << server.endpoint().str()
              << (store->persistent() ? " (log " + *log + ")" : std::string(" (in memory)")) << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    std::cout << "relay stopped" << std::endl;
    return kOk;
}

int cmd_send(const Globals& g, const std::string& peer, const std::optional<std::string>& message) {
    auto c = connect(g);
    std::string text;
    if (message) {
        text = *message;
    } else {
        std::stringstream buf;
        buf << std::cin.rdbuf();
        text = buf.str();
    }
    auto rec = c.keystore->peer(Identity(peer));
    if (!rec || rec->status != PeerStatus::authenticated) {
        std::cerr << "refusing to send: " << peer << " is not authenticated; run `pakemail auth " << peer << "` first\n";
        return kUsage;
    }
    auto id = c.manager->send_data(Identity(peer), as_bytes(text));
    std::cout << "sent " << id.hex() << '\n';
    return kOk;
}

int cmd_recv(const Globals& g, unsigned wait_seconds) {
    auto c = connect(g);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(wait_seconds);
    std::vector<DataMessage> got;
    for (;;) {
        got = c.manager->receive_data();
        if (!got.empty() || std::chrono::steady_clock::now() >= deadline) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    for (const auto& w : c.manager->take_warnings()) std::cerr << "warning: " << w << '\n';
    for (const auto& m : got) std::cout << "from " << m.sender.str() << ": " << to_string(m.plaintext) << '\n';
    if (got.empty()) std::cout << "no messages\n";
    return kOk;
}

int cmd_status(const Globals& g) {
    auto cfg = resolve(g);
    auto ks = open_keystore(cfg);
    auto self = ks->self();
    std::cout << "identity: " << (self ? self->identity.str() : std::string("(not initialised)")) << '\n';
    if (self) std::cout << "fingerprint: " << self->fingerprint.hex() << '\n';
    std::cout << "\npeers\n" << std::left << std::setw(28) << "peer" << std::setw(17) << "status" << std::setw(42)
              << "fingerprint" << std::setw(10) << "attempts" << std::setw(10) << "failures" << "renewals\n";
    for (const auto& p : ks->peers()) {
        std::cout << std::setw(28) << p.identity.str() << std::setw(17) << to_string(p.status) << std::setw(42)
                  << (p.fingerprint ? p.fingerprint->hex() : "-") << std::setw(10) << p.attempts << std::setw(10)
                  << p.consecutive_failures << p.generation << '\n';
    }
    std::cout << "\nexchanges\n" << std::setw(34) << "exchange" << std::setw(28) << "peer" << std::setw(11) << "role"
              << std::setw(10) << "chained" << "outcome\n";
    for (const auto& e : ks->exchanges()) {
        std::cout << std::setw(34) << e.id.hex() << std::setw(28) << e.peer.str() << std::setw(11) << to_string(e.role)
                  << std::setw(10) << (e.chained ? "yes" : "no")
                  << (e.outcome ? std::string(to_string(*e.outcome)) : "in-progress") << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Authenticate public-key fingerprints with a short shared secret (SPAKE2 + key confirmation)"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_option("--identity", g.identity, "own identity, e.g. an email address");
    app.add_option("--keystore", g.keystore, "keystore file");
    app.add_option("--transport", g.transport, "loopback | maildir:PATH | imap-smtp | relay:HOST:PORT");
    app.add_option("--group", g.group, "production | toy");
    app.add_option("--binding", g.binding, "where fingerprints are bound: confirmation | secret");
    app.add_option("--timeout", g.timeout_seconds, "seconds before a silent peer counts as aborted");
    app.add_option("--max-failed", g.max_failed, "consecutive failures before lockout");
    app.add_flag("--insecure-toy-group", g.toy, "allow the brute-forceable test group");

    bool force = false;
    auto* init = app.add_subcommand("init", "create the keystore and own key pair");
    init->add_flag("--force", force, "replace the key pair (peers then renew automatically)");

    std::string peer;
    std::optional<std::string> role;
    bool override = false;
    auto* auth = app.add_subcommand("auth", "authenticate a peer with a shared secret");
    auth->add_option("peer", peer, "peer identity")->required();
    auth->add_option("--role", role, "initiator | responder (default: smaller identity initiates)");
    auth->add_flag("--override-lockout", override, "allow another attempt after repeated failures");

    auto* renew = app.add_subcommand("renew", "re-authenticate with the stored chain key, no prompt");
    renew->add_option("peer", peer, "peer identity")->required();
    renew->add_option("--role", role, "initiator | responder");

    unsigned b = 80, r = 16, u = 32;
    double p = 0.5;
    bool cases = false;
    auto* cost = app.add_subcommand("attack-cost", "partial-preimage attack cost for lazy fingerprint checks");
    cost->add_option("--b", b, "fingerprint bits compared")->capture_default_str();
    cost->add_option("--r", r, "bits checked at each end")->capture_default_str();
    cost->add_option("--u", u, "middle bits checked")->capture_default_str();
    cost->add_option("--p", p, "target success probability")->capture_default_str();
    cost->add_flag("--paper-cases", cases, "the two five-word checking patterns (u = 32 and u = 16)");

    std::vector<std::string> tw_args;
    int count = 5;
    auto* tw = app.add_subcommand("trustwords", "words for two fingerprints (or a known peer)");
    tw->add_option("fingerprints", tw_args, "FPR FPR, or PEER")->required();
    tw->add_option("--count", count, "5 or 10")->capture_default_str();

    std::string listen = "127.0.0.1:7878";
    std::optional<std::string> log;
    auto* relay = app.add_subcommand("relay-serve", "run an untrusted store-and-forward relay");
    relay->add_option("--listen", listen, "HOST:PORT")->capture_default_str();
    relay->add_option("--log", log, "append-only log for persistence across restarts");

    std::optional<std::string> message;
    auto* send = app.add_subcommand("send", "encrypt a message to an authenticated peer");
    send->add_option("peer", peer, "peer identity")->required();
    send->add_option("--message", message, "text (default: read stdin)");

    unsigned wait_seconds = 0;
    auto* recv = app.add_subcommand("recv", "receive and decrypt messages");
    recv->add_option("--wait", wait_seconds, "seconds to wait for a message")->capture_default_str();

    auto* status = app.add_subcommand("status", "peers and exchange history");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*init) return cmd_init(g, force);
        if (*auth) return cmd_auth(g, peer, role, override);
        if (*renew) return cmd_renew(g, peer, role);
        if (*cost) return cmd_attack_cost(b, r, u, p, cases);
        if (*tw) return cmd_trustwords(g, tw_args, count);
        if (*relay) return cmd_relay_serve(listen, log);
        if (*send) return cmd_send(g, peer, message);
        if (*recv) return cmd_recv(g, wait_seconds);
        if (*status) return cmd_status(g);
    } catch (const LockoutError& e) {
        std::cerr << "error: " << e.what() << "\n  hint: rerun with --override-lockout once you trust the peer\n";
        return kLockout;
    } catch (const NoChainError& e) {
        std::cerr << "error: " << e.what() << "\n  hint: fall back to a manual `pakemail auth " << peer
                  << "` (run `pakemail init` first if the keystore is gone)\n";
        return kNoChain;
    } catch (const TransportError& e) {
        std::cerr << "error: transport failure: " << e.what() << '\n';
        return kTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
