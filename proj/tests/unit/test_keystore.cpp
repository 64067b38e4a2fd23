#include <fstream>
#include <sys/stat.h>

#include "doctest.h"
#include "pakemail/errors.hpp"
#include "pakemail/keystore.hpp"
#include "temp_dir.hpp"

using namespace pakemail;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

ExchangeRecord exchange_for(const Identity& peer) {
    ExchangeRecord r;
    r.id = ExchangeId::random();
    r.peer = peer;
    r.started_at = 10;
    r.deadline = 20;
    return r;
}

}  // namespace

TEST_SUITE("keystore") {
    TEST_CASE("self key pair and fingerprint") {
        auto s = generate_self(Identity("a@x"));
        CHECK(s.public_key.size() == 32);
        CHECK(s.fingerprint == fingerprint_of(s.public_key));
        CHECK(generate_self(Identity("a@x")).fingerprint != s.fingerprint);
    }

    TEST_CASE("persistence round trip with 0600 permissions") {
        TempDir tmp;
        auto path = tmp / "k.keystore";
        Identity bob("bob@x");
        Key256 chain{};
        chain[3] = 9;
        auto self = generate_self(Identity("alice@x"));
        ExchangeRecord ex = exchange_for(bob);
        {
            Keystore ks(path);
            ks.set_self(self);
            PeerRecord p;
            p.identity = bob;
            p.status = PeerStatus::authenticated;
            p.fingerprint = Fingerprint::from_hex("0101010101010101010101010101010101010101");
            p.chain_key = chain;
            p.attempts = 4;
            p.generation = 2;
            ks.put_peer(p);
            ks.put_exchange(ex);
            TransportEnvelope env{ExchangeId::random(), Flow::data, bob, Identity("alice@x"), std::nullopt, Bytes{1}};
            CHECK(ks.stash_add(env, 5));
            CHECK_FALSE(ks.stash_add(env, 6));
        }
        struct stat st {};
        REQUIRE(::stat(path.c_str(), &st) == 0);
        CHECK((st.st_mode & 0777) == 0600);
        CHECK(slurp(path).rfind(std::string(Keystore::kHeader), 0) == 0);

        Keystore back(path);
        REQUIRE(back.self());
        CHECK(back.self()->fingerprint == self.fingerprint);
        CHECK(back.self()->secret_key == self.secret_key);
        auto p = back.peer(bob);
        REQUIRE(p);
        CHECK(p->chain_key == chain);
        CHECK(p->attempts == 4);
        CHECK(back.exchanges().size() == 1);
        CHECK(back.exchange(ex.id) == ex);
        CHECK(back.stash().size() == 1);
        CHECK(back.dump() == slurp(path));
    }

    TEST_CASE("passphrase seals secrets at rest") {
        TempDir tmp;
        auto path = tmp / "k.keystore";
        auto self = generate_self(Identity("alice@x"));
        Key256 chain{};
        chain.fill(0x5a);
        {
            Keystore ks(path, std::string("correct horse"));
            CHECK(ks.encrypted());
            ks.set_self(self);
            PeerRecord p;
            p.identity = Identity("bob@x");
            p.chain_key = chain;
            ks.put_peer(p);
        }
        auto text = slurp(path);
        CHECK(text.find(to_hex(self.secret_key)) == std::string::npos);
        CHECK(text.find(to_hex(chain)) == std::string::npos);
        CHECK_THROWS_AS(Keystore{path}, Error);
        CHECK_THROWS(Keystore(path, std::string("wrong")));
        Keystore ok(path, std::string("correct horse"));
        CHECK(ok.self()->secret_key == self.secret_key);
        CHECK(ok.peer(Identity("bob@x"))->chain_key == chain);
    }

    TEST_CASE("monotonic attempts and terminal outcomes") {
        Keystore ks;
        PeerRecord p;
        p.identity = Identity("bob@x");
        p.attempts = 3;
        ks.put_peer(p);
        p.attempts = 2;
        CHECK_THROWS(ks.put_peer(p));
        auto ex = exchange_for(p.identity);
        ex.outcome = Outcome::aborted_by_timeout;
        ks.put_exchange(ex);
        ex.outcome = Outcome::success;
        CHECK_THROWS_AS(ks.put_exchange(ex), StateError);
        CHECK(ks.forget_peer(p.identity));
        CHECK_FALSE(ks.peer(p.identity));
    }

    TEST_CASE("exchanges keep start order") {
        Keystore ks;
        std::vector<ExchangeId> ids;
        for (int i = 0; i < 5; ++i) {
            auto e = exchange_for(Identity("p@x"));
            ids.push_back(e.id);
            ks.put_exchange(e);
        }
        auto all = ks.exchanges();
        for (int i = 0; i < 5; ++i) CHECK(all[i].id == ids[i]);
        CHECK(ks.exchanges_from(3).size() == 2);
        CHECK(ks.exchange_count() == 5);
    }

    TEST_CASE("corrupt file is rejected") {
        TempDir tmp;
        auto path = tmp / "bad.keystore";
        std::ofstream(path) << "not a keystore\n";
        CHECK_THROWS(Keystore{path});
        for (auto o : {Outcome::success, Outcome::password_mismatch, Outcome::aborted_by_timeout,
                       Outcome::protocol_error})
            CHECK(outcome_from_string(to_string(o)) == o);
    }
}
