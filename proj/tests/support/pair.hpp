#pragma once

// Two clients over one transport, pumped alternately from a single thread.

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>

#include "pakemail/keystore.hpp"
#include "pakemail/session_manager.hpp"

namespace pakemail::testing {

struct Party {
    Identity id;
    std::unique_ptr<Keystore> keystore;
    std::unique_ptr<SessionManager> manager;
};

struct Pair {
    TransportBackend& wire;
    ManagerOptions options;
    Timestamp now = 1'700'000'000'000;
    Party a;
    Party b;

    Pair(TransportBackend& transport, ManagerOptions opts = {},
         std::optional<std::filesystem::path> dir = std::nullopt)
        : wire(transport), options(opts) {
        a = make(Identity("alice@example.org"), dir);
        b = make(Identity("bob@example.org"), dir);
    }

    Clock clock() {
        return [this] { return now; };
    }

    Party make(Identity id, const std::optional<std::filesystem::path>& dir) {
        Party p;
        p.id = id;
        p.keystore = dir ? std::make_unique<Keystore>(*dir / (id.str() + ".keystore")) : std::make_unique<Keystore>();
        if (!p.keystore->self()) p.keystore->set_self(generate_self(id));
        p.manager = std::make_unique<SessionManager>(*p.keystore, wire, options, clock());
        return p;
    }

    /// Simulates a process restart: the manager goes away and the keystore
    /// is re-read from disk.
    void restart(Party& p) {
        p.manager.reset();
        p.keystore->reload();
        p.manager = std::make_unique<SessionManager>(*p.keystore, wire, options, clock());
    }

    /// Pumps both managers until both attempts finish.
    std::pair<ExchangeResult, ExchangeResult> drive(SessionManager::AttemptId ia, SessionManager::AttemptId ib,
                                                   int max_rounds = 200) {
        for (int round = 0; round < max_rounds; ++round) {
            auto ra = a.manager->result(ia);
            auto rb = b.manager->result(ib);
            if (ra && rb) return {*ra, *rb};
            b.manager->pump();
            a.manager->pump();
        }
        throw std::runtime_error("exchange did not finish");
    }

    std::pair<ExchangeResult, ExchangeResult> auth(std::string_view pw_a, std::string_view pw_b) {
        auto ia = a.manager->begin(b.id, as_bytes(pw_a), Role::initiator);
        auto ib = b.manager->begin(a.id, as_bytes(pw_b), Role::responder);
        return drive(ia, ib);
    }

    std::pair<ExchangeResult, ExchangeResult> renew() {
        auto ia = a.manager->begin_renewal(b.id, Role::initiator);
        auto ib = b.manager->begin_renewal(a.id, Role::responder);
        return drive(ia, ib);
    }
};

}  // namespace pakemail::testing
