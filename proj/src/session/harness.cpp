#include "pakemail/harness.hpp"

#include <cmath>
#include <random>
#include <set>

#include "pakemail/errors.hpp"
#include "pakemail/loopback.hpp"
#include "pakemail/session_manager.hpp"

namespace pakemail {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::passive: return "passive";
        case Strategy::active_one_guess: return "active-one-guess";
        case Strategy::guess_and_abort: return "guess-and-abort";
    }
    return "?";
}

Strategy strategy_from_string(std::string_view s) {
    for (auto v : {Strategy::passive, Strategy::active_one_guess, Strategy::guess_and_abort})
        if (to_string(v) == s) return v;
    throw InvalidArgument("unknown strategy: " + std::string(s));
}

namespace {

const Identity kAlice("alice@example.org");
const Identity kBob("bob@example.org");

struct World {
    LoopbackTransport wire;
    Timestamp now = 1'000'000;
    Keystore alice_ks;
    Keystore bob_ks;
    std::unique_ptr<SessionManager> alice;
    std::unique_ptr<SessionManager> bob;

    World() {
        alice_ks.set_self(generate_self(kAlice));
        bob_ks.set_self(generate_self(kBob));
        ManagerOptions opts;
        opts.group = &toy_group();
        opts.auto_renew = false;
        auto clock = [this] { return now; };
        alice = std::make_unique<SessionManager>(alice_ks, wire, opts, clock);
        bob = std::make_unique<SessionManager>(bob_ks, wire, opts, clock);
    }
};

// Would this word explain the observed blinded value? In a prime-order
// group every word does: X* / M^pi always has some discrete log x.
bool consistent(const Group& g, ByteView star, const GroupElement& blind, ByteView word) {
    auto pi = g.scalar_from_password(word, password_context(g));
    auto unblinded = g.div(g.decode(star), g.exp(blind, pi));
    for (std::uint32_t x = 0; x < toy::kOrder; ++x)
        if (g.exp_base(g.scalar_from_u64(x)) == unblinded) return true;
    return false;
}

// Adversary playing the initiator under the honest initiator's name.
struct Impostor {
    PakeSession session;
    ExchangeId xid = ExchangeId::random();
    Fingerprint fpr;
};

}  // namespace

HarnessStats run_adversary(const HarnessConfig& config) {
    const auto& dict = config.dictionary;
    if (dict.empty()) throw InvalidArgument("dictionary must not be empty");
    if (std::set<std::string>(dict.begin(), dict.end()).size() != dict.size())
        throw InvalidArgument("dictionary words must be distinct");

    const Group& g = toy_group();
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, dict.size() - 1);
    auto evil = generate_self(kAlice).fingerprint;

    World w;
    HarnessStats stats;
    stats.strategy = config.strategy;
    stats.sessions = config.sessions;
    stats.min_candidates = dict.size();
    std::vector<TransportEnvelope> tapped;
    w.wire.set_tap([&](const TransportEnvelope& env) { tapped.push_back(env); });

    for (std::size_t n = 0; n < config.sessions; ++n) {
        const std::string& password = dict[pick(rng)];
        auto records_before = w.bob_ks.exchange_count();
        tapped.clear();

        if (config.strategy == Strategy::passive) {
            auto a = w.alice->begin(kBob, as_bytes(password), Role::initiator, true);
            auto b = w.bob->begin(kAlice, as_bytes(password), Role::responder, true);
            for (int round = 0; round < 8 && !(w.alice->result(a) && w.bob->result(b)); ++round) {
                w.bob->pump();
                w.alice->pump();
            }
            ByteView x_star, y_star;
            for (const auto& env : tapped) {
                if (env.flow == Flow::initiator_message) x_star = env.payload;
                if (env.flow == Flow::responder_message) y_star = env.payload;
            }
            std::vector<const std::string*> candidates;
            for (const auto& word : dict)
                if (consistent(g, x_star, g.spec().M, as_bytes(word)) &&
                    consistent(g, y_star, g.spec().N, as_bytes(word)))
                    candidates.push_back(&word);
            stats.min_candidates = std::min(stats.min_candidates, candidates.size());
            if (candidates.size() == 1 && *candidates.front() == password) ++stats.adversary_successes;
        } else {
            const std::string& guess = dict[pick(rng)];
            Impostor imp{PakeSession::start(Role::initiator, kAlice, kBob, as_bytes(guess), g), ExchangeId::random(),
                         evil};
            auto b = w.bob->begin(kAlice, as_bytes(password), Role::responder, true);
            auto x_star = imp.session.outbound_message();
            w.wire.send({imp.xid, Flow::initiator_message, kAlice, kBob, imp.fpr, Bytes(x_star.begin(), x_star.end())});
            w.bob->pump();

            std::optional<TransportEnvelope> flow1, flow3;
            for (auto& env : w.wire.poll(kAlice).envelopes) {
                if (env.flow == Flow::responder_message) flow1 = env;
                if (env.flow == Flow::responder_tag) flow3 = env;
            }
            if (flow1 && flow3) {
                imp.session.finish(flow1->payload);
                auto tag = imp.session.confirmation_tag(imp.xid.bytes(), imp.fpr, *flow1->fingerprint);
                if (config.strategy == Strategy::active_one_guess) {
                    w.wire.send({imp.xid, Flow::initiator_tag, kAlice, kBob, std::nullopt, tag});
                    w.bob->pump();
                    auto r = w.bob->result(b);
                    if (r && r->outcome == Outcome::success) ++stats.adversary_successes;
                } else {
                    // Offline check of the single guess, then silence.
                    if (imp.session.verify_peer_tag(flow3->payload)) ++stats.adversary_successes;
                    w.now += w.bob->policy().timeout.count() + 1;
                    w.bob->pump();
                }
            }
        }

        auto records = w.bob_ks.exchanges_from(records_before);
        if (records.empty()) ++stats.history_gaps;
        for (const auto& rec : records) {
            if (rec.outcome)
                ++stats.honest_outcomes[*rec.outcome];
            else
                ++stats.history_gaps;
        }
    }

    stats.success_rate = config.sessions ? double(stats.adversary_successes) / double(config.sessions) : 0.0;
    stats.expected_rate = config.strategy == Strategy::passive ? 0.0 : 1.0 / double(dict.size());
    if (config.sessions)
        stats.sigma = std::sqrt(stats.expected_rate * (1 - stats.expected_rate) / double(config.sessions));
    return stats;
}

}  // namespace pakemail
