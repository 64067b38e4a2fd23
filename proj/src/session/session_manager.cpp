#include "pakemail/session_manager.hpp"

#include <sodium.h>

#include <algorithm>
#include <thread>

#include "pakemail/kdf.hpp"
#include "pakemail/sealed.hpp"

namespace pakemail {

namespace {

constexpr std::string_view kDataInfo = "pakemail/1 data";

Bytes data_associated(const Identity& sender, const Identity& recipient, const ExchangeId& id) {
    return length_prefixed({sender.bytes(), recipient.bytes(), id.bytes()});
}

PeerRecord new_peer(const Identity& id) {
    PeerRecord r;
    r.identity = id;
    return r;
}

bool is_email_backend(const TransportBackend& backend) {
    auto d = backend.describe();
    return d.rfind("maildir:", 0) == 0 || d.rfind("imap-smtp", 0) == 0;
}

}  // namespace

AttemptPolicy AttemptPolicy::for_backend(const TransportBackend& backend) {
    AttemptPolicy p;
    p.timeout = is_email_backend(backend) ? std::chrono::milliseconds(std::chrono::hours(72))
                                          : std::chrono::milliseconds(std::chrono::seconds(30));
    return p;
}

Timestamp system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

Key256 data_key(const Key256& final_key) {
    auto okm = hkdf({}, final_key, as_bytes(kDataInfo), 32);
    Key256 k;
    std::copy(okm.begin(), okm.end(), k.begin());
    sodium_memzero(okm.data(), okm.size());
    return k;
}

struct SessionManager::Live {
    AttemptId attempt = 0;
    Identity peer;
    Role role = Role::initiator;
    bool chained = false;
    BindingMode mode = BindingMode::in_confirmation;
    Bytes password;
    std::optional<ExchangeId> xid;
    std::optional<PakeSession> session;
    std::optional<Fingerprint> peer_fpr;
    std::optional<Bytes> early_tag;
    std::set<Flow> seen;
    std::vector<TransportEnvelope> outbox;
    Timestamp started_at = 0;
    Timestamp deadline = 0;
    std::uint64_t attempt_count = 0;
    bool done = false;

    ~Live() {
        if (!password.empty()) sodium_memzero(password.data(), password.size());
    }
};

SessionManager::SessionManager(Keystore& keystore, TransportBackend& backend, ManagerOptions options, Clock clock)
    : keystore_(keystore), backend_(backend), options_(options),
      policy_(options.policy.value_or(AttemptPolicy::for_backend(backend))),
      group_(options.group ? options.group : &production_group()), clock_(std::move(clock)) {
    auto self = keystore_.self();
    if (!self) throw StateError("keystore has no own key pair; run init first");
    self_ = std::move(*self);
    // Exchanges left open by an earlier process lost their ephemeral secret;
    // they can only end by timing out.
    for (const auto& rec : keystore_.exchanges())
        if (!rec.outcome) orphans_.insert(rec.id);
}

SessionManager::~SessionManager() = default;

Role SessionManager::resolve_role(const Identity& peer, std::optional<Role> role) const {
    if (peer == self_.identity) throw InvalidArgument("cannot authenticate with oneself");
    if (role) return *role;
    return self_.identity < peer ? Role::initiator : Role::responder;
}

PeerRecord SessionManager::check_lockout(const Identity& peer, bool override_lockout) const {
    auto rec = keystore_.peer(peer).value_or(new_peer(peer));
    if (!override_lockout && rec.consecutive_failures >= policy_.max_failed_attempts)
        throw LockoutError("locked out: " + std::to_string(rec.consecutive_failures) +
                           " consecutive failed exchanges with " + peer.str() + "; an explicit override is required");
    return rec;
}

void SessionManager::admit(Live& live, PeerRecord rec, bool override_lockout) {
    if (override_lockout) rec.consecutive_failures = 0;
    rec.attempts += 1;
    keystore_.put_peer(rec);
    live.attempt_count = rec.attempts;
}

Bytes SessionManager::effective_password(const Live& live, const Fingerprint& fpr_a, const Fingerprint& fpr_b) const {
    if (live.mode == BindingMode::in_secret) return embed_fingerprints_in_secret(live.password, fpr_a, fpr_b);
    return live.password;
}

SessionManager::AttemptId SessionManager::begin(const Identity& peer, ByteView password, std::optional<Role> role,
                                                bool override_lockout) {
    if (password.empty()) throw InvalidArgument("password must be non-empty");
    std::lock_guard lock(mu_);
    return begin_locked(peer, Bytes(password.begin(), password.end()), resolve_role(peer, role), override_lockout,
                        false);
}

SessionManager::AttemptId SessionManager::begin_renewal(const Identity& peer, std::optional<Role> role,
                                                        bool override_lockout) {
    std::lock_guard lock(mu_);
    auto rec = keystore_.peer(peer);
    if (!rec || !rec->chain_key)
        throw NoChainError("no stored chain key for " + peer.str() + "; authenticate manually with a password");
    auto hex = to_hex(*rec->chain_key);
    return begin_locked(peer, to_bytes(hex), resolve_role(peer, role), override_lockout, true);
}

SessionManager::AttemptId SessionManager::begin_locked(const Identity& peer, Bytes password, Role role,
                                                       bool override_lockout, bool chained) {
    auto rec = check_lockout(peer, override_lockout);
    auto live = std::make_unique<Live>();
    live->attempt = next_attempt_++;
    live->peer = peer;
    live->role = role;
    live->chained = chained;
    live->mode = options_.mode;
    live->password = std::move(password);
    live->started_at = clock_();
    live->deadline = live->started_at + policy_.timeout.count();

    if (role == Role::initiator) {
        if (live->mode == BindingMode::in_secret) {
            if (!rec.fingerprint)
                throw InvalidArgument("in-secret binding needs the peer fingerprint in the keystore beforehand");
            live->peer_fpr = rec.fingerprint;
        }
        live->xid = ExchangeId::random();
        const auto& fpr_b = live->peer_fpr.value_or(Fingerprint());
        live->session.emplace(PakeSession::start(Role::initiator, self_.identity, peer,
                                                 effective_password(*live, self_.fingerprint, fpr_b), *group_));
        TransportEnvelope env{*live->xid, Flow::initiator_message, self_.identity, peer, self_.fingerprint,
                              Bytes(live->session->outbound_message().begin(), live->session->outbound_message().end())};
        // A failed first send leaves no trace beyond the exception.
        backend_.send(env);
        live->seen.insert(Flow::initiator_message);
        admit(*live, rec, override_lockout);
        record(*live);
    } else {
        admit(*live, rec, override_lockout);
    }
    auto id = live->attempt;
    Live& ref = *live;
    live_[id] = std::move(live);
    if (ref.role == Role::responder) try_claim_stashed(ref);
    reap();
    return id;
}

void SessionManager::record(const Live& live, std::optional<Outcome> outcome, const std::string& detail) {
    if (!live.xid) return;
    ExchangeRecord rec;
    rec.id = *live.xid;
    rec.peer = live.peer;
    rec.role = live.role;
    rec.phase = live.session ? live.session->phase() : Phase::failed;
    rec.started_at = live.started_at;
    rec.deadline = live.deadline;
    rec.attempt_count = live.attempt_count;
    rec.chained = live.chained;
    rec.mode = live.mode;
    rec.outcome = outcome;
    rec.detail = detail;
    if (outcome) rec.ended_at = clock_();
    keystore_.put_exchange(rec);
}

void SessionManager::deliver(Live& live, const TransportEnvelope& env) {
    try {
        backend_.send(env);
    } catch (const TransportError& e) {
        warnings_.push_back("send of flow " + std::to_string(to_int(env.flow)) + " failed: " + e.what() +
                            (e.retriable() ? " (will retry)" : ""));
        if (e.retriable()) live.outbox.push_back(env);
    }
}

bool SessionManager::try_claim_stashed(Live& live) {
    for (const auto& s : keystore_.stash()) {
        const auto& env = s.envelope;
        if (env.flow != Flow::initiator_message || env.sender != live.peer) continue;
        if (keystore_.exchange(env.exchange_id)) {
            keystore_.stash_remove(env);
            continue;
        }
        keystore_.stash_remove(env);
        claim_flow0(live, env);
        return true;
    }
    return false;
}

void SessionManager::claim_flow0(Live& live, const TransportEnvelope& env) {
    if (!env.fingerprint) {
        live.xid = env.exchange_id;
        finish(live, Outcome::protocol_error, "initiator message without fingerprint");
        return;
    }
    live.xid = env.exchange_id;
    live.seen.insert(Flow::initiator_message);
    live.peer_fpr = env.fingerprint;
    // The responder's window restarts once the peer has shown up.
    live.deadline = clock_() + policy_.timeout.count();
    const Fingerprint& fpr_a = *env.fingerprint;
    const Fingerprint& fpr_b = self_.fingerprint;
    live.session.emplace(PakeSession::start(Role::responder, self_.identity, live.peer,
                                            effective_password(live, fpr_a, fpr_b), *group_));
    try {
        live.session->finish(env.payload);
    } catch (const DecodeError& e) {
        finish(live, Outcome::protocol_error, std::string("bad initiator message: ") + e.what());
        return;
    }
    auto tag = live.session->confirmation_tag(live.xid->bytes(), fpr_a, fpr_b, live.mode);
    auto y_star = live.session->outbound_message();
    record(live);
    deliver(live, {*live.xid, Flow::responder_message, self_.identity, live.peer, self_.fingerprint,
                   Bytes(y_star.begin(), y_star.end())});
    deliver(live, {*live.xid, Flow::responder_tag, self_.identity, live.peer, std::nullopt, tag});
    if (live.early_tag) {
        auto early = std::move(*live.early_tag);
        live.early_tag.reset();
        on_peer_tag(live, early);
    }
}

void SessionManager::on_peer_tag(Live& live, ByteView tag) {
    if (tag.size() != kTagSize) {
        finish(live, Outcome::protocol_error, "confirmation tag has wrong length");
        return;
    }
    auto key = live.session->verify_peer_tag(tag);
    if (key) {
        finish(live, Outcome::success, "", key);
    } else {
        finish(live, Outcome::password_mismatch,
               live.chained ? "chain keys disagree; authenticate manually with a password"
                            : "confirmation tag did not verify");
    }
}

void SessionManager::finish(Live& live, Outcome outcome, std::string detail, std::optional<Key256> key) {
    if (live.done) return;
    live.done = true;
    if (!live.xid) live.xid = ExchangeId::random();
    record(live, outcome, detail);

    auto rec = keystore_.peer(live.peer).value_or(new_peer(live.peer));
    if (outcome == Outcome::success) {
        rec.status = PeerStatus::authenticated;
        rec.fingerprint = live.peer_fpr;
        rec.chain_key = key;
        rec.consecutive_failures = 0;
        rec.generation += 1;
        rec.authenticated_at = clock_();
    } else {
        rec.consecutive_failures += 1;
    }
    keystore_.put_peer(rec);

    ExchangeResult r;
    r.id = *live.xid;
    r.peer = live.peer;
    r.role = live.role;
    r.outcome = outcome;
    r.chained = live.chained;
    if (outcome == Outcome::success) {
        r.key = key;
        r.peer_fingerprint = live.peer_fpr;
    }
    r.detail = std::move(detail);
    results_[live.attempt] = r;
    completed_.push_back(std::move(r));
    live.session.reset();
    live.outbox.clear();
}

void SessionManager::reap() {
    for (auto it = live_.begin(); it != live_.end();) {
        if (it->second->done)
            it = live_.erase(it);
        else
            ++it;
    }
}

void SessionManager::dispatch(Live& live, const TransportEnvelope& env) {
    if (env.sender != live.peer) {
        warnings_.push_back("flow for exchange " + env.exchange_id.hex() + " from unexpected sender " + env.sender.str());
        return;
    }
    if (!live.seen.insert(env.flow).second) return;  // duplicate delivery

    if (live.role == Role::initiator) {
        if (env.flow == Flow::responder_message) {
            if (!env.fingerprint) {
                finish(live, Outcome::protocol_error, "responder message without fingerprint");
                return;
            }
            if (live.mode == BindingMode::in_confirmation) live.peer_fpr = env.fingerprint;
            try {
                live.session->finish(env.payload);
            } catch (const DecodeError& e) {
                finish(live, Outcome::protocol_error, std::string("bad responder message: ") + e.what());
                return;
            }
            auto tag = live.session->confirmation_tag(live.xid->bytes(), self_.fingerprint, *live.peer_fpr, live.mode);
            record(live);
            deliver(live, {*live.xid, Flow::initiator_tag, self_.identity, live.peer, std::nullopt, tag});
            if (live.early_tag) {
                auto early = std::move(*live.early_tag);
                live.early_tag.reset();
                on_peer_tag(live, early);
            }
        } else if (env.flow == Flow::responder_tag) {
            if (live.session && live.session->phase() == Phase::keyed)
                on_peer_tag(live, env.payload);
            else
                live.early_tag = env.payload;  // arrived before flow 1
        } else {
            warnings_.push_back("initiator ignored flow " + std::to_string(to_int(env.flow)));
        }
    } else {
        if (env.flow == Flow::initiator_tag) {
            if (live.session && live.session->phase() == Phase::keyed)
                on_peer_tag(live, env.payload);
            else
                live.early_tag = env.payload;
        } else {
            warnings_.push_back("responder ignored flow " + std::to_string(to_int(env.flow)));
        }
    }
}

void SessionManager::handle(const TransportEnvelope& env) {
    if (env.recipient != self_.identity) {
        warnings_.push_back("dropped envelope addressed to " + env.recipient.str());
        return;
    }
    if (env.flow == Flow::data) {
        keystore_.stash_add(env, clock_());
        return;
    }
    for (auto& [_, live] : live_) {
        if (!live->done && live->xid && *live->xid == env.exchange_id) {
            dispatch(*live, env);
            return;
        }
    }
    if (keystore_.exchange(env.exchange_id)) return;  // late duplicate of a finished exchange

    if (env.flow != Flow::initiator_message) {
        warnings_.push_back("flow " + std::to_string(to_int(env.flow)) + " for unknown exchange " +
                            env.exchange_id.hex());
        return;
    }
    for (auto& [_, live] : live_) {
        if (!live->done && !live->xid && live->role == Role::responder && live->peer == env.sender) {
            claim_flow0(*live, env);
            return;
        }
    }
    if (options_.auto_renew) {
        auto rec = keystore_.peer(env.sender);
        bool known = rec && rec->status == PeerStatus::authenticated && rec->chain_key;
        bool new_key = known && rec->fingerprint != env.fingerprint;
        if (new_key && rec->consecutive_failures < policy_.max_failed_attempts) {
            begin_locked(env.sender, to_bytes(to_hex(*rec->chain_key)), Role::responder, false, true);
            for (auto& [_, live] : live_) {
                if (!live->done && !live->xid && live->chained && live->peer == env.sender) {
                    claim_flow0(*live, env);
                    return;
                }
            }
        }
    }
    keystore_.stash_add(env, clock_());
}

void SessionManager::expire() {
    auto now = clock_();
    for (auto& [_, live] : live_) {
        if (live->done || now < live->deadline) continue;
        finish(*live, Outcome::aborted_by_timeout,
               live->xid ? "peer stopped responding" : "no initiator message arrived");
    }
    for (auto it = orphans_.begin(); it != orphans_.end();) {
        auto rec = keystore_.exchange(*it);
        if (!rec || rec->outcome) {
            it = orphans_.erase(it);
            continue;
        }
        if (now < rec->deadline) {
            ++it;
            continue;
        }
        rec->outcome = Outcome::aborted_by_timeout;
        rec->ended_at = now;
        rec->detail = "exchange state was lost when the client restarted";
        keystore_.put_exchange(*rec);
        auto peer = keystore_.peer(rec->peer).value_or(new_peer(rec->peer));
        peer.consecutive_failures += 1;
        keystore_.put_peer(peer);
        ExchangeResult r{rec->id, rec->peer, rec->role, Outcome::aborted_by_timeout, rec->chained, {}, {}, rec->detail};
        completed_.push_back(r);
        it = orphans_.erase(it);
    }
    for (const auto& s : keystore_.stash()) {
        if (s.envelope.flow != Flow::data && now - s.received_at >= policy_.timeout.count())
            keystore_.stash_remove(s.envelope);
    }
}

void SessionManager::pump() {
    std::lock_guard lock(mu_);
    for (auto& [_, live] : live_) {
        if (live->done || live->outbox.empty()) continue;
        auto pending = std::move(live->outbox);
        live->outbox.clear();
        for (const auto& env : pending) deliver(*live, env);
    }
    PollResult polled;
    try {
        polled = backend_.poll(self_.identity);
    } catch (const TransportError& e) {
        warnings_.push_back(std::string("poll failed: ") + e.what());
    }
    for (auto& w : polled.warnings) warnings_.push_back(std::move(w));
    for (const auto& env : polled.envelopes) handle(env);
    expire();
    reap();
}

std::optional<ExchangeResult> SessionManager::result(AttemptId id) const {
    std::lock_guard lock(mu_);
    auto it = results_.find(id);
    if (it == results_.end()) return std::nullopt;
    return it->second;
}

ExchangeResult SessionManager::wait(AttemptId id) {
    auto delay = options_.min_poll_interval;
    for (;;) {
        pump();
        if (auto r = result(id)) return *r;
        std::this_thread::sleep_for(delay);
        delay = std::min(options_.max_poll_interval, delay * 2);
    }
}

ExchangeResult SessionManager::authenticate(const Identity& peer, ByteView password, std::optional<Role> role,
                                            bool override_lockout) {
    return wait(begin(peer, password, role, override_lockout));
}

ExchangeResult SessionManager::reauthenticate_chained(const Identity& peer, std::optional<Role> role) {
    return wait(begin_renewal(peer, role));
}

std::vector<ExchangeResult> SessionManager::completed() const {
    std::lock_guard lock(mu_);
    return completed_;
}

std::vector<std::string> SessionManager::take_warnings() {
    std::lock_guard lock(mu_);
    return std::exchange(warnings_, {});
}

std::size_t SessionManager::live_exchanges() const {
    std::lock_guard lock(mu_);
    return live_.size();
}

ExchangeId SessionManager::send_data(const Identity& peer, ByteView plaintext) {
    std::lock_guard lock(mu_);
    auto rec = keystore_.peer(peer);
    if (!rec || rec->status != PeerStatus::authenticated || !rec->chain_key)
        throw StateError("refusing to send: " + peer.str() + " is not authenticated");
    TransportEnvelope env;
    env.exchange_id = ExchangeId::random();
    env.flow = Flow::data;
    env.sender = self_.identity;
    env.recipient = peer;
    auto key = data_key(*rec->chain_key);
    env.payload = seal(key, plaintext, data_associated(env.sender, env.recipient, env.exchange_id)).serialize();
    sodium_memzero(key.data(), key.size());
    backend_.send(env);
    return env.exchange_id;
}

std::vector<DataMessage> SessionManager::receive_data() {
    pump();
    std::lock_guard lock(mu_);
    std::vector<DataMessage> out;
    for (const auto& s : keystore_.stash()) {
        const auto& env = s.envelope;
        if (env.flow != Flow::data) continue;
        auto rec = keystore_.peer(env.sender);
        if (!rec || !rec->chain_key) {
            warnings_.push_back("data message from unauthenticated " + env.sender.str() + " kept unread");
            continue;
        }
        auto key = data_key(*rec->chain_key);
        std::optional<Bytes> plain;
        try {
            plain = open(key, SealedMessage::parse(env.payload), data_associated(env.sender, env.recipient, env.exchange_id));
        } catch (const DecodeError&) {
        }
        sodium_memzero(key.data(), key.size());
        if (!plain) {
            warnings_.push_back("data message " + env.exchange_id.hex() + " from " + env.sender.str() +
                                " does not open under the current key");
            continue;
        }
        out.push_back({env.sender, env.exchange_id, std::move(*plain)});
        keystore_.stash_remove(env);
    }
    return out;
}

}  // namespace pakemail
