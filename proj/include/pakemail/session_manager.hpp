#pragma once

// Drives complete four-flow exchanges over a transport.
//
//   flow 0  initiator -> responder   X*, fpr_A
//   flow 1  responder -> initiator   Y*, fpr_B
//   flow 3  responder -> initiator   tau_b (sent right after flow 1)
//   flow 2  initiator -> responder   tau_a
//
// Flows may arrive duplicated or out of order. Each exchange ends in
// exactly one recorded outcome; an exchange whose peer goes quiet ends as
// aborted-by-timeout rather than disappearing, so guess-and-abort probing
// shows up in the history.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pakemail/confirm.hpp"
#include "pakemail/envelope.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/group.hpp"
#include "pakemail/keystore.hpp"
#include "pakemail/pake.hpp"

namespace pakemail {

/// Too many consecutive failures with this peer; needs an operator override.
class LockoutError : public Error {
public:
    using Error::Error;
};

/// No stored chain key for the peer, so renewal needs a manual exchange.
class NoChainError : public Error {
public:
    using Error::Error;
};

struct AttemptPolicy {
    std::uint32_t max_failed_attempts = 3;
    std::chrono::milliseconds timeout = std::chrono::seconds(30);

    /// 72 h for email backends (maildir, IMAP), 30 s for anything else.
    static AttemptPolicy for_backend(const TransportBackend& backend);
};

struct ManagerOptions {
    std::optional<AttemptPolicy> policy;  // default: AttemptPolicy::for_backend
    BindingMode mode = BindingMode::in_confirmation;
    const Group* group = nullptr;  // default: production group
    /// Answer a flow 0 from a known peer that carries an unfamiliar
    /// fingerprint with the stored chain key, without any prompt.
    bool auto_renew = true;
    std::chrono::milliseconds min_poll_interval{5};
    std::chrono::milliseconds max_poll_interval{200};
};

using Clock = std::function<Timestamp()>;
Timestamp system_clock_ms();

struct ExchangeResult {
    ExchangeId id;
    Identity peer;
    Role role = Role::initiator;
    Outcome outcome = Outcome::protocol_error;
    bool chained = false;
    /// Set only on success.
    std::optional<Key256> key;
    std::optional<Fingerprint> peer_fingerprint;
    std::string detail;

    /// A chained renewal whose stored keys no longer agree.
    bool chain_mismatch() const { return chained && outcome == Outcome::password_mismatch; }
};

struct DataMessage {
    Identity sender;
    ExchangeId id;
    Bytes plaintext;
};

/// One manager per client identity. All public methods are serialised by an
/// internal mutex; exchanges with distinct peers may be in flight together.
class SessionManager {
public:
    using AttemptId = std::uint64_t;

    /// Throws StateError when the keystore has no own key pair.
    SessionManager(Keystore& keystore, TransportBackend& backend, ManagerOptions options = {},
                   Clock clock = system_clock_ms);
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    const Identity& self() const { return self_.identity; }
    const Fingerprint& fingerprint() const { return self_.fingerprint; }
    const AttemptPolicy& policy() const { return policy_; }

    /// Starts one exchange without blocking. With no role given, the
    /// lexicographically smaller identity initiates. Throws LockoutError,
    /// InvalidArgument, or TransportError from the first send.
    AttemptId begin(const Identity& peer, ByteView password, std::optional<Role> role = std::nullopt,
                    bool override_lockout = false);
    /// Same, using the stored chain key (hex) as the password. Throws
    /// NoChainError when none is stored.
    AttemptId begin_renewal(const Identity& peer, std::optional<Role> role = std::nullopt,
                            bool override_lockout = false);

    /// Polls the transport once, advances every live exchange, and expires
    /// overdue ones. Poll failures are kept as warnings.
    void pump();

    std::optional<ExchangeResult> result(AttemptId id) const;
    /// Pumps with backoff until the attempt finishes.
    ExchangeResult wait(AttemptId id);

    ExchangeResult authenticate(const Identity& peer, ByteView password, std::optional<Role> role = std::nullopt,
                                bool override_lockout = false);
    ExchangeResult reauthenticate_chained(const Identity& peer, std::optional<Role> role = std::nullopt);

    /// Every outcome reached so far, including auto-renewals, in order.
    std::vector<ExchangeResult> completed() const;
    std::vector<std::string> take_warnings();
    std::size_t live_exchanges() const;

    /// Seals `plaintext` under the peer's confirmed key and sends it as a
    /// data flow. Throws StateError when the peer is not authenticated.
    ExchangeId send_data(const Identity& peer, ByteView plaintext);
    /// Pumps once and opens every data message received so far.
    std::vector<DataMessage> receive_data();

private:
    struct Live;

    Role resolve_role(const Identity& peer, std::optional<Role> role) const;
    PeerRecord check_lockout(const Identity& peer, bool override_lockout) const;
    void admit(Live& live, PeerRecord rec, bool override_lockout);
    AttemptId begin_locked(const Identity& peer, Bytes password, Role role, bool override_lockout, bool chained);
    bool try_claim_stashed(Live& live);
    void claim_flow0(Live& live, const TransportEnvelope& env);
    void handle(const TransportEnvelope& env);
    void dispatch(Live& live, const TransportEnvelope& env);
    void on_peer_tag(Live& live, ByteView tag);
    void finish(Live& live, Outcome outcome, std::string detail, std::optional<Key256> key = std::nullopt);
    void expire();
    void reap();
    void deliver(Live& live, const TransportEnvelope& env);
    void record(const Live& live, std::optional<Outcome> outcome = std::nullopt, const std::string& detail = "");
    Bytes effective_password(const Live& live, const Fingerprint& fpr_a, const Fingerprint& fpr_b) const;

    mutable std::mutex mu_;
    Keystore& keystore_;
    TransportBackend& backend_;
    ManagerOptions options_;
    AttemptPolicy policy_;
    const Group* group_;
    Clock clock_;
    SelfRecord self_;

    AttemptId next_attempt_ = 1;
    std::map<AttemptId, std::unique_ptr<Live>> live_;
    std::map<AttemptId, ExchangeResult> results_;
    std::vector<ExchangeResult> completed_;
    std::vector<std::string> warnings_;
    std::set<ExchangeId> orphans_;
};

/// Key used to seal data messages, derived from a confirmed final key.
Key256 data_key(const Key256& final_key);

}  // namespace pakemail
