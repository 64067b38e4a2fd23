#pragma once

// SPAKE2 between an initiator (blinds with M) and a responder (blinds with
// N), followed by refresh-then-MAC key confirmation:
//
//   initiator                                  responder
//   x <-$ Z_p, X* = g^x * M^pi                 y <-$ Z_p, Y* = g^y * N^pi
//               ---------------- X* --------------->
//               <--------------- Y* ----------------
//   K_A = (Y* / N^pi)^x                        K_B = (X* / M^pi)^y
//   sk = H(A, B, X*, Y*, pi, K)   (each field length-prefixed, H = SHA-256)
//   (K, k_mac_a, k_mac_b) = HKDF(sk)
//   tau_a = MAC(k_mac_a, fpr_A || fpr_B || sid)   tau_b likewise with k_mac_b
//               ---------------- tau_a ------------>
//               <--------------- tau_b -------------
//   accept K iff the peer's tag verifies

#include <optional>
#include <string_view>

#include "pakemail/bytes.hpp"
#include "pakemail/confirm.hpp"
#include "pakemail/group.hpp"
#include "pakemail/types.hpp"

namespace pakemail {

namespace testing {
struct SessionProbe;
}

inline constexpr std::string_view kProtocolVersion = "pakemail/1";

/// Domain-separation context for the password hash: LP(version) || LP(group).
Bytes password_context(const Group& group);

enum class Phase : std::uint8_t { created, started, keyed, confirmed, failed };
std::string_view to_string(Phase p);

/// Canonical (id_A, id_B, X*, Y*); the initiator always fills the A slots.
struct Transcript {
    Bytes id_a;
    Bytes id_b;
    Bytes x_star;
    Bytes y_star;

    Bytes bytes() const;
    bool operator==(const Transcript&) const = default;
};

/// One party's protocol state. Single owner; movable, not copyable. The
/// ephemeral exponent and the password scalar never leave the object.
class PakeSession {
public:
    /// Draws a fresh ephemeral exponent and computes the outbound message.
    /// Throws InvalidArgument on an empty password or identity.
    static PakeSession start(Role role, Identity self, Identity peer, ByteView password,
                             const Group& group = production_group());

    PakeSession(PakeSession&&) noexcept;
    PakeSession& operator=(PakeSession&&) noexcept;
    PakeSession(const PakeSession&) = delete;
    PakeSession& operator=(const PakeSession&) = delete;
    ~PakeSession();

    /// Encoded X* (initiator) or Y* (responder).
    ByteView outbound_message() const { return outbound_; }

    /// Consumes the peer's message and returns sk. Phase must be `started`;
    /// a decode failure moves the session to `failed` and rethrows.
    Bytes finish(ByteView inbound);

    /// Derives the confirmation bundle for this session and returns the own
    /// tag. Requires `keyed`; may be called once.
    Bytes confirmation_tag(ByteView exchange_id, const Fingerprint& fpr_a, const Fingerprint& fpr_b,
                           BindingMode mode = BindingMode::in_confirmation);

    /// Checks the peer's tag; moves to `confirmed` (returning K) or `failed`.
    std::optional<Key256> verify_peer_tag(ByteView peer_tag);

    Phase phase() const { return phase_; }
    Role role() const { return role_; }
    const Identity& self_id() const { return self_; }
    const Identity& peer_id() const { return peer_; }
    const Group& group() const { return *group_; }

    /// Requires phase keyed or later (throws StateError otherwise).
    const Transcript& transcript() const;
    /// Empty until confirmation_tag() has run.
    ByteView sid() const { return sid_; }

private:
    friend struct testing::SessionProbe;

    PakeSession(const Group& group, Role role, Identity self, Identity peer, Scalar pi, Bytes pi_binding,
                Scalar x);
    void wipe();
    void fail();

    const Group* group_;
    Role role_;
    Identity self_;
    Identity peer_;
    Scalar pi_;
    Bytes pi_binding_;
    Scalar x_;
    Bytes outbound_;
    Transcript transcript_;
    Bytes sk_;
    Bytes sid_;
    Fingerprint fpr_a_;
    Fingerprint fpr_b_;
    std::optional<ConfirmationBundle> bundle_;
    Phase phase_ = Phase::created;
};

}  // namespace pakemail
