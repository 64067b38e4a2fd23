#pragma once

// Refresh-then-MAC key confirmation: the pre-confirmation key sk is
// expanded into a final key K and one MAC key per direction, then each side
// MACs the binding data and checks the peer's tag.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "pakemail/bytes.hpp"
#include "pakemail/types.hpp"

namespace pakemail {

using Key256 = std::array<std::uint8_t, 32>;

inline constexpr std::string_view kConfirmationInfo = "pakemail/1 key-confirmation";
inline constexpr std::size_t kTagSize = 32;

/// Where the public-key fingerprints enter the protocol.
enum class BindingMode : std::uint8_t {
    /// Tags cover fpr_A || fpr_B || sid.
    in_confirmation,
    /// Fingerprints are folded into the password; tags cover sid only.
    in_secret,
};

std::string_view to_string(BindingMode m);
BindingMode binding_mode_from_string(std::string_view s);

struct DerivedKeys {
    Key256 final_key;
    Key256 mac_initiator;
    Key256 mac_responder;
};

/// HKDF-SHA256(salt = empty, ikm = sk, info = kConfirmationInfo), 96 bytes
/// split as K || k_mac_a || k_mac_b.
DerivedKeys derive_keys(ByteView sk);

/// Bytes covered by a confirmation tag.
Bytes confirmation_message(const Fingerprint& fpr_a, const Fingerprint& fpr_b, ByteView sid, BindingMode mode);

Bytes compute_tag(const Key256& mac_key, const Fingerprint& fpr_a, const Fingerprint& fpr_b, ByteView sid,
                  BindingMode mode);

/// sid = LP(exchange id) || transcript bytes.
Bytes session_id(ByteView exchange_id, ByteView transcript_bytes);

/// LP(password) || LP(fpr_A) || LP(fpr_B); feed the result to the password hash.
Bytes embed_fingerprints_in_secret(ByteView password, const Fingerprint& fpr_a, const Fingerprint& fpr_b);

/// Keys and own tag for one side of one session. Single use: the peer tag
/// may be checked once, and the final key leaves the bundle only through a
/// successful check.
class ConfirmationBundle {
public:
    enum class State : std::uint8_t { pending, accepted, rejected };

    ConfirmationBundle(const ConfirmationBundle&) = delete;
    ConfirmationBundle& operator=(const ConfirmationBundle&) = delete;
    ConfirmationBundle(ConfirmationBundle&&) noexcept;
    ConfirmationBundle& operator=(ConfirmationBundle&&) noexcept;
    ~ConfirmationBundle();

    Role role() const { return role_; }
    BindingMode mode() const { return mode_; }
    ByteView sid() const { return sid_; }
    ByteView own_tag() const { return tau_self_; }
    const Key256& mac_key(Role direction) const {
        return direction == Role::initiator ? keys_.mac_initiator : keys_.mac_responder;
    }
    State state() const { return state_; }

    /// Same keys, tag and sid (compares secrets in constant time).
    bool same_as(const ConfirmationBundle& other) const;

private:
    friend ConfirmationBundle derive_bundle(ByteView, ByteView, const Fingerprint&, const Fingerprint&, Role,
                                            BindingMode);
    friend std::optional<Key256> verify_peer_tag(ConfirmationBundle&, ByteView, const Fingerprint&,
                                                 const Fingerprint&, ByteView, Role);

    ConfirmationBundle() = default;
    void wipe();

    DerivedKeys keys_{};
    Bytes tau_self_;
    Bytes sid_;
    Role role_ = Role::initiator;
    BindingMode mode_ = BindingMode::in_confirmation;
    State state_ = State::pending;
};

/// Throws InvalidArgument on an empty sk.
ConfirmationBundle derive_bundle(ByteView sk, ByteView sid, const Fingerprint& fpr_a, const Fingerprint& fpr_b,
                                 Role role, BindingMode mode = BindingMode::in_confirmation);

/// Recomputes the peer's tag under the peer-direction MAC key and compares
/// without early exit. Returns K on a match. A second call throws StateError;
/// `role` must be the bundle's own role.
std::optional<Key256> verify_peer_tag(ConfirmationBundle& bundle, ByteView peer_tag, const Fingerprint& fpr_a,
                                      const Fingerprint& fpr_b, ByteView sid, Role role);

}  // namespace pakemail
