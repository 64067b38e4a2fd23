#include "pakemail/confirm.hpp"

#include <sodium.h>

#include <algorithm>

#include "pakemail/errors.hpp"
#include "pakemail/kdf.hpp"

namespace pakemail {

std::string_view to_string(BindingMode m) {
    return m == BindingMode::in_confirmation ? "confirmation" : "secret";
}

BindingMode binding_mode_from_string(std::string_view s) {
    if (s == "confirmation" || s == "kc") return BindingMode::in_confirmation;
    if (s == "secret" || s == "pi") return BindingMode::in_secret;
    throw InvalidArgument("unknown binding mode: " + std::string(s));
}

DerivedKeys derive_keys(ByteView sk) {
    if (sk.empty()) throw InvalidArgument("empty session key");
    Bytes okm = hkdf({}, sk, as_bytes(kConfirmationInfo), 96);
    DerivedKeys keys;
    std::copy_n(okm.begin(), 32, keys.final_key.begin());
    std::copy_n(okm.begin() + 32, 32, keys.mac_initiator.begin());
    std::copy_n(okm.begin() + 64, 32, keys.mac_responder.begin());
    sodium_memzero(okm.data(), okm.size());
    return keys;
}

Bytes confirmation_message(const Fingerprint& fpr_a, const Fingerprint& fpr_b, ByteView sid, BindingMode mode) {
    Bytes msg;
    if (mode == BindingMode::in_confirmation) {
        append(msg, fpr_a.bytes());
        append(msg, fpr_b.bytes());
    }
    append(msg, sid);
    return msg;
}

Bytes compute_tag(const Key256& mac_key, const Fingerprint& fpr_a, const Fingerprint& fpr_b, ByteView sid,
                  BindingMode mode) {
    auto tag = hmac_sha256(mac_key, confirmation_message(fpr_a, fpr_b, sid, mode));
    return Bytes(tag.begin(), tag.end());
}

Bytes session_id(ByteView exchange_id, ByteView transcript_bytes) {
    Bytes sid;
    append_length_prefixed(sid, exchange_id);
    append(sid, transcript_bytes);
    return sid;
}

Bytes embed_fingerprints_in_secret(ByteView password, const Fingerprint& fpr_a, const Fingerprint& fpr_b) {
    if (password.empty()) throw InvalidArgument("password must be non-empty");
    return length_prefixed({password, fpr_a.bytes(), fpr_b.bytes()});
}

ConfirmationBundle::ConfirmationBundle(ConfirmationBundle&& o) noexcept
    : keys_(o.keys_), tau_self_(std::move(o.tau_self_)), sid_(std::move(o.sid_)), role_(o.role_), mode_(o.mode_),
      state_(o.state_) {
    o.wipe();
}

ConfirmationBundle& ConfirmationBundle::operator=(ConfirmationBundle&& o) noexcept {
    if (this != &o) {
        wipe();
        keys_ = o.keys_;
        tau_self_ = std::move(o.tau_self_);
        sid_ = std::move(o.sid_);
        role_ = o.role_;
        mode_ = o.mode_;
        state_ = o.state_;
        o.wipe();
    }
    return *this;
}

ConfirmationBundle::~ConfirmationBundle() { wipe(); }

void ConfirmationBundle::wipe() { sodium_memzero(&keys_, sizeof keys_); }

bool ConfirmationBundle::same_as(const ConfirmationBundle& o) const {
    return constant_time_equal(keys_.final_key, o.keys_.final_key) &&
           constant_time_equal(keys_.mac_initiator, o.keys_.mac_initiator) &&
           constant_time_equal(keys_.mac_responder, o.keys_.mac_responder) && tau_self_ == o.tau_self_ &&
           sid_ == o.sid_ && role_ == o.role_ && mode_ == o.mode_;
}

ConfirmationBundle derive_bundle(ByteView sk, ByteView sid, const Fingerprint& fpr_a, const Fingerprint& fpr_b,
                                 Role role, BindingMode mode) {
    ConfirmationBundle b;
    b.keys_ = derive_keys(sk);
    b.sid_.assign(sid.begin(), sid.end());
    b.role_ = role;
    b.mode_ = mode;
    b.tau_self_ = compute_tag(b.mac_key(role), fpr_a, fpr_b, sid, mode);
    return b;
}

std::optional<Key256> verify_peer_tag(ConfirmationBundle& bundle, ByteView peer_tag, const Fingerprint& fpr_a,
                                      const Fingerprint& fpr_b, ByteView sid, Role role) {
    if (bundle.state_ != ConfirmationBundle::State::pending) throw StateError("peer tag already verified");
    if (role != bundle.role_) throw InvalidArgument("role does not match the bundle");
    auto expected = compute_tag(bundle.mac_key(other(role)), fpr_a, fpr_b, sid, bundle.mode_);
    bool ok = peer_tag.size() == expected.size() && sodium_memcmp(peer_tag.data(), expected.data(), expected.size()) == 0;
    if (!ok) {
        bundle.state_ = ConfirmationBundle::State::rejected;
        bundle.wipe();
        return std::nullopt;
    }
    bundle.state_ = ConfirmationBundle::State::accepted;
    return bundle.keys_.final_key;
}

}  // namespace pakemail
