#include "pakemail/pake.hpp"

#include <sodium.h>

#include "pakemail/errors.hpp"
#include "pakemail/kdf.hpp"

namespace pakemail {

Bytes password_context(const Group& group) {
    return length_prefixed({as_bytes(kProtocolVersion), as_bytes(group.name())});
}

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::created: return "created";
        case Phase::started: return "started";
        case Phase::keyed: return "keyed";
        case Phase::confirmed: return "confirmed";
        case Phase::failed: return "failed";
    }
    return "?";
}

Bytes Transcript::bytes() const { return length_prefixed({id_a, id_b, x_star, y_star}); }

PakeSession PakeSession::start(Role role, Identity self, Identity peer, ByteView password, const Group& group) {
    if (self.empty() || peer.empty()) throw InvalidArgument("identities must be non-empty");
    auto digest = Group::password_digest(password, password_context(group));
    Scalar pi = group.scalar_from_wide(digest);
    Bytes binding(digest.begin(), digest.end());
    sodium_memzero(digest.data(), digest.size());
    return PakeSession(group, role, std::move(self), std::move(peer), pi, std::move(binding), group.random_scalar());
}

PakeSession::PakeSession(const Group& group, Role role, Identity self, Identity peer, Scalar pi, Bytes pi_binding,
                         Scalar x)
    : group_(&group), role_(role), self_(std::move(self)), peer_(std::move(peer)), pi_(pi),
      pi_binding_(std::move(pi_binding)), x_(x) {
    if (self_.empty() || peer_.empty()) throw InvalidArgument("identities must be non-empty");
    const auto& blind = role_ == Role::initiator ? group.spec().M : group.spec().N;
    auto star = group.mul(group.exp_base(x_), group.exp(blind, pi_));
    outbound_ = group.encode(star);
    phase_ = Phase::started;
}

PakeSession::PakeSession(PakeSession&& o) noexcept
    : group_(o.group_), role_(o.role_), self_(std::move(o.self_)), peer_(std::move(o.peer_)), pi_(o.pi_),
      pi_binding_(std::move(o.pi_binding_)), x_(o.x_), outbound_(std::move(o.outbound_)),
      transcript_(std::move(o.transcript_)), sk_(std::move(o.sk_)), sid_(std::move(o.sid_)), fpr_a_(o.fpr_a_),
      fpr_b_(o.fpr_b_), bundle_(std::move(o.bundle_)), phase_(o.phase_) {
    o.wipe();
}

PakeSession& PakeSession::operator=(PakeSession&& o) noexcept {
    if (this != &o) {
        wipe();
        group_ = o.group_;
        role_ = o.role_;
        self_ = std::move(o.self_);
        peer_ = std::move(o.peer_);
        pi_ = o.pi_;
        pi_binding_ = std::move(o.pi_binding_);
        x_ = o.x_;
        outbound_ = std::move(o.outbound_);
        transcript_ = std::move(o.transcript_);
        sk_ = std::move(o.sk_);
        sid_ = std::move(o.sid_);
        fpr_a_ = o.fpr_a_;
        fpr_b_ = o.fpr_b_;
        bundle_ = std::move(o.bundle_);
        phase_ = o.phase_;
        o.wipe();
    }
    return *this;
}

PakeSession::~PakeSession() { wipe(); }

void PakeSession::wipe() {
    Scalar zero;
    sodium_memzero(&pi_, sizeof pi_);
    sodium_memzero(&x_, sizeof x_);
    pi_ = zero;
    x_ = zero;
    if (!pi_binding_.empty()) sodium_memzero(pi_binding_.data(), pi_binding_.size());
    if (!sk_.empty()) sodium_memzero(sk_.data(), sk_.size());
    pi_binding_.clear();
    sk_.clear();
}

void PakeSession::fail() {
    wipe();
    bundle_.reset();
    phase_ = Phase::failed;
}

Bytes PakeSession::finish(ByteView inbound) {
    if (phase_ != Phase::started) throw StateError("finish() requires phase started, have " + std::string(to_string(phase_)));
    const Group& g = *group_;
    GroupElement peer_star;
    try {
        peer_star = g.decode(inbound);
    } catch (const DecodeError&) {
        fail();
        throw;
    }
    const auto& peer_blind = role_ == Role::initiator ? g.spec().N : g.spec().M;
    auto shared = g.exp(g.div(peer_star, g.exp(peer_blind, pi_)), x_);

    Bytes own_star = outbound_;
    Bytes other_star = g.encode(peer_star);
    if (role_ == Role::initiator) {
        transcript_ = {to_bytes(self_.str()), to_bytes(peer_.str()), own_star, other_star};
    } else {
        transcript_ = {to_bytes(peer_.str()), to_bytes(self_.str()), other_star, own_star};
    }
    Bytes shared_bytes = g.encode(shared);
    Bytes input = length_prefixed(
        {transcript_.id_a, transcript_.id_b, transcript_.x_star, transcript_.y_star, pi_binding_, shared_bytes});
    auto digest = sha256(input);
    sodium_memzero(input.data(), input.size());
    sodium_memzero(shared_bytes.data(), shared_bytes.size());
    sodium_memzero(&x_, sizeof x_);
    sk_.assign(digest.begin(), digest.end());
    sodium_memzero(digest.data(), digest.size());
    phase_ = Phase::keyed;
    return sk_;
}

const Transcript& PakeSession::transcript() const {
    if (phase_ != Phase::keyed && phase_ != Phase::confirmed) throw StateError("transcript not available");
    return transcript_;
}

Bytes PakeSession::confirmation_tag(ByteView exchange_id, const Fingerprint& fpr_a, const Fingerprint& fpr_b,
                                    BindingMode mode) {
    if (phase_ != Phase::keyed) throw StateError("confirmation_tag() requires phase keyed");
    if (bundle_) throw StateError("confirmation tag already derived");
    sid_ = session_id(exchange_id, transcript_.bytes());
    fpr_a_ = fpr_a;
    fpr_b_ = fpr_b;
    bundle_.emplace(derive_bundle(sk_, sid_, fpr_a, fpr_b, role_, mode));
    auto tag = bundle_->own_tag();
    return Bytes(tag.begin(), tag.end());
}

std::optional<Key256> PakeSession::verify_peer_tag(ByteView peer_tag) {
    if (phase_ != Phase::keyed || !bundle_) throw StateError("verify_peer_tag() requires a derived confirmation tag");
    auto key = pakemail::verify_peer_tag(*bundle_, peer_tag, fpr_a_, fpr_b_, sid_, role_);
    if (!key) {
        fail();
        return std::nullopt;
    }
    phase_ = Phase::confirmed;
    return key;
}

}  // namespace pakemail
