#include "pakemail/types.hpp"

#include <algorithm>

#include "pakemail/errors.hpp"

namespace pakemail {

std::string_view to_string(Role r) { return r == Role::initiator ? "initiator" : "responder"; }

Role role_from_string(std::string_view s) {
    if (s == "initiator") return Role::initiator;
    if (s == "responder") return Role::responder;
    throw InvalidArgument("unknown role: " + std::string(s));
}

Identity::Identity(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw InvalidArgument("identity must be non-empty");
}

Fingerprint Fingerprint::from_bytes(ByteView b) {
    if (b.size() != kFingerprintSize)
        throw InvalidArgument("fingerprint must be 20 bytes, got " + std::to_string(b.size()));
    Array a;
    std::copy(b.begin(), b.end(), a.begin());
    return Fingerprint(a);
}

Fingerprint Fingerprint::from_hex(std::string_view hex) {
    if (!is_hex(hex, 2 * kFingerprintSize)) throw InvalidArgument("fingerprint must be 40 hex digits");
    return from_bytes(pakemail::from_hex(hex));
}

Fingerprint Fingerprint::with_bit_flipped(std::size_t bit) const {
    if (bit >= 8 * kFingerprintSize) throw InvalidArgument("bit index out of range");
    Array a = bytes_;
    a[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    return Fingerprint(a);
}

}  // namespace pakemail
