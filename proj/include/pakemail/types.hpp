#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "pakemail/bytes.hpp"

namespace pakemail {

enum class Role : std::uint8_t { initiator, responder };

inline Role other(Role r) { return r == Role::initiator ? Role::responder : Role::initiator; }
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

/// Party identifier carried as raw bytes (typically an email address).
class Identity {
public:
    Identity() = default;
    /// Throws InvalidArgument when empty.
    explicit Identity(std::string id);

    const std::string& str() const { return id_; }
    ByteView bytes() const { return as_bytes(id_); }
    bool empty() const { return id_.empty(); }

    auto operator<=>(const Identity&) const = default;

private:
    std::string id_;
};

inline constexpr std::size_t kFingerprintSize = 20;

/// 160-bit public-key fingerprint.
class Fingerprint {
public:
    using Array = std::array<std::uint8_t, kFingerprintSize>;

    Fingerprint() = default;
    explicit Fingerprint(const Array& bytes) : bytes_(bytes) {}

    /// Throws InvalidArgument unless exactly 20 bytes.
    static Fingerprint from_bytes(ByteView b);
    static Fingerprint from_hex(std::string_view hex);

    const Array& array() const { return bytes_; }
    ByteView bytes() const { return bytes_; }
    std::string hex() const { return to_hex(bytes_); }

    Fingerprint with_bit_flipped(std::size_t bit) const;

    auto operator<=>(const Fingerprint&) const = default;

private:
    Array bytes_{};
};

}  // namespace pakemail
