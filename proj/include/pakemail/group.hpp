#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "pakemail/bytes.hpp"

namespace pakemail {

/// Exponent in Z_p, stored as a 32-byte little-endian integer already
/// reduced modulo the order of the group that produced it.
class Scalar {
public:
    using Array = std::array<std::uint8_t, 32>;

    Scalar() = default;
    explicit Scalar(const Array& le) : le_(le) {}

    const Array& le_bytes() const { return le_; }
    bool is_zero() const;

    bool operator==(const Scalar&) const = default;

private:
    Array le_{};
};

/// Member of a prime-order group, held in its canonical encoding. Only a
/// Group can mint one (via decode or arithmetic), so a value in hand is
/// always a valid member of the group it came from.
class GroupElement {
public:
    GroupElement() = default;

    ByteView bytes() const { return enc_; }
    bool operator==(const GroupElement&) const = default;

private:
    friend class Group;
    explicit GroupElement(Bytes enc) : enc_(std::move(enc)) {}
    Bytes enc_;
};

struct GroupSpec {
    std::string name;
    std::string order;  // decimal
    int security_bits = 0;
    std::size_t element_size = 0;
    std::size_t scalar_size = 0;
    GroupElement identity;
    GroupElement generator;
    GroupElement M;
    GroupElement N;
};

inline constexpr std::string_view kLabelM = "pakemail-M";
inline constexpr std::string_view kLabelN = "pakemail-N";

class Group {
public:
    virtual ~Group() = default;

    const GroupSpec& spec() const { return spec_; }
    std::string_view name() const { return spec_.name; }

    /// SHA-512 over LP(context) || LP(password). Throws on an empty password.
    static std::array<std::uint8_t, 64> password_digest(ByteView password, ByteView context);

    /// Deterministic hash of a password into [0, p).
    Scalar scalar_from_password(ByteView password, ByteView context) const;

    virtual Scalar scalar_from_wide(std::span<const std::uint8_t, 64> wide) const = 0;
    virtual Scalar scalar_from_u64(std::uint64_t v) const = 0;
    /// Uniform nonzero scalar from the system CSPRNG.
    virtual Scalar random_scalar() const = 0;

    virtual Scalar add(const Scalar& a, const Scalar& b) const = 0;
    virtual Scalar mul(const Scalar& a, const Scalar& b) const = 0;
    virtual Scalar neg(const Scalar& a) const = 0;
    /// Throws InvalidArgument for zero.
    virtual Scalar invert(const Scalar& a) const = 0;

    virtual GroupElement exp(const GroupElement& base, const Scalar& e) const = 0;
    GroupElement exp_base(const Scalar& e) const { return exp(spec_.generator, e); }
    virtual GroupElement mul(const GroupElement& a, const GroupElement& b) const = 0;
    virtual GroupElement div(const GroupElement& a, const GroupElement& b) const = 0;

    bool is_identity(const GroupElement& a) const { return a == spec_.identity; }

    Bytes encode(const GroupElement& a) const { return a.enc_; }
    /// Throws DecodeError on wrong length, non-canonical bytes or non-members.
    virtual GroupElement decode(ByteView bytes) const = 0;

    /// Fixed-length encoding of a scalar (spec().scalar_size bytes).
    virtual Bytes encode_scalar(const Scalar& s) const = 0;

protected:
    static GroupElement make_element(Bytes enc) { return GroupElement(std::move(enc)); }
    void check_element(const GroupElement& a) const;

    GroupSpec spec_;
};

/// ristretto255: prime order 2^252 + 27742317777372353535851937790883648493.
const Group& production_group();

/// Order-11 subgroup of Z_23^*, generated by 2. Discrete logs are trivial;
/// tests and adversary simulations only.
const Group& toy_group();

/// Looks up "ristretto255" or "toy23". Throws InvalidArgument otherwise.
const Group& group_by_name(std::string_view name);

/// Modulus, order and generator of the toy group, for arithmetic oracles.
namespace toy {
inline constexpr std::uint32_t kModulus = 23;
inline constexpr std::uint32_t kOrder = 11;
inline constexpr std::uint32_t kGenerator = 2;

/// Value of a toy element as an integer in [1, 23).
std::uint32_t value(const GroupElement& e);
/// Scalar as an integer in [0, 11).
std::uint32_t value(const Scalar& s);
}  // namespace toy

}  // namespace pakemail
