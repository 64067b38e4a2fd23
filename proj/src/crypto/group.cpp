#include "pakemail/group.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

#include "pakemail/errors.hpp"

namespace pakemail {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw Error("libsodium initialisation failed");
    });
}

class Ristretto255 final : public Group {
public:
    Ristretto255() {
        ensure_sodium();
        spec_.name = "ristretto255";
        spec_.order = "7237005577332262213973186563042994240857116359379907606001950938285454250989";
        spec_.security_bits = 128;
        spec_.element_size = crypto_core_ristretto255_BYTES;
        spec_.scalar_size = crypto_core_ristretto255_SCALARBYTES;
        spec_.identity = make_element(Bytes(crypto_core_ristretto255_BYTES, 0));
        spec_.generator = exp_base_raw(scalar_from_u64(1));
        spec_.M = hash_to_group(kLabelM);
        spec_.N = hash_to_group(kLabelN);
    }

    Scalar scalar_from_wide(std::span<const std::uint8_t, 64> wide) const override {
        Scalar::Array out;
        crypto_core_ristretto255_scalar_reduce(out.data(), wide.data());
        return Scalar(out);
    }

    Scalar scalar_from_u64(std::uint64_t v) const override {
        std::array<std::uint8_t, 64> wide{};
        for (int i = 0; i < 8; ++i) wide[i] = static_cast<std::uint8_t>(v >> (8 * i));
        return scalar_from_wide(wide);
    }

    Scalar random_scalar() const override {
        Scalar::Array out;
        crypto_core_ristretto255_scalar_random(out.data());
        return Scalar(out);
    }

    Scalar add(const Scalar& a, const Scalar& b) const override {
        Scalar::Array out;
        crypto_core_ristretto255_scalar_add(out.data(), a.le_bytes().data(), b.le_bytes().data());
        return Scalar(out);
    }

    Scalar mul(const Scalar& a, const Scalar& b) const override {
        Scalar::Array out;
        crypto_core_ristretto255_scalar_mul(out.data(), a.le_bytes().data(), b.le_bytes().data());
        return Scalar(out);
    }

    Scalar neg(const Scalar& a) const override {
        Scalar::Array out;
        crypto_core_ristretto255_scalar_negate(out.data(), a.le_bytes().data());
        return Scalar(out);
    }

    Scalar invert(const Scalar& a) const override {
        Scalar::Array out;
        if (crypto_core_ristretto255_scalar_invert(out.data(), a.le_bytes().data()) != 0)
            throw InvalidArgument("cannot invert zero scalar");
        return Scalar(out);
    }

    GroupElement exp(const GroupElement& base, const Scalar& e) const override {
        check_element(base);
        if (e.is_zero() || is_identity(base)) return spec_.identity;
        Bytes out(crypto_core_ristretto255_BYTES);
        // Fails only when the product is the identity.
        if (crypto_scalarmult_ristretto255(out.data(), e.le_bytes().data(), base.bytes().data()) != 0)
            return spec_.identity;
        return make_element(std::move(out));
    }

    GroupElement mul(const GroupElement& a, const GroupElement& b) const override {
        check_element(a);
        check_element(b);
        Bytes out(crypto_core_ristretto255_BYTES);
        if (crypto_core_ristretto255_add(out.data(), a.bytes().data(), b.bytes().data()) != 0)
            throw DecodeError("ristretto255 add on invalid element");
        return make_element(std::move(out));
    }

    GroupElement div(const GroupElement& a, const GroupElement& b) const override {
        check_element(a);
        check_element(b);
        Bytes out(crypto_core_ristretto255_BYTES);
        if (crypto_core_ristretto255_sub(out.data(), a.bytes().data(), b.bytes().data()) != 0)
            throw DecodeError("ristretto255 sub on invalid element");
        return make_element(std::move(out));
    }

    GroupElement decode(ByteView bytes) const override {
        if (bytes.size() != crypto_core_ristretto255_BYTES)
            throw DecodeError("ristretto255 element must be 32 bytes");
        bool zero = std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
        if (!zero && crypto_core_ristretto255_is_valid_point(bytes.data()) != 1)
            throw DecodeError("not a canonical ristretto255 encoding");
        return make_element(Bytes(bytes.begin(), bytes.end()));
    }

    Bytes encode_scalar(const Scalar& s) const override {
        return Bytes(s.le_bytes().begin(), s.le_bytes().end());
    }

private:
    GroupElement exp_base_raw(const Scalar& e) const {
        Bytes out(crypto_core_ristretto255_BYTES);
        if (crypto_scalarmult_ristretto255_base(out.data(), e.le_bytes().data()) != 0)
            throw Error("ristretto255 base multiplication failed");
        return make_element(std::move(out));
    }

    GroupElement hash_to_group(std::string_view label) const {
        std::array<std::uint8_t, crypto_hash_sha512_BYTES> h;
        crypto_hash_sha512(h.data(), as_bytes(label).data(), label.size());
        Bytes out(crypto_core_ristretto255_BYTES);
        crypto_core_ristretto255_from_hash(out.data(), h.data());
        return make_element(std::move(out));
    }
};

class Toy23 final : public Group {
public:
    static constexpr std::uint32_t p = toy::kModulus;
    static constexpr std::uint32_t q = toy::kOrder;

    Toy23() {
        ensure_sodium();
        spec_.name = "toy23";
        spec_.order = std::to_string(q);
        spec_.security_bits = 3;
        spec_.element_size = 1;
        spec_.scalar_size = 1;
        spec_.identity = element(1);
        spec_.generator = element(toy::kGenerator);
        spec_.M = hash_to_group(kLabelM, 0);
        spec_.N = hash_to_group(kLabelN, toy::value(spec_.M));
    }

    Scalar scalar_from_wide(std::span<const std::uint8_t, 64> wide) const override {
        std::uint32_t acc = 0;
        for (auto it = wide.rbegin(); it != wide.rend(); ++it) acc = (acc * 256 + *it) % q;
        return scalar(acc);
    }

    Scalar scalar_from_u64(std::uint64_t v) const override { return scalar(static_cast<std::uint32_t>(v % q)); }

    Scalar random_scalar() const override { return scalar(1 + randombytes_uniform(q - 1)); }

    Scalar add(const Scalar& a, const Scalar& b) const override {
        return scalar((toy::value(a) + toy::value(b)) % q);
    }
    Scalar mul(const Scalar& a, const Scalar& b) const override {
        return scalar((toy::value(a) * toy::value(b)) % q);
    }
    Scalar neg(const Scalar& a) const override { return scalar((q - toy::value(a)) % q); }
    Scalar invert(const Scalar& a) const override {
        auto v = toy::value(a);
        if (v == 0) throw InvalidArgument("cannot invert zero scalar");
        return scalar(modpow(v, q - 2, q));
    }

    GroupElement exp(const GroupElement& base, const Scalar& e) const override {
        check_element(base);
        return element(modpow(toy::value(base), toy::value(e), p));
    }
    GroupElement mul(const GroupElement& a, const GroupElement& b) const override {
        check_element(a);
        check_element(b);
        return element(toy::value(a) * toy::value(b) % p);
    }
    GroupElement div(const GroupElement& a, const GroupElement& b) const override {
        check_element(a);
        check_element(b);
        return element(toy::value(a) * modpow(toy::value(b), p - 2, p) % p);
    }

    GroupElement decode(ByteView bytes) const override {
        if (bytes.size() != 1) throw DecodeError("toy23 element must be 1 byte");
        std::uint32_t v = bytes[0];
        if (v == 0 || v >= p) throw DecodeError("toy23 element out of range");
        if (modpow(v, q, p) != 1) throw DecodeError("toy23 element outside the order-11 subgroup");
        return element(v);
    }

    Bytes encode_scalar(const Scalar& s) const override { return Bytes{s.le_bytes()[0]}; }

private:
    static std::uint32_t modpow(std::uint32_t base, std::uint32_t e, std::uint32_t m) {
        std::uint64_t r = 1, b = base % m;
        while (e) {
            if (e & 1) r = r * b % m;
            b = b * b % m;
            e >>= 1;
        }
        return static_cast<std::uint32_t>(r);
    }

    static Scalar scalar(std::uint32_t v) {
        Scalar::Array a{};
        a[0] = static_cast<std::uint8_t>(v);
        return Scalar(a);
    }

    static GroupElement element(std::uint32_t v) { return make_element(Bytes{static_cast<std::uint8_t>(v)}); }

    // Squaring maps Z_23^* onto the quadratic residues, which are exactly
    // the order-11 subgroup. Counter-based retry skips the identity and
    // any value equal to `avoid`.
    static GroupElement hash_to_group(std::string_view label, std::uint32_t avoid) {
        for (std::uint8_t counter = 0;; ++counter) {
            Bytes input = to_bytes(label);
            input.push_back(counter);
            std::array<std::uint8_t, crypto_hash_sha256_BYTES> h;
            crypto_hash_sha256(h.data(), input.data(), input.size());
            std::uint32_t v = 0;
            for (auto b : h) v = (v * 256 + b) % p;
            std::uint32_t e = v * v % p;
            if (v == 0 || e == 1 || e == avoid) continue;
            return element(e);
        }
    }
};

}  // namespace

bool Scalar::is_zero() const {
    return std::all_of(le_.begin(), le_.end(), [](auto b) { return b == 0; });
}

std::array<std::uint8_t, 64> Group::password_digest(ByteView password, ByteView context) {
    if (password.empty()) throw InvalidArgument("password must be non-empty");
    ensure_sodium();
    Bytes input = length_prefixed({context, password});
    std::array<std::uint8_t, 64> out;
    crypto_hash_sha512(out.data(), input.data(), input.size());
    sodium_memzero(input.data(), input.size());
    return out;
}

Scalar Group::scalar_from_password(ByteView password, ByteView context) const {
    auto wide = password_digest(password, context);
    auto s = scalar_from_wide(wide);
    sodium_memzero(wide.data(), wide.size());
    return s;
}

void Group::check_element(const GroupElement& a) const {
    if (a.bytes().size() != spec_.element_size)
        throw InvalidArgument("element does not belong to group " + spec_.name);
}

const Group& production_group() {
    static const Ristretto255 g;
    return g;
}

const Group& toy_group() {
    static const Toy23 g;
    return g;
}

const Group& group_by_name(std::string_view name) {
    if (name == "ristretto255" || name == "production") return production_group();
    if (name == "toy23" || name == "toy") return toy_group();
    throw InvalidArgument("unknown group: " + std::string(name));
}

namespace toy {

std::uint32_t value(const GroupElement& e) {
    if (e.bytes().size() != 1) throw InvalidArgument("not a toy23 element");
    return e.bytes()[0];
}

std::uint32_t value(const Scalar& s) { return s.le_bytes()[0]; }

}  // namespace toy

}  // namespace pakemail
