#include "pakemail/kdf.hpp"

#include <sodium.h>

#include "pakemail/errors.hpp"

namespace pakemail {

Digest256 sha256(ByteView data) {
    Digest256 out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Digest256 hmac_sha256(ByteView key, ByteView message) {
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, message.data(), message.size());
    Digest256 out;
    crypto_auth_hmacsha256_final(&st, out.data());
    sodium_memzero(&st, sizeof st);
    return out;
}

Digest256 hkdf_extract(ByteView salt, ByteView ikm) {
    static const Digest256 zeros{};
    return hmac_sha256(salt.empty() ? ByteView(zeros) : salt, ikm);
}

Bytes hkdf_expand(ByteView prk, ByteView info, std::size_t length) {
    constexpr std::size_t hash_len = 32;
    if (length > 255 * hash_len) throw InvalidArgument("HKDF output too long");
    Bytes okm;
    okm.reserve(length);
    Bytes block;
    for (std::uint8_t counter = 1; okm.size() < length; ++counter) {
        Bytes input = block;
        append(input, info);
        input.push_back(counter);
        auto t = hmac_sha256(prk, input);
        block.assign(t.begin(), t.end());
        std::size_t take = std::min(hash_len, length - okm.size());
        okm.insert(okm.end(), block.begin(), block.begin() + static_cast<std::ptrdiff_t>(take));
    }
    sodium_memzero(block.data(), block.size());
    return okm;
}

Bytes hkdf(ByteView salt, ByteView ikm, ByteView info, std::size_t length) {
    auto prk = hkdf_extract(salt, ikm);
    auto out = hkdf_expand(prk, info, length);
    sodium_memzero(prk.data(), prk.size());
    return out;
}

}  // namespace pakemail
