#include "pakemail/sealed.hpp"

#include <sodium.h>

#include "pakemail/errors.hpp"

namespace pakemail {

static_assert(kNonceSize == crypto_aead_xchacha20poly1305_ietf_NPUBBYTES);

Bytes SealedMessage::serialize() const {
    Bytes out(nonce.begin(), nonce.end());
    append(out, ciphertext);
    return out;
}

SealedMessage SealedMessage::parse(ByteView wire) {
    if (wire.size() < kNonceSize + crypto_aead_xchacha20poly1305_ietf_ABYTES)
        throw DecodeError("sealed message too short");
    SealedMessage m;
    std::copy_n(wire.begin(), kNonceSize, m.nonce.begin());
    m.ciphertext.assign(wire.begin() + kNonceSize, wire.end());
    return m;
}

SealedMessage seal(const Key256& key, ByteView plaintext, ByteView associated) {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
    SealedMessage m;
    randombytes_buf(m.nonce.data(), m.nonce.size());
    m.ciphertext.resize(plaintext.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES);
    unsigned long long len = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(m.ciphertext.data(), &len, plaintext.data(), plaintext.size(),
                                               associated.data(), associated.size(), nullptr, m.nonce.data(),
                                               key.data());
    m.ciphertext.resize(len);
    return m;
}

std::optional<Bytes> open(const Key256& key, const SealedMessage& message, ByteView associated) {
    if (message.ciphertext.size() < crypto_aead_xchacha20poly1305_ietf_ABYTES) return std::nullopt;
    Bytes plain(message.ciphertext.size() - crypto_aead_xchacha20poly1305_ietf_ABYTES);
    unsigned long long len = 0;
    if (crypto_aead_xchacha20poly1305_ietf_decrypt(plain.data(), &len, nullptr, message.ciphertext.data(),
                                                   message.ciphertext.size(), associated.data(), associated.size(),
                                                   message.nonce.data(), key.data()) != 0)
        return std::nullopt;
    plain.resize(len);
    return plain;
}

}  // namespace pakemail
