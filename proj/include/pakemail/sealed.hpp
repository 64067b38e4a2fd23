#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "pakemail/bytes.hpp"
#include "pakemail/confirm.hpp"

namespace pakemail {

inline constexpr std::size_t kNonceSize = 24;

/// XChaCha20-Poly1305 ciphertext under a confirmed 256-bit key.
struct SealedMessage {
    std::array<std::uint8_t, kNonceSize> nonce{};
    Bytes ciphertext;  // includes the 16-byte Poly1305 tag

    /// nonce || ciphertext
    Bytes serialize() const;
    /// Throws DecodeError when shorter than nonce + tag.
    static SealedMessage parse(ByteView wire);
};

/// Encrypts with a fresh random nonce. `associated` is authenticated but not
/// encrypted.
SealedMessage seal(const Key256& key, ByteView plaintext, ByteView associated = {});

/// Returns nullopt on wrong key, wrong associated data, or any tampering.
std::optional<Bytes> open(const Key256& key, const SealedMessage& message, ByteView associated = {});

}  // namespace pakemail
