#pragma once

#include <array>
#include <cstdint>

#include "pakemail/bytes.hpp"

namespace pakemail {

using Digest256 = std::array<std::uint8_t, 32>;

Digest256 sha256(ByteView data);

/// HMAC-SHA256 (RFC 2104) with an arbitrary-length key.
Digest256 hmac_sha256(ByteView key, ByteView message);

/// HKDF-SHA256 (RFC 5869). An empty salt means HashLen zero bytes.
Digest256 hkdf_extract(ByteView salt, ByteView ikm);
/// Throws InvalidArgument when `length` exceeds 255 * 32.
Bytes hkdf_expand(ByteView prk, ByteView info, std::size_t length);
Bytes hkdf(ByteView salt, ByteView ikm, ByteView info, std::size_t length);

}  // namespace pakemail
