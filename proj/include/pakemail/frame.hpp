#pragma once

// Relay wire format. Every frame is
//
//   u32 length (big-endian, counts everything after itself)
//   u8  opcode  (0=PUT 1=GET 2=ACK 3=OK 4=ERR 5=LIST)
//   fields, each u32 length + bytes
//
// PUT  recipient, blob          -> OK id
// GET  recipient                -> LIST (id, blob)*
// ACK  recipient, id*           -> OK
// ids are 8-byte big-endian integers.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pakemail/bytes.hpp"

namespace pakemail::relay {

enum class Opcode : std::uint8_t { put = 0, get = 1, ack = 2, ok = 3, err = 4, list = 5 };

inline constexpr std::size_t kMaxFrameSize = 16 * 1024 * 1024;

struct Frame {
    Opcode op = Opcode::ok;
    std::vector<Bytes> fields;

    bool operator==(const Frame&) const = default;
};

using BlobId = std::uint64_t;

/// Full frame including the leading length.
Bytes encode_frame(const Frame& frame);

/// Parses the bytes after the length prefix. Throws DecodeError for an
/// unknown opcode or a field running past the end.
Frame decode_frame_body(ByteView body);

Frame make_put(ByteView recipient, ByteView blob);
Frame make_get(ByteView recipient);
Frame make_ack(ByteView recipient, const std::vector<BlobId>& ids);
Frame make_ok(std::optional<BlobId> id = std::nullopt);
Frame make_err(std::string_view message);
Frame make_list(const std::vector<std::pair<BlobId, Bytes>>& blobs);

Bytes encode_id(BlobId id);
BlobId decode_id(ByteView field);

/// Throws DecodeError unless `frame.fields` has an even count of (id, blob).
std::vector<std::pair<BlobId, Bytes>> parse_list(const Frame& frame);

}  // namespace pakemail::relay
