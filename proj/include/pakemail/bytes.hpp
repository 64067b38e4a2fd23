#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pakemail {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
    auto v = as_bytes(s);
    return {v.begin(), v.end()};
}

inline std::string to_string(ByteView b) {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

std::string to_hex(ByteView data);

/// Parses lowercase or uppercase hex. Throws DecodeError on odd length or bad digits.
Bytes from_hex(std::string_view hex);

/// True when `s` is exactly `n` hex digits (case-insensitive).
bool is_hex(std::string_view s, std::size_t n);

void append(Bytes& out, ByteView data);

void put_u32_be(Bytes& out, std::uint32_t v);
void put_u64_be(Bytes& out, std::uint64_t v);
std::uint32_t get_u32_be(ByteView in);
std::uint64_t get_u64_be(ByteView in);

/// Appends a 4-byte big-endian length followed by the data.
void append_length_prefixed(Bytes& out, ByteView field);

/// Builds LP(f1) || LP(f2) || ... for an unambiguous concatenation.
Bytes length_prefixed(std::initializer_list<ByteView> fields);

/// Sequential reader over a byte span; every read is bounds-checked and
/// throws DecodeError when the input runs short.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    ByteView take(std::size_t n);
    ByteView length_prefixed(std::size_t max_len = SIZE_MAX);

    std::size_t remaining() const { return data_.size() - pos_; }
    bool empty() const { return remaining() == 0; }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

/// Comparison whose running time depends only on the lengths.
bool constant_time_equal(ByteView a, ByteView b);

}  // namespace pakemail
