#include "pakemail/bytes.hpp"

#include "pakemail/errors.hpp"

namespace pakemail {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw DecodeError("hex string has odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw DecodeError("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

bool is_hex(std::string_view s, std::size_t n) {
    if (s.size() != n) return false;
    for (char c : s)
        if (hex_value(c) < 0) return false;
    return true;
}

void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

void put_u32_be(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64_be(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32_be(ByteView in) {
    if (in.size() < 4) throw DecodeError("short u32");
    return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) | (std::uint32_t{in[2]} << 8) |
           std::uint32_t{in[3]};
}

std::uint64_t get_u64_be(ByteView in) {
    if (in.size() < 8) throw DecodeError("short u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
    return v;
}

void append_length_prefixed(Bytes& out, ByteView field) {
    if (field.size() > UINT32_MAX) throw InvalidArgument("field too long for length prefix");
    put_u32_be(out, static_cast<std::uint32_t>(field.size()));
    append(out, field);
}

Bytes length_prefixed(std::initializer_list<ByteView> fields) {
    Bytes out;
    for (auto f : fields) append_length_prefixed(out, f);
    return out;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() { return get_u32_be(take(4)); }

std::uint64_t ByteReader::u64() { return get_u64_be(take(8)); }

ByteView ByteReader::take(std::size_t n) {
    if (n > remaining()) throw DecodeError("input truncated");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

ByteView ByteReader::length_prefixed(std::size_t max_len) {
    auto n = u32();
    if (n > max_len) throw DecodeError("length prefix exceeds limit");
    return take(n);
}

bool constant_time_equal(ByteView a, ByteView b) {
    if (a.size() != b.size()) return false;
    volatile std::uint8_t acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc = acc | (a[i] ^ b[i]);
    return acc == 0;
}

}  // namespace pakemail
