#include "pakemail/frame.hpp"

#include "pakemail/errors.hpp"

namespace pakemail::relay {

Bytes encode_frame(const Frame& frame) {
    Bytes body;
    body.push_back(static_cast<std::uint8_t>(frame.op));
    for (const auto& f : frame.fields) append_length_prefixed(body, f);
    if (body.size() > kMaxFrameSize) throw InvalidArgument("frame exceeds maximum size");
    Bytes out;
    put_u32_be(out, static_cast<std::uint32_t>(body.size()));
    append(out, body);
    return out;
}

Frame decode_frame_body(ByteView body) {
    ByteReader in(body);
    if (in.empty()) throw DecodeError("empty frame");
    auto op = in.u8();
    if (op > static_cast<std::uint8_t>(Opcode::list)) throw DecodeError("unknown opcode " + std::to_string(op));
    Frame f;
    f.op = static_cast<Opcode>(op);
    while (!in.empty()) {
        auto field = in.length_prefixed(in.remaining());
        f.fields.emplace_back(field.begin(), field.end());
    }
    return f;
}

Bytes encode_id(BlobId id) {
    Bytes b;
    put_u64_be(b, id);
    return b;
}

BlobId decode_id(ByteView field) {
    if (field.size() != 8) throw DecodeError("blob id must be 8 bytes");
    return get_u64_be(field);
}

Frame make_put(ByteView recipient, ByteView blob) {
    return {Opcode::put, {Bytes(recipient.begin(), recipient.end()), Bytes(blob.begin(), blob.end())}};
}

Frame make_get(ByteView recipient) { return {Opcode::get, {Bytes(recipient.begin(), recipient.end())}}; }

Frame make_ack(ByteView recipient, const std::vector<BlobId>& ids) {
    Frame f{Opcode::ack, {Bytes(recipient.begin(), recipient.end())}};
    for (auto id : ids) f.fields.push_back(encode_id(id));
    return f;
}

Frame make_ok(std::optional<BlobId> id) {
    Frame f{Opcode::ok, {}};
    if (id) f.fields.push_back(encode_id(*id));
    return f;
}

Frame make_err(std::string_view message) { return {Opcode::err, {to_bytes(message)}}; }

Frame make_list(const std::vector<std::pair<BlobId, Bytes>>& blobs) {
    Frame f{Opcode::list, {}};
    for (const auto& [id, blob] : blobs) {
        f.fields.push_back(encode_id(id));
        f.fields.push_back(blob);
    }
    return f;
}

std::vector<std::pair<BlobId, Bytes>> parse_list(const Frame& frame) {
    if (frame.op != Opcode::list) throw DecodeError("expected LIST frame");
    if (frame.fields.size() % 2 != 0) throw DecodeError("LIST frame has odd field count");
    std::vector<std::pair<BlobId, Bytes>> out;
    for (std::size_t i = 0; i < frame.fields.size(); i += 2)
        out.emplace_back(decode_id(frame.fields[i]), frame.fields[i + 1]);
    return out;
}

}  // namespace pakemail::relay
