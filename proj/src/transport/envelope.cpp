#include "pakemail/envelope.hpp"

#include <sodium.h>

#include <algorithm>

#include "pakemail/errors.hpp"

namespace pakemail {

namespace {
constexpr std::string_view kMagic = "PKE1";
constexpr std::size_t kMaxIdentity = 1024;
}  // namespace

ExchangeId ExchangeId::random() {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
    Array a;
    randombytes_buf(a.data(), a.size());
    return ExchangeId(a);
}

ExchangeId ExchangeId::from_hex(std::string_view hex) {
    if (!is_hex(hex, 2 * kExchangeIdSize)) throw DecodeError("exchange id must be 32 hex digits");
    return from_bytes(pakemail::from_hex(hex));
}

ExchangeId ExchangeId::from_bytes(ByteView b) {
    if (b.size() != kExchangeIdSize) throw DecodeError("exchange id must be 16 bytes");
    Array a;
    std::copy(b.begin(), b.end(), a.begin());
    return ExchangeId(a);
}

Flow flow_from_int(int v) {
    switch (v) {
        case 0: return Flow::initiator_message;
        case 1: return Flow::responder_message;
        case 2: return Flow::initiator_tag;
        case 3: return Flow::responder_tag;
        case 9: return Flow::data;
        default: throw DecodeError("invalid flow number " + std::to_string(v));
    }
}

void TransportEnvelope::validate() const {
    if (sender.empty() || recipient.empty()) throw InvalidArgument("envelope identities must be non-empty");
    if (fingerprint.has_value() != carries_fingerprint(flow))
        throw InvalidArgument("sender fingerprint must be present on flows 0-1 and absent otherwise");
}

Bytes encode_envelope(const TransportEnvelope& env) {
    env.validate();
    Bytes out = to_bytes(kMagic);
    append(out, env.exchange_id.bytes());
    out.push_back(static_cast<std::uint8_t>(env.flow));
    append_length_prefixed(out, env.sender.bytes());
    append_length_prefixed(out, env.recipient.bytes());
    append_length_prefixed(out, env.fingerprint ? env.fingerprint->bytes() : ByteView{});
    append_length_prefixed(out, env.payload);
    return out;
}

TransportEnvelope decode_envelope(ByteView wire) {
    ByteReader in(wire);
    if (to_string(in.take(kMagic.size())) != kMagic) throw DecodeError("bad envelope magic");
    TransportEnvelope env;
    env.exchange_id = ExchangeId::from_bytes(in.take(kExchangeIdSize));
    env.flow = flow_from_int(in.u8());
    auto sender = in.length_prefixed(kMaxIdentity);
    auto recipient = in.length_prefixed(kMaxIdentity);
    auto fpr = in.length_prefixed(kFingerprintSize);
    auto payload = in.length_prefixed();
    env.payload.assign(payload.begin(), payload.end());
    if (!in.empty()) throw DecodeError("trailing bytes after envelope");
    if (sender.empty() || recipient.empty()) throw DecodeError("empty identity in envelope");
    env.sender = Identity(to_string(sender));
    env.recipient = Identity(to_string(recipient));
    if (!fpr.empty()) {
        if (fpr.size() != kFingerprintSize) throw DecodeError("bad fingerprint length");
        env.fingerprint = Fingerprint::from_bytes(fpr);
    }
    if (env.fingerprint.has_value() != carries_fingerprint(env.flow))
        throw DecodeError("fingerprint presence does not match flow");
    return env;
}

}  // namespace pakemail
