#include "pakemail/relay_client.hpp"

#include "pakemail/errors.hpp"
#include "pakemail/frame.hpp"

namespace pakemail {

namespace {

relay::Frame round_trip(const net::Socket& s, const relay::Frame& request) {
    net::write_all(s, relay::encode_frame(request));
    auto body = net::read_frame(s, relay::kMaxFrameSize);
    if (!body) throw UnreachableError("relay closed the connection");
    auto reply = relay::decode_frame_body(*body);
    if (reply.op == relay::Opcode::err)
        throw TransportError("relay rejected request: " + (reply.fields.empty() ? std::string() : to_string(reply.fields[0])),
                             false);
    return reply;
}

}  // namespace

RelayTransport::RelayTransport(net::Endpoint server, std::chrono::milliseconds timeout)
    : server_(std::move(server)), timeout_(timeout) {}

DeliveryReceipt RelayTransport::send(const TransportEnvelope& env) {
    auto blob = encode_envelope(env);
    auto sock = net::connect(server_, timeout_);
    relay::Frame reply;
    try {
        reply = round_trip(sock, relay::make_put(env.recipient.bytes(), blob));
    } catch (const DecodeError& e) {
        throw TransportError(std::string("bad relay reply: ") + e.what(), true);
    }
    if (reply.op != relay::Opcode::ok || reply.fields.size() != 1)
        throw TransportError("unexpected reply to PUT", true);
    return {"relay", server_.str() + "#" + std::to_string(relay::decode_id(reply.fields[0]))};
}

PollResult RelayTransport::poll(const Identity& recipient) {
    PollResult result;
    auto sock = net::connect(server_, timeout_);
    std::vector<std::pair<relay::BlobId, Bytes>> blobs;
    try {
        blobs = relay::parse_list(round_trip(sock, relay::make_get(recipient.bytes())));
    } catch (const DecodeError& e) {
        throw TransportError(std::string("bad relay reply: ") + e.what(), true);
    }
    if (blobs.empty()) return result;
    std::vector<relay::BlobId> ids;
    for (auto& [id, blob] : blobs) {
        ids.push_back(id);
        try {
            auto env = decode_envelope(blob);
            if (env.recipient != recipient) {
                result.warnings.push_back("relay blob " + std::to_string(id) + " addressed to " + env.recipient.str());
                continue;
            }
            result.envelopes.push_back(std::move(env));
        } catch (const Error& e) {
            result.warnings.push_back("relay blob " + std::to_string(id) + ": " + e.what());
        }
    }
    round_trip(sock, relay::make_ack(recipient.bytes(), ids));
    return result;
}

}  // namespace pakemail
