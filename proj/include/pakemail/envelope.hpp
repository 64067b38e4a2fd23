#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pakemail/bytes.hpp"
#include "pakemail/types.hpp"

namespace pakemail {

inline constexpr std::size_t kExchangeIdSize = 16;

class ExchangeId {
public:
    using Array = std::array<std::uint8_t, kExchangeIdSize>;

    ExchangeId() = default;
    explicit ExchangeId(const Array& a) : id_(a) {}

    static ExchangeId random();
    /// Throws DecodeError unless exactly 32 hex digits.
    static ExchangeId from_hex(std::string_view hex);
    static ExchangeId from_bytes(ByteView b);

    ByteView bytes() const { return id_; }
    std::string hex() const { return to_hex(id_); }

    auto operator<=>(const ExchangeId&) const = default;

private:
    Array id_{};
};

enum class Flow : std::uint8_t {
    initiator_message = 0,
    responder_message = 1,
    initiator_tag = 2,
    responder_tag = 3,
    data = 9,
};

/// Throws DecodeError for anything but 0-3 and 9.
Flow flow_from_int(int v);
inline int to_int(Flow f) { return static_cast<int>(f); }
inline bool carries_fingerprint(Flow f) { return f == Flow::initiator_message || f == Flow::responder_message; }

struct TransportEnvelope {
    ExchangeId exchange_id;
    Flow flow = Flow::initiator_message;
    Identity sender;
    Identity recipient;
    std::optional<Fingerprint> fingerprint;  // sender's, flows 0-1 only
    Bytes payload;

    /// Throws InvalidArgument on empty identities or a fingerprint on the
    /// wrong flow.
    void validate() const;

    bool operator==(const TransportEnvelope&) const = default;
};

/// Compact binary form used for relay blobs and persisted state:
/// "PKE1" | exchange-id | flow | LP(sender) | LP(recipient) | LP(fpr or empty) | LP(payload)
Bytes encode_envelope(const TransportEnvelope& env);
TransportEnvelope decode_envelope(ByteView wire);

struct DeliveryReceipt {
    std::string backend;
    std::string location;
};

struct PollResult {
    std::vector<TransportEnvelope> envelopes;
    std::vector<std::string> warnings;
};

/// Asynchronous carrier for protocol flows. Delivery is at-least-once with
/// no ordering guarantee; consumers must tolerate duplicates.
class TransportBackend {
public:
    virtual ~TransportBackend() = default;

    /// Throws TransportError (retriable when nothing was handed off).
    virtual DeliveryReceipt send(const TransportEnvelope& env) = 0;

    /// Returns envelopes addressed to `recipient` that were not returned
    /// before. Unparseable items become warnings.
    virtual PollResult poll(const Identity& recipient) = 0;

    virtual std::string describe() const = 0;
};

}  // namespace pakemail
