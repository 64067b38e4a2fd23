#pragma once

#include <chrono>

#include "pakemail/envelope.hpp"
#include "pakemail/net.hpp"

namespace pakemail {

/// Transport over an untrusted relay: send is PUT, poll is GET followed by
/// ACK of everything returned. Network failures raise UnreachableError.
class RelayTransport final : public TransportBackend {
public:
    explicit RelayTransport(net::Endpoint server,
                            std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

    DeliveryReceipt send(const TransportEnvelope& env) override;
    PollResult poll(const Identity& recipient) override;
    std::string describe() const override { return "relay:" + server_.str(); }

private:
    net::Endpoint server_;
    std::chrono::milliseconds timeout_;
};

}  // namespace pakemail
