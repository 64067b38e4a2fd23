#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>

#include "pakemail/envelope.hpp"

namespace pakemail {

/// In-process transport shared by every party in the process. Safe for
/// concurrent use; delivery is immediate.
class LoopbackTransport final : public TransportBackend {
public:
    using Tap = std::function<void(const TransportEnvelope&)>;

    DeliveryReceipt send(const TransportEnvelope& env) override;
    PollResult poll(const Identity& recipient) override;
    std::string describe() const override { return "loopback"; }

    /// Observer invoked for every sent envelope (passive wiretap).
    void set_tap(Tap tap);
    std::size_t pending(const Identity& recipient) const;

private:
    mutable std::mutex mu_;
    std::map<Identity, std::deque<TransportEnvelope>> queues_;
    Tap tap_;
};

}  // namespace pakemail
