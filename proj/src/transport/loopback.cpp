#include "pakemail/loopback.hpp"

namespace pakemail {

DeliveryReceipt LoopbackTransport::send(const TransportEnvelope& env) {
    env.validate();
    Tap tap;
    {
        std::lock_guard lock(mu_);
        queues_[env.recipient].push_back(env);
        tap = tap_;
    }
    if (tap) tap(env);
    return {"loopback", env.recipient.str()};
}

PollResult LoopbackTransport::poll(const Identity& recipient) {
    PollResult result;
    std::lock_guard lock(mu_);
    auto it = queues_.find(recipient);
    if (it == queues_.end()) return result;
    result.envelopes.assign(it->second.begin(), it->second.end());
    it->second.clear();
    return result;
}

void LoopbackTransport::set_tap(Tap tap) {
    std::lock_guard lock(mu_);
    tap_ = std::move(tap);
}

std::size_t LoopbackTransport::pending(const Identity& recipient) const {
    std::lock_guard lock(mu_);
    auto it = queues_.find(recipient);
    return it == queues_.end() ? 0 : it->second.size();
}

}  // namespace pakemail
