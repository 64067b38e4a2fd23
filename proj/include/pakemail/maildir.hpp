#pragma once

#include <filesystem>

#include "pakemail/envelope.hpp"

namespace pakemail {

/// Email transport over a local maildir spool. Each recipient owns
/// `<root>/<recipient>/` with the standard tmp/new/cur layout; protocol
/// messages are delivered into the hidden `.PakeMail` subfolder so that
/// they stay out of the user's inbox. Polling also picks up PAKEMAIL
/// messages that arrive in the main inbox (attachment-style delivery) and
/// leaves ordinary mail untouched.
class MaildirTransport final : public TransportBackend {
public:
    static constexpr const char* kHiddenFolder = ".PakeMail";

    explicit MaildirTransport(std::filesystem::path root);

    DeliveryReceipt send(const TransportEnvelope& env) override;
    PollResult poll(const Identity& recipient) override;
    std::string describe() const override { return "maildir:" + root_.string(); }

    std::filesystem::path mailbox(const Identity& recipient) const;
    std::filesystem::path hidden_folder(const Identity& recipient) const;

    /// Writes raw message bytes into `folder/new` via `folder/tmp`.
    static std::filesystem::path deliver_raw(const std::filesystem::path& folder, ByteView message);

private:
    std::filesystem::path root_;
};

}  // namespace pakemail
