#pragma once

#include <map>
#include <optional>
#include <string>

#include "pakemail/envelope.hpp"

namespace pakemail {

/// Mail-provider settings. Port 465/993 use implicit TLS, any other port
/// must upgrade with STARTTLS; plaintext sessions are refused.
struct MailAccountConfig {
    std::string smtp_host;
    int smtp_port = 465;
    std::string smtp_user;
    std::string smtp_password;
    std::string imap_host;
    int imap_port = 993;
    std::string imap_user;
    std::string imap_password;
    std::string imap_folder = "INBOX";
    long timeout_seconds = 30;
    /// Optional CA bundle for providers with private certificates.
    std::string ca_file;

    /// Keys `smtp_host`, `smtp_port`, ..., `imap_folder`, `ca_file`; then
    /// PAKEMAIL_SMTP_* / PAKEMAIL_IMAP_* environment variables override.
    static MailAccountConfig from_settings(const std::map<std::string, std::string>& settings);
    static MailAccountConfig from_env() { return from_settings({}); }

    /// Throws InvalidArgument naming the first missing field.
    void validate() const;
};

/// Sends flows with SMTP and polls IMAP for unseen PAKEMAIL messages.
/// Fetching a message sets its \Seen flag, which is the processed marker.
class ImapSmtpTransport final : public TransportBackend {
public:
    explicit ImapSmtpTransport(MailAccountConfig config);

    DeliveryReceipt send(const TransportEnvelope& env) override;
    PollResult poll(const Identity& recipient) override;
    std::string describe() const override { return "imap-smtp:" + config_.imap_host; }

private:
    MailAccountConfig config_;
};

}  // namespace pakemail
