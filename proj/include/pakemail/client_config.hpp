#pragma once

// Operator configuration: a `key = value` file, then PAKEMAIL_* environment
// variables, then command-line flags, each layer overriding the previous.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "pakemail/confirm.hpp"
#include "pakemail/envelope.hpp"
#include "pakemail/group.hpp"

namespace pakemail {

enum class TransportKind : std::uint8_t { loopback, maildir, imap_smtp, relay };

struct TransportSpec {
    TransportKind kind = TransportKind::loopback;
    std::string location;  // maildir root or relay host:port

    /// "loopback", "maildir:PATH", "imap-smtp" or "relay:HOST:PORT".
    static TransportSpec parse(std::string_view text);
    std::string str() const;
};

struct ClientConfig {
    std::optional<std::string> identity;
    std::filesystem::path keystore;
    TransportSpec transport;
    std::string group = "production";
    bool allow_toy_group = false;
    BindingMode binding = BindingMode::in_confirmation;
    std::optional<std::uint32_t> max_failed_attempts;
    std::optional<std::chrono::milliseconds> timeout;
    std::optional<std::filesystem::path> wordlist;
    /// Every key read from the file, kept for the mail-account settings.
    std::map<std::string, std::string> settings;

    /// Reads `path` when given (missing file is an error) and applies the
    /// environment. Unknown keys are kept in `settings`.
    static ClientConfig load(const std::optional<std::filesystem::path>& path);

    /// Resolves the group, refusing the toy group without the explicit
    /// opt-in. Throws InvalidArgument.
    const Group& resolve_group() const;
    std::chrono::milliseconds resolved_timeout() const;
};

/// Parses `key = value` lines; '#' starts a comment. Throws InvalidArgument
/// with the line number on a malformed line.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Directory shared by every process using the `loopback` transport.
std::filesystem::path loopback_spool();

std::unique_ptr<TransportBackend> make_transport(const TransportSpec& spec,
                                                 const std::map<std::string, std::string>& settings);

}  // namespace pakemail
