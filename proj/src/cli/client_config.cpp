#include "pakemail/client_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pakemail/errors.hpp"
#include "pakemail/imap_smtp.hpp"
#include "pakemail/maildir.hpp"
#include "pakemail/net.hpp"
#include "pakemail/relay_client.hpp"

namespace pakemail {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

std::uint32_t parse_count(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        auto n = std::stoul(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint32_t>(n);
    } catch (const std::exception&) {
        throw InvalidArgument("config key " + key + " expects a non-negative integer, got '" + value + "'");
    }
}

fs::path default_keystore(const std::optional<std::string>& identity) {
    fs::path base;
    if (auto xdg = env("XDG_DATA_HOME"))
        base = *xdg;
    else if (auto home = env("HOME"))
        base = fs::path(*home) / ".local" / "share";
    else
        base = fs::temp_directory_path();
    return base / "pakemail" / ((identity ? *identity : std::string("default")) + ".keystore");
}

}  // namespace

TransportSpec TransportSpec::parse(std::string_view text) {
    if (text == "loopback") return {TransportKind::loopback, ""};
    if (text == "imap-smtp") return {TransportKind::imap_smtp, ""};
    if (text.rfind("maildir:", 0) == 0 && text.size() > 8) return {TransportKind::maildir, std::string(text.substr(8))};
    if (text.rfind("relay:", 0) == 0 && text.size() > 6) {
        net::Endpoint::parse(text.substr(6));  // validate now
        return {TransportKind::relay, std::string(text.substr(6))};
    }
    throw InvalidArgument("transport must be loopback, maildir:PATH, imap-smtp or relay:HOST:PORT; got '" +
                          std::string(text) + "'");
}

std::string TransportSpec::str() const {
    switch (kind) {
        case TransportKind::loopback: return "loopback";
        case TransportKind::maildir: return "maildir:" + location;
        case TransportKind::imap_smtp: return "imap-smtp";
        case TransportKind::relay: return "relay:" + location;
    }
    return "?";
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
        out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

ClientConfig ClientConfig::load(const std::optional<fs::path>& path) {
    std::map<std::string, std::string> kv;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw InvalidArgument("cannot read config file " + path->string());
        std::stringstream buf;
        buf << in.rdbuf();
        kv = parse_config_text(buf.str());
    }
    // Environment overrides the file.
    const std::pair<const char*, const char*> overrides[] = {
        {"identity", "PAKEMAIL_IDENTITY"},        {"keystore", "PAKEMAIL_KEYSTORE"},
        {"transport", "PAKEMAIL_TRANSPORT"},      {"group", "PAKEMAIL_GROUP"},
        {"binding", "PAKEMAIL_BINDING"},          {"max_failed_attempts", "PAKEMAIL_MAX_FAILED_ATTEMPTS"},
        {"timeout_seconds", "PAKEMAIL_TIMEOUT_SECONDS"}, {"wordlist", "PAKEMAIL_WORDLIST"},
    };
    for (const auto& [key, var] : overrides)
        if (auto v = env(var)) kv[key] = *v;

    ClientConfig c;
    c.settings = kv;
    if (auto it = kv.find("identity"); it != kv.end() && !it->second.empty()) c.identity = it->second;
    if (auto it = kv.find("transport"); it != kv.end()) c.transport = TransportSpec::parse(it->second);
    if (auto it = kv.find("group"); it != kv.end()) c.group = it->second;
    if (auto it = kv.find("binding"); it != kv.end()) c.binding = binding_mode_from_string(it->second);
    if (auto it = kv.find("max_failed_attempts"); it != kv.end())
        c.max_failed_attempts = parse_count(it->first, it->second);
    if (auto it = kv.find("timeout_seconds"); it != kv.end())
        c.timeout = std::chrono::seconds(parse_count(it->first, it->second));
    if (auto it = kv.find("wordlist"); it != kv.end()) c.wordlist = it->second;
    if (auto it = kv.find("keystore"); it != kv.end())
        c.keystore = it->second;
    else
        c.keystore = default_keystore(c.identity);
    return c;
}

const Group& ClientConfig::resolve_group() const {
    const Group& g = group_by_name(group);
    if (&g == &toy_group() && !allow_toy_group)
        throw InvalidArgument("the toy group offers no security; pass --insecure-toy-group to use it anyway");
    return g;
}

std::chrono::milliseconds ClientConfig::resolved_timeout() const {
    if (timeout) return *timeout;
    bool email = transport.kind == TransportKind::maildir || transport.kind == TransportKind::imap_smtp;
    return email ? std::chrono::milliseconds(std::chrono::hours(72))
                 : std::chrono::milliseconds(std::chrono::seconds(30));
}

fs::path loopback_spool() {
    if (auto dir = env("PAKEMAIL_LOOPBACK_SPOOL")) return *dir;
    return fs::temp_directory_path() / "pakemail-loopback";
}

std::unique_ptr<TransportBackend> make_transport(const TransportSpec& spec,
                                                 const std::map<std::string, std::string>& settings) {
    switch (spec.kind) {
        case TransportKind::loopback: return std::make_unique<MaildirTransport>(loopback_spool());
        case TransportKind::maildir: return std::make_unique<MaildirTransport>(spec.location);
        case TransportKind::imap_smtp:
            return std::make_unique<ImapSmtpTransport>(MailAccountConfig::from_settings(settings));
        case TransportKind::relay: return std::make_unique<RelayTransport>(net::Endpoint::parse(spec.location));
    }
    throw InvalidArgument("unknown transport");
}

}  // namespace pakemail
