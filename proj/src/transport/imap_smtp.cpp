#include "pakemail/imap_smtp.hpp"

#include <curl/curl.h>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <sstream>

#include "pakemail/email.hpp"
#include "pakemail/errors.hpp"

namespace pakemail {

namespace {

void curl_global() {
    static std::once_flag once;
    std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

struct CurlDeleter {
    void operator()(CURL* c) const { curl_easy_cleanup(c); }
};
using CurlHandle = std::unique_ptr<CURL, CurlDeleter>;

struct SlistDeleter {
    void operator()(curl_slist* l) const { curl_slist_free_all(l); }
};

CurlHandle make_handle(const MailAccountConfig& cfg, const std::string& url, const std::string& user,
                       const std::string& password, int port) {
    curl_global();
    CurlHandle h(curl_easy_init());
    if (!h) throw TransportError("curl initialisation failed", true);
    curl_easy_setopt(h.get(), CURLOPT_URL, url.c_str());
    curl_easy_setopt(h.get(), CURLOPT_USERNAME, user.c_str());
    curl_easy_setopt(h.get(), CURLOPT_PASSWORD, password.c_str());
    curl_easy_setopt(h.get(), CURLOPT_TIMEOUT, cfg.timeout_seconds);
    curl_easy_setopt(h.get(), CURLOPT_SSL_VERIFYPEER, 1L);
    curl_easy_setopt(h.get(), CURLOPT_SSL_VERIFYHOST, 2L);
    if (!cfg.ca_file.empty()) curl_easy_setopt(h.get(), CURLOPT_CAINFO, cfg.ca_file.c_str());
    // Implicit-TLS URLs encrypt from the first byte; others must STARTTLS.
    if (port != 465 && port != 993) curl_easy_setopt(h.get(), CURLOPT_USE_SSL, static_cast<long>(CURLUSESSL_ALL));
    return h;
}

std::string base_url(const char* implicit, const char* plain, const std::string& host, int port) {
    bool tls = port == 465 || port == 993;
    return std::string(tls ? implicit : plain) + "://" + host + ":" + std::to_string(port);
}

size_t collect(char* data, size_t size, size_t n, void* user) {
    static_cast<std::string*>(user)->append(data, size * n);
    return size * n;
}

struct Upload {
    const Bytes* data;
    std::size_t offset = 0;
};

size_t upload(char* buf, size_t size, size_t n, void* user) {
    auto* up = static_cast<Upload*>(user);
    std::size_t len = std::min(size * n, up->data->size() - up->offset);
    std::memcpy(buf, up->data->data() + up->offset, len);
    up->offset += len;
    return len;
}

void perform(CURL* h, const char* what) {
    auto rc = curl_easy_perform(h);
    if (rc != CURLE_OK) {
        bool retriable = rc == CURLE_COULDNT_CONNECT || rc == CURLE_COULDNT_RESOLVE_HOST ||
                         rc == CURLE_OPERATION_TIMEDOUT || rc == CURLE_SEND_ERROR || rc == CURLE_RECV_ERROR;
        std::string msg = std::string(what) + ": " + curl_easy_strerror(rc);
        if (rc == CURLE_COULDNT_CONNECT || rc == CURLE_COULDNT_RESOLVE_HOST) throw UnreachableError(msg);
        throw TransportError(msg, retriable);
    }
}

std::string url_folder(const std::string& folder) {
    std::string out;
    for (unsigned char c : folder) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '/') {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

}  // namespace

MailAccountConfig MailAccountConfig::from_settings(const std::map<std::string, std::string>& settings) {
    MailAccountConfig c;
    auto pick = [&](const char* key, const char* env, std::string& dst) {
        if (auto it = settings.find(key); it != settings.end()) dst = it->second;
        if (const char* v = std::getenv(env); v && *v) dst = v;
    };
    auto pick_int = [&](const char* key, const char* env, int& dst) {
        std::string s;
        pick(key, env, s);
        if (s.empty()) return;
        try {
            dst = std::stoi(s);
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("bad port for ") + key + ": " + s);
        }
    };
    pick("smtp_host", "PAKEMAIL_SMTP_HOST", c.smtp_host);
    pick_int("smtp_port", "PAKEMAIL_SMTP_PORT", c.smtp_port);
    pick("smtp_user", "PAKEMAIL_SMTP_USER", c.smtp_user);
    pick("smtp_password", "PAKEMAIL_SMTP_PASSWORD", c.smtp_password);
    pick("imap_host", "PAKEMAIL_IMAP_HOST", c.imap_host);
    pick_int("imap_port", "PAKEMAIL_IMAP_PORT", c.imap_port);
    pick("imap_user", "PAKEMAIL_IMAP_USER", c.imap_user);
    pick("imap_password", "PAKEMAIL_IMAP_PASSWORD", c.imap_password);
    pick("imap_folder", "PAKEMAIL_IMAP_FOLDER", c.imap_folder);
    pick("ca_file", "PAKEMAIL_CA_FILE", c.ca_file);
    return c;
}

void MailAccountConfig::validate() const {
    const std::pair<const char*, const std::string*> required[] = {
        {"smtp_host", &smtp_host}, {"smtp_user", &smtp_user}, {"smtp_password", &smtp_password},
        {"imap_host", &imap_host}, {"imap_user", &imap_user}, {"imap_password", &imap_password},
    };
    for (const auto& [name, value] : required)
        if (value->empty()) throw InvalidArgument(std::string("mail account setting missing: ") + name);
    if (smtp_port <= 0 || smtp_port > 65535 || imap_port <= 0 || imap_port > 65535)
        throw InvalidArgument("mail port out of range");
}

ImapSmtpTransport::ImapSmtpTransport(MailAccountConfig config) : config_(std::move(config)) { config_.validate(); }

DeliveryReceipt ImapSmtpTransport::send(const TransportEnvelope& env) {
    Bytes message = email::encode_email(env);
    auto h = make_handle(config_, base_url("smtps", "smtp", config_.smtp_host, config_.smtp_port),
                         config_.smtp_user, config_.smtp_password, config_.smtp_port);
    std::string from = "<" + env.sender.str() + ">";
    std::unique_ptr<curl_slist, SlistDeleter> rcpt(curl_slist_append(nullptr, ("<" + env.recipient.str() + ">").c_str()));
    Upload up{&message};
    curl_easy_setopt(h.get(), CURLOPT_MAIL_FROM, from.c_str());
    curl_easy_setopt(h.get(), CURLOPT_MAIL_RCPT, rcpt.get());
    curl_easy_setopt(h.get(), CURLOPT_READFUNCTION, upload);
    curl_easy_setopt(h.get(), CURLOPT_READDATA, &up);
    curl_easy_setopt(h.get(), CURLOPT_UPLOAD, 1L);
    perform(h.get(), "SMTP send");
    return {"imap-smtp", email::subject_line(env)};
}

PollResult ImapSmtpTransport::poll(const Identity& recipient) {
    PollResult result;
    const std::string mailbox =
        base_url("imaps", "imap", config_.imap_host, config_.imap_port) + "/" + url_folder(config_.imap_folder);

    std::string listing;
    {
        auto h = make_handle(config_, mailbox, config_.imap_user, config_.imap_password, config_.imap_port);
        std::string cmd = "UID SEARCH UNSEEN SUBJECT \"" + std::string(email::kSubjectMarker) + "\"";
        curl_easy_setopt(h.get(), CURLOPT_CUSTOMREQUEST, cmd.c_str());
        curl_easy_setopt(h.get(), CURLOPT_WRITEFUNCTION, collect);
        curl_easy_setopt(h.get(), CURLOPT_WRITEDATA, &listing);
        perform(h.get(), "IMAP search");
    }

    std::vector<std::string> uids;
    std::istringstream lines(listing);
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream words(line);
        std::string star, tag;
        words >> star >> tag;
        if (star != "*" || tag != "SEARCH") continue;
        for (std::string uid; words >> uid;) uids.push_back(uid);
    }

    for (const auto& uid : uids) {
        std::string raw;
        try {
            auto h = make_handle(config_, mailbox + "/;UID=" + uid, config_.imap_user, config_.imap_password,
                                 config_.imap_port);
            curl_easy_setopt(h.get(), CURLOPT_WRITEFUNCTION, collect);
            curl_easy_setopt(h.get(), CURLOPT_WRITEDATA, &raw);
            perform(h.get(), "IMAP fetch");
        } catch (const TransportError& e) {
            result.warnings.push_back("uid " + uid + ": " + e.what());
            continue;
        }
        try {
            auto env = email::decode_email(as_bytes(raw));
            if (!env) continue;
            if (env->recipient != recipient) {
                result.warnings.push_back("uid " + uid + " addressed to " + env->recipient.str());
                continue;
            }
            result.envelopes.push_back(std::move(*env));
        } catch (const Error& e) {
            result.warnings.push_back("uid " + uid + ": " + e.what());
        }
    }
    return result;
}

}  // namespace pakemail
