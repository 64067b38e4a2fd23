#include "pakemail/email.hpp"

#include <sodium.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <ctime>
#include <map>
#include <string>
#include <vector>

#include "pakemail/errors.hpp"

namespace pakemail::email {

namespace {

constexpr std::string_view kCrlf = "\r\n";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

void check_header_safe(const Identity& id) {
    for (char c : id.str())
        if (c == '\r' || c == '\n' || c == '<' || c == '>')
            throw InvalidArgument("identity cannot be used as an email address: " + id.str());
}

std::string rfc5322_date(std::chrono::system_clock::time_point tp) {
    std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, "%a, %d %b %Y %H:%M:%S +0000", &tm);
    return buf;
}

std::string base64(ByteView data) {
    std::string out(sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

Bytes unbase64(std::string_view text) {
    Bytes out(text.size() / 4 * 3 + 3);
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \t\r\n", &len, &end,
                          sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size())
        throw DecodeError("invalid base64 attachment");
    out.resize(len);
    return out;
}

// Splits into logical lines, accepting CRLF or bare LF.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            if (pos < text.size()) lines.push_back(text.substr(pos));
            break;
        }
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    return lines;
}

struct Part {
    std::map<std::string, std::string> headers;  // lower-cased names
    std::vector<std::string_view> body;
};

// Parses "Name: value" headers (with folding) up to the first blank line.
Part parse_part(const std::vector<std::string_view>& lines, std::size_t begin, std::size_t end) {
    Part part;
    std::string current;
    std::size_t i = begin;
    auto flush = [&] {
        if (current.empty()) return;
        auto colon = current.find(':');
        if (colon == std::string::npos) throw DecodeError("malformed header line");
        part.headers[lower(trim(std::string_view(current).substr(0, colon)))] =
            std::string(trim(std::string_view(current).substr(colon + 1)));
        current.clear();
    };
    for (; i < end; ++i) {
        auto line = lines[i];
        if (line.empty()) {
            ++i;
            break;
        }
        if (line.front() == ' ' || line.front() == '\t') {
            if (current.empty()) throw DecodeError("continuation line without header");
            current += ' ';
            current += trim(line);
        } else {
            flush();
            current = std::string(line);
        }
    }
    flush();
    part.body.assign(lines.begin() + static_cast<std::ptrdiff_t>(i), lines.begin() + static_cast<std::ptrdiff_t>(end));
    return part;
}

const std::string* header(const Part& p, std::string_view name) {
    auto it = p.headers.find(lower(name));
    return it == p.headers.end() ? nullptr : &it->second;
}

std::optional<std::string> header_param(std::string_view value, std::string_view param) {
    auto lv = lower(value);
    auto key = lower(param) + "=";
    std::size_t pos = 0;
    while ((pos = lv.find(key, pos)) != std::string::npos) {
        bool boundary_ok = pos == 0 || lv[pos - 1] == ';' || std::isspace(static_cast<unsigned char>(lv[pos - 1]));
        if (!boundary_ok) {
            ++pos;
            continue;
        }
        auto rest = value.substr(pos + key.size());
        if (!rest.empty() && rest.front() == '"') {
            auto close = rest.find('"', 1);
            if (close == std::string_view::npos) throw DecodeError("unterminated quoted parameter");
            return std::string(rest.substr(1, close - 1));
        }
        auto semi = rest.find(';');
        return std::string(trim(rest.substr(0, semi)));
    }
    return std::nullopt;
}

Identity parse_address(const std::string* value, std::string_view which) {
    if (!value) throw DecodeError("missing " + std::string(which) + " header");
    std::string_view v = *value;
    auto open = v.find('<');
    if (open != std::string_view::npos) {
        auto close = v.find('>', open);
        if (close == std::string_view::npos) throw DecodeError("unterminated address in " + std::string(which));
        v = v.substr(open + 1, close - open - 1);
    }
    v = trim(v);
    if (v.empty()) throw DecodeError("empty address in " + std::string(which));
    return Identity(std::string(v));
}

}  // namespace

std::string subject_line(const TransportEnvelope& env) {
    return std::string(kSubjectMarker) + " " + env.exchange_id.hex() + " " + std::to_string(to_int(env.flow));
}

Bytes encode_email(const TransportEnvelope& env, std::chrono::system_clock::time_point date) {
    env.validate();
    check_header_safe(env.sender);
    check_header_safe(env.recipient);
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");

    std::array<std::uint8_t, 12> rnd;
    randombytes_buf(rnd.data(), rnd.size());
    const std::string boundary = "pakemail-" + to_hex(rnd);

    std::string m;
    auto line = [&m](std::string_view s) {
        m += s;
        m += kCrlf;
    };
    line("From: <" + env.sender.str() + ">");
    line("To: <" + env.recipient.str() + ">");
    line("Subject: " + subject_line(env));
    line("Date: " + rfc5322_date(date));
    line("Message-ID: <" + to_hex(rnd) + "." + env.exchange_id.hex() + "@pakemail>");
    line("MIME-Version: 1.0");
    if (env.fingerprint) line(std::string(kFingerprintHeader) + ": " + env.fingerprint->hex());
    line("Content-Type: multipart/mixed; boundary=\"" + boundary + "\"");
    line("");
    line("--" + boundary);
    line("Content-Type: text/plain; charset=us-ascii");
    line("Content-Transfer-Encoding: 7bit");
    line("");
    line("This message carries an automated key-authentication step; it can be ignored.");
    line("--" + boundary);
    line("Content-Type: application/octet-stream; name=\"" + std::string(kAttachmentName) + "\"");
    line("Content-Transfer-Encoding: base64");
    line("Content-Disposition: attachment; filename=\"" + std::string(kAttachmentName) + "\"");
    line("");
    auto b64 = base64(env.payload);
    for (std::size_t i = 0; i < b64.size(); i += 76) line(std::string_view(b64).substr(i, 76));
    line("--" + boundary + "--");
    return to_bytes(m);
}

std::optional<TransportEnvelope> decode_email(ByteView message) {
    auto text = std::string_view(reinterpret_cast<const char*>(message.data()), message.size());
    auto lines = split_lines(text);
    Part top = parse_part(lines, 0, lines.size());

    const std::string* subject = header(top, "Subject");
    if (!subject) return std::nullopt;
    std::string_view subj = trim(*subject);
    if (subj != kSubjectMarker &&
        !(subj.size() > kSubjectMarker.size() && subj.substr(0, kSubjectMarker.size()) == kSubjectMarker &&
          subj[kSubjectMarker.size()] == ' '))
        return std::nullopt;

    // Exact grammar: "PAKEMAIL" SP 32HEX SP DIGIT
    auto rest = subj.substr(std::min(subj.size(), kSubjectMarker.size() + 1));
    if (rest.size() != 2 * kExchangeIdSize + 2 || rest[2 * kExchangeIdSize] != ' ' ||
        !std::isdigit(static_cast<unsigned char>(rest.back())))
        throw DecodeError("malformed PAKEMAIL subject: " + std::string(subj));

    TransportEnvelope env;
    env.exchange_id = ExchangeId::from_hex(rest.substr(0, 2 * kExchangeIdSize));
    env.flow = flow_from_int(rest.back() - '0');
    env.sender = parse_address(header(top, "From"), "From");
    env.recipient = parse_address(header(top, "To"), "To");

    if (carries_fingerprint(env.flow)) {
        const std::string* fpr = header(top, kFingerprintHeader);
        if (!fpr || !is_hex(trim(*fpr), 2 * kFingerprintSize))
            throw DecodeError("missing or malformed " + std::string(kFingerprintHeader) + " header");
        env.fingerprint = Fingerprint::from_hex(trim(*fpr));
    }

    const std::string* ctype = header(top, "Content-Type");
    if (!ctype) throw DecodeError("missing Content-Type");
    auto boundary = header_param(*ctype, "boundary");
    if (!boundary || boundary->empty()) throw DecodeError("multipart boundary missing");

    const std::string delim = "--" + *boundary;
    const std::string last = delim + "--";
    std::vector<std::size_t> starts;
    std::size_t end_at = lines.size();
    // Body lines start after the header block; find them by offset into `lines`.
    std::size_t body_begin = lines.size() - top.body.size();
    for (std::size_t i = body_begin; i < lines.size(); ++i) {
        auto l = trim(lines[i]);
        if (l == last) {
            end_at = i;
            break;
        }
        if (l == delim) starts.push_back(i);
    }
    if (starts.empty()) throw DecodeError("no MIME parts found");

    for (std::size_t k = 0; k < starts.size(); ++k) {
        std::size_t b = starts[k] + 1;
        std::size_t e = k + 1 < starts.size() ? starts[k + 1] : end_at;
        Part part = parse_part(lines, b, e);
        const std::string* disp = header(part, "Content-Disposition");
        const std::string* pct = header(part, "Content-Type");
        std::optional<std::string> fname;
        if (disp) fname = header_param(*disp, "filename");
        if (!fname && pct) fname = header_param(*pct, "name");
        if (!fname || *fname != kAttachmentName) continue;
        const std::string* cte = header(part, "Content-Transfer-Encoding");
        if (!cte || lower(*cte) != "base64") throw DecodeError("attachment is not base64 encoded");
        std::string b64;
        for (auto l : part.body) b64 += trim(l);
        env.payload = unbase64(b64);
        return env;
    }
    throw DecodeError("PAKEMAIL message has no " + std::string(kAttachmentName) + " attachment");
}

}  // namespace pakemail::email
