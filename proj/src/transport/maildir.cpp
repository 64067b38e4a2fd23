#include "pakemail/maildir.hpp"

#include <sodium.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iterator>

#include "pakemail/email.hpp"
#include "pakemail/errors.hpp"

namespace pakemail {

namespace fs = std::filesystem;

namespace {

std::string folder_name(const Identity& id) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id.str()) {
        bool safe = std::isalnum(c) || c == '@' || c == '.' || c == '_' || c == '+' || c == '-';
        if (safe) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xf]);
        }
    }
    if (out.front() == '.') out.replace(0, 1, "%2E");
    return out;
}

void ensure_layout(const fs::path& folder) {
    for (const char* sub : {"tmp", "new", "cur"}) fs::create_directories(folder / sub);
}

std::string unique_name() {
    static std::atomic<unsigned> counter{0};
    auto now = std::chrono::system_clock::now().time_since_epoch();
    auto usec = std::chrono::duration_cast<std::chrono::microseconds>(now).count();
    std::array<std::uint8_t, 8> rnd;
    randombytes_buf(rnd.data(), rnd.size());
    char host[128] = "localhost";
    gethostname(host, sizeof host - 1);
    std::string h = host;
    std::replace(h.begin(), h.end(), '/', '_');
    std::replace(h.begin(), h.end(), ':', '_');
    return std::to_string(usec / 1000000) + ".M" + std::to_string(usec % 1000000) + "P" + std::to_string(getpid()) +
           "Q" + std::to_string(counter++) + "R" + to_hex(rnd) + "." + h;
}

Bytes read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void mark_seen(const fs::path& folder, const fs::path& file) {
    std::error_code ec;
    fs::rename(file, folder / "cur" / (file.filename().string() + ":2,S"), ec);
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

MaildirTransport::MaildirTransport(fs::path root) : root_(std::move(root)) {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
}

fs::path MaildirTransport::mailbox(const Identity& recipient) const { return root_ / folder_name(recipient); }

fs::path MaildirTransport::hidden_folder(const Identity& recipient) const {
    return mailbox(recipient) / kHiddenFolder;
}

fs::path MaildirTransport::deliver_raw(const fs::path& folder, ByteView message) {
    ensure_layout(folder);
    auto name = unique_name();
    auto tmp = folder / "tmp" / name;
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw TransportError("cannot write " + tmp.string(), true);
        out.write(reinterpret_cast<const char*>(message.data()), static_cast<std::streamsize>(message.size()));
        out.flush();
        if (!out) throw TransportError("short write to " + tmp.string(), true);
    }
    auto dest = folder / "new" / name;
    std::error_code ec;
    fs::rename(tmp, dest, ec);
    if (ec) throw TransportError("cannot deliver " + dest.string() + ": " + ec.message(), true);
    return dest;
}

DeliveryReceipt MaildirTransport::send(const TransportEnvelope& env) {
    Bytes message;
    try {
        message = email::encode_email(env);
    } catch (const InvalidArgument& e) {
        throw TransportError(std::string("cannot serialise envelope: ") + e.what(), false);
    }
    try {
        auto dest = deliver_raw(hidden_folder(env.recipient), message);
        return {"maildir", dest.string()};
    } catch (const fs::filesystem_error& e) {
        throw TransportError(e.what(), true);
    }
}

PollResult MaildirTransport::poll(const Identity& recipient) {
    PollResult result;
    for (const auto& folder : {hidden_folder(recipient), mailbox(recipient)}) {
        if (!fs::exists(folder / "new")) continue;
        for (const auto& file : sorted_entries(folder / "new")) {
            try {
                auto env = email::decode_email(read_file(file));
                if (!env) continue;  // ordinary mail stays in the inbox
                if (env->recipient != recipient) {
                    result.warnings.push_back(file.filename().string() + ": addressed to " + env->recipient.str());
                } else {
                    result.envelopes.push_back(std::move(*env));
                }
            } catch (const Error& e) {
                result.warnings.push_back(file.filename().string() + ": " + e.what());
            }
            mark_seen(folder, file);
        }
    }
    return result;
}

}  // namespace pakemail
