#include "pakemail/keystore.hpp"

#include <sodium.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/sealed.hpp"

namespace pakemail {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSealedPrefix = "sealed:";

void init_sodium() {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
}

Key256 key_from_hex(const std::string& hex) {
    if (!is_hex(hex, 64)) throw DecodeError("stored key must be 64 hex digits");
    auto b = from_hex(hex);
    Key256 k;
    std::copy(b.begin(), b.end(), k.begin());
    return k;
}

Timestamp get_ts(const json& j, const char* key) { return j.contains(key) ? j.at(key).get<Timestamp>() : 0; }

Phase phase_from_string(std::string_view s) {
    for (auto p : {Phase::created, Phase::started, Phase::keyed, Phase::confirmed, Phase::failed})
        if (to_string(p) == s) return p;
    throw DecodeError("unknown phase: " + std::string(s));
}

}  // namespace

Fingerprint fingerprint_of(ByteView public_key) {
    init_sodium();
    Fingerprint::Array out;
    crypto_generichash(out.data(), out.size(), public_key.data(), public_key.size(), nullptr, 0);
    return Fingerprint(out);
}

SelfRecord generate_self(Identity identity) {
    init_sodium();
    Bytes pk(crypto_sign_PUBLICKEYBYTES), sk(crypto_sign_SECRETKEYBYTES);
    crypto_sign_keypair(pk.data(), sk.data());
    auto fpr = fingerprint_of(pk);
    return {std::move(identity), std::move(pk), std::move(sk), fpr};
}

std::string_view to_string(PeerStatus s) {
    return s == PeerStatus::authenticated ? "authenticated" : "unauthenticated";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::success: return "success";
        case Outcome::password_mismatch: return "password-mismatch";
        case Outcome::aborted_by_timeout: return "aborted-by-timeout";
        case Outcome::protocol_error: return "protocol-error";
    }
    return "?";
}

Outcome outcome_from_string(std::string_view s) {
    for (auto o : {Outcome::success, Outcome::password_mismatch, Outcome::aborted_by_timeout, Outcome::protocol_error})
        if (to_string(o) == s) return o;
    throw DecodeError("unknown outcome: " + std::string(s));
}

Keystore::Keystore() = default;

Keystore::Keystore(fs::path path, std::optional<std::string> passphrase)
    : path_(std::move(path)), passphrase_(std::move(passphrase)) {
    if (passphrase_ && passphrase_->empty()) passphrase_.reset();
    std::lock_guard lock(mu_);
    load_locked();
}

void Keystore::reload() {
    std::lock_guard lock(mu_);
    if (!persistent()) return;
    load_locked();
}

std::string Keystore::seal_field(ByteView plain, std::string_view aad) const {
    if (!at_rest_key_) return to_hex(plain);
    return std::string(kSealedPrefix) + to_hex(seal(*at_rest_key_, plain, as_bytes(aad)).serialize());
}

Bytes Keystore::open_field(const std::string& stored, std::string_view aad) const {
    if (stored.rfind(kSealedPrefix, 0) != 0) return from_hex(stored);
    if (!at_rest_key_) throw Error("keystore " + path_.string() + " is passphrase-protected; set the passphrase");
    auto msg = SealedMessage::parse(from_hex(std::string_view(stored).substr(kSealedPrefix.size())));
    auto plain = open(*at_rest_key_, msg, as_bytes(aad));
    if (!plain) throw Error("wrong keystore passphrase or corrupted keystore");
    return *plain;
}

void Keystore::load_locked() {
    self_.reset();
    peers_.clear();
    exchanges_.clear();
    exchange_order_.clear();
    stash_.clear();
    at_rest_key_.reset();
    kdf_salt_.clear();
    kdf_ops_ = 0;
    kdf_mem_ = 0;

    std::vector<json> records;
    if (fs::exists(path_)) {
        std::ifstream in(path_);
        std::string line;
        if (!std::getline(in, line) || line != kHeader)
            throw DecodeError(path_.string() + ": missing '" + std::string(kHeader) + "' header");
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                records.push_back(json::parse(line));
            } catch (const json::exception& e) {
                throw DecodeError(path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    // The kdf record must be processed first so sealed fields can be opened.
    for (const auto& r : records) {
        if (r.value("kind", "") != "kdf") continue;
        kdf_salt_ = from_hex(r.at("salt").get<std::string>());
        kdf_ops_ = r.at("opslimit").get<unsigned long long>();
        kdf_mem_ = r.at("memlimit").get<std::size_t>();
        if (!passphrase_) throw Error("keystore " + path_.string() + " is passphrase-protected; set the passphrase");
        if (kdf_salt_.size() != crypto_pwhash_SALTBYTES) throw DecodeError("bad keystore salt");
        Key256 key;
        init_sodium();
        if (crypto_pwhash(key.data(), key.size(), passphrase_->data(), passphrase_->size(), kdf_salt_.data(),
                          kdf_ops_, kdf_mem_,
                          crypto_pwhash_ALG_ARGON2ID13) != 0)
            throw Error("keystore key derivation failed (out of memory)");
        at_rest_key_ = key;
    }
    if (passphrase_ && !at_rest_key_) {
        init_sodium();
        kdf_salt_.resize(crypto_pwhash_SALTBYTES);
        randombytes_buf(kdf_salt_.data(), kdf_salt_.size());
        kdf_ops_ = crypto_pwhash_OPSLIMIT_INTERACTIVE;
        kdf_mem_ = crypto_pwhash_MEMLIMIT_INTERACTIVE;
        Key256 key;
        if (crypto_pwhash(key.data(), key.size(), passphrase_->data(), passphrase_->size(), kdf_salt_.data(),
                          kdf_ops_, kdf_mem_,
                          crypto_pwhash_ALG_ARGON2ID13) != 0)
            throw Error("keystore key derivation failed (out of memory)");
        at_rest_key_ = key;
    }

    try {
        for (const auto& r : records) {
            auto kind = r.at("kind").get<std::string>();
            if (kind == "kdf") continue;
            if (kind == "self") {
                SelfRecord s{Identity(r.at("identity").get<std::string>()),
                             from_hex(r.at("public_key").get<std::string>()),
                             open_field(r.at("secret_key").get<std::string>(), "self"), Fingerprint()};
                s.fingerprint = fingerprint_of(s.public_key);
                self_ = std::move(s);
            } else if (kind == "peer") {
                PeerRecord p;
                p.identity = Identity(r.at("identity").get<std::string>());
                if (auto f = r.value("fingerprint", ""); !f.empty()) p.fingerprint = Fingerprint::from_hex(f);
                p.status = r.at("status").get<std::string>() == "authenticated" ? PeerStatus::authenticated
                                                                                 : PeerStatus::unauthenticated;
                if (auto c = r.value("chain_key", ""); !c.empty()) {
                    auto raw = open_field(c, "peer:" + p.identity.str());
                    p.chain_key = key_from_hex(to_hex(raw));
                    sodium_memzero(raw.data(), raw.size());
                }
                p.attempts = r.value("attempts", std::uint64_t{0});
                p.consecutive_failures = r.value("consecutive_failures", std::uint32_t{0});
                p.generation = r.value("generation", std::uint32_t{0});
                p.authenticated_at = get_ts(r, "authenticated_at");
                peers_[p.identity] = std::move(p);
            } else if (kind == "exchange") {
                ExchangeRecord e;
                e.id = ExchangeId::from_hex(r.at("id").get<std::string>());
                e.peer = Identity(r.at("peer").get<std::string>());
                e.role = role_from_string(r.at("role").get<std::string>());
                e.phase = phase_from_string(r.at("phase").get<std::string>());
                e.started_at = get_ts(r, "started_at");
                e.deadline = get_ts(r, "deadline");
                e.ended_at = get_ts(r, "ended_at");
                if (auto o = r.value("outcome", ""); !o.empty()) e.outcome = outcome_from_string(o);
                e.attempt_count = r.value("attempt_count", std::uint64_t{0});
                e.chained = r.value("chained", false);
                e.mode = binding_mode_from_string(r.value("mode", "confirmation"));
                e.detail = r.value("detail", "");
                if (!exchanges_.count(e.id)) exchange_order_.push_back(e.id);
                exchanges_[e.id] = std::move(e);
            } else if (kind == "stash") {
                stash_.push_back({decode_envelope(from_hex(r.at("envelope").get<std::string>())),
                                  get_ts(r, "received_at")});
            } else {
                throw DecodeError("unknown record kind: " + kind);
            }
        }
    } catch (const json::exception& e) {
        throw DecodeError(path_.string() + ": " + e.what());
    }
}

std::string Keystore::dump_locked() const {
    std::ostringstream out;
    out << kHeader << '\n';
    if (at_rest_key_) {
        out << json{{"kind", "kdf"},
                    {"alg", "argon2id"},
                    {"salt", to_hex(kdf_salt_)},
                    {"opslimit", kdf_ops_},
                    {"memlimit", kdf_mem_}}
                   .dump()
            << '\n';
    }
    if (self_) {
        out << json{{"kind", "self"},
                    {"identity", self_->identity.str()},
                    {"public_key", to_hex(self_->public_key)},
                    {"secret_key", seal_field(self_->secret_key, "self")},
                    {"fingerprint", self_->fingerprint.hex()}}
                   .dump()
            << '\n';
    }
    for (const auto& [id, p] : peers_) {
        out << json{{"kind", "peer"},
                    {"identity", id.str()},
                    {"fingerprint", p.fingerprint ? p.fingerprint->hex() : ""},
                    {"status", to_string(p.status)},
                    {"chain_key", p.chain_key ? seal_field(*p.chain_key, "peer:" + id.str()) : ""},
                    {"attempts", p.attempts},
                    {"consecutive_failures", p.consecutive_failures},
                    {"generation", p.generation},
                    {"authenticated_at", p.authenticated_at}}
                   .dump()
            << '\n';
    }
    for (const auto& xid : exchange_order_) {
        const auto& e = exchanges_.at(xid);
        out << json{{"kind", "exchange"},
                    {"id", e.id.hex()},
                    {"peer", e.peer.str()},
                    {"role", to_string(e.role)},
                    {"phase", to_string(e.phase)},
                    {"started_at", e.started_at},
                    {"deadline", e.deadline},
                    {"ended_at", e.ended_at},
                    {"outcome", e.outcome ? std::string(to_string(*e.outcome)) : ""},
                    {"attempt_count", e.attempt_count},
                    {"chained", e.chained},
                    {"mode", to_string(e.mode)},
                    {"detail", e.detail}}
                   .dump()
            << '\n';
    }
    for (const auto& s : stash_) {
        out << json{{"kind", "stash"},
                    {"envelope", to_hex(encode_envelope(s.envelope))},
                    {"received_at", s.received_at}}
                   .dump()
            << '\n';
    }
    return out.str();
}

std::string Keystore::dump() const {
    std::lock_guard lock(mu_);
    return dump_locked();
}

void Keystore::save_locked() const {
    if (!persistent()) return;
    auto text = dump_locked();
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    auto tmp = path_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        out.flush();
        if (!out) throw Error("cannot write keystore " + tmp.string());
    }
    fs::permissions(tmp, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
    fs::rename(tmp, path_);
}

std::optional<SelfRecord> Keystore::self() const {
    std::lock_guard lock(mu_);
    return self_;
}

void Keystore::set_self(const SelfRecord& self) {
    std::lock_guard lock(mu_);
    self_ = self;
    save_locked();
}

std::optional<PeerRecord> Keystore::peer(const Identity& id) const {
    std::lock_guard lock(mu_);
    auto it = peers_.find(id);
    if (it == peers_.end()) return std::nullopt;
    return it->second;
}

std::vector<PeerRecord> Keystore::peers() const {
    std::lock_guard lock(mu_);
    std::vector<PeerRecord> out;
    for (const auto& [_, p] : peers_) out.push_back(p);
    return out;
}

void Keystore::put_peer(const PeerRecord& peer) {
    std::lock_guard lock(mu_);
    auto it = peers_.find(peer.identity);
    if (it != peers_.end() && peer.attempts < it->second.attempts)
        throw StateError("attempt counter for " + peer.identity.str() + " cannot decrease");
    peers_[peer.identity] = peer;
    save_locked();
}

bool Keystore::forget_peer(const Identity& id) {
    std::lock_guard lock(mu_);
    bool erased = peers_.erase(id) > 0;
    if (erased) save_locked();
    return erased;
}

std::optional<ExchangeRecord> Keystore::exchange(const ExchangeId& id) const {
    std::lock_guard lock(mu_);
    auto it = exchanges_.find(id);
    if (it == exchanges_.end()) return std::nullopt;
    return it->second;
}

std::vector<ExchangeRecord> Keystore::exchanges() const {
    std::lock_guard lock(mu_);
    std::vector<ExchangeRecord> out;
    out.reserve(exchange_order_.size());
    for (const auto& id : exchange_order_) out.push_back(exchanges_.at(id));
    return out;
}

std::vector<ExchangeRecord> Keystore::exchanges_from(std::size_t first) const {
    std::lock_guard lock(mu_);
    std::vector<ExchangeRecord> out;
    for (std::size_t i = first; i < exchange_order_.size(); ++i) out.push_back(exchanges_.at(exchange_order_[i]));
    return out;
}

std::size_t Keystore::exchange_count() const {
    std::lock_guard lock(mu_);
    return exchange_order_.size();
}

void Keystore::put_exchange(const ExchangeRecord& record) {
    std::lock_guard lock(mu_);
    auto it = exchanges_.find(record.id);
    if (it == exchanges_.end()) {
        exchange_order_.push_back(record.id);
    } else if (it->second.outcome && it->second.outcome != record.outcome) {
        throw StateError("exchange " + record.id.hex() + " already has a terminal outcome");
    }
    exchanges_[record.id] = record;
    save_locked();
}

std::vector<StashedEnvelope> Keystore::stash() const {
    std::lock_guard lock(mu_);
    return stash_;
}

bool Keystore::stash_add(const TransportEnvelope& env, Timestamp received_at) {
    std::lock_guard lock(mu_);
    for (const auto& s : stash_)
        if (s.envelope == env) return false;
    stash_.push_back({env, received_at});
    save_locked();
    return true;
}

bool Keystore::stash_remove(const TransportEnvelope& env) {
    std::lock_guard lock(mu_);
    auto it = std::find_if(stash_.begin(), stash_.end(), [&](const StashedEnvelope& s) { return s.envelope == env; });
    if (it == stash_.end()) return false;
    stash_.erase(it);
    save_locked();
    return true;
}

}  // namespace pakemail
