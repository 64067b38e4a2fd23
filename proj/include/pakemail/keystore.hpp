#pragma once

// Per-client persistent state: the own key pair, one row per peer, the
// exchange history, and envelopes received before anyone asked for them.
//
// File layout: the header line `pakemail-keystore v1`, then one JSON object
// per line tagged by "kind" (self, kdf, peer, exchange, stash). Binary
// fields are lowercase hex. Every mutation rewrites the file through a
// temporary and a rename, so a crash leaves either the old or new version.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pakemail/confirm.hpp"
#include "pakemail/envelope.hpp"
#include "pakemail/pake.hpp"
#include "pakemail/types.hpp"

namespace pakemail {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

/// BLAKE2b-160 of a public key.
Fingerprint fingerprint_of(ByteView public_key);

struct SelfRecord {
    Identity identity;
    Bytes public_key;  // Ed25519
    Bytes secret_key;
    Fingerprint fingerprint;
};

/// Fresh Ed25519 key pair for `identity`.
SelfRecord generate_self(Identity identity);

enum class PeerStatus : std::uint8_t { unauthenticated, authenticated };
std::string_view to_string(PeerStatus s);

struct PeerRecord {
    Identity identity;
    std::optional<Fingerprint> fingerprint;
    PeerStatus status = PeerStatus::unauthenticated;
    /// Final key of the last confirmed exchange; the next renewal's password.
    std::optional<Key256> chain_key;
    std::uint64_t attempts = 0;              // exchanges ever started, never decreases
    std::uint32_t consecutive_failures = 0;  // reset by success or operator override
    std::uint32_t generation = 0;            // confirmed exchanges so far
    Timestamp authenticated_at = 0;

    bool operator==(const PeerRecord&) const = default;
};

enum class Outcome : std::uint8_t { success, password_mismatch, aborted_by_timeout, protocol_error };
std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

struct ExchangeRecord {
    ExchangeId id;
    Identity peer;
    Role role = Role::initiator;
    Phase phase = Phase::started;
    Timestamp started_at = 0;
    Timestamp deadline = 0;
    Timestamp ended_at = 0;
    std::optional<Outcome> outcome;
    std::uint64_t attempt_count = 0;
    bool chained = false;
    BindingMode mode = BindingMode::in_confirmation;
    std::string detail;

    bool operator==(const ExchangeRecord&) const = default;
};

struct StashedEnvelope {
    TransportEnvelope envelope;
    Timestamp received_at = 0;
};

class Keystore {
public:
    static constexpr std::string_view kHeader = "pakemail-keystore v1";

    /// Volatile store; nothing touches the disk.
    Keystore();
    /// Loads `path` if it exists. With a passphrase, chain keys and the
    /// secret key are sealed under an Argon2id-derived key; a protected file
    /// opened without one throws Error.
    explicit Keystore(std::filesystem::path path, std::optional<std::string> passphrase = std::nullopt);

    Keystore(const Keystore&) = delete;
    Keystore& operator=(const Keystore&) = delete;

    bool persistent() const { return !path_.empty(); }
    const std::filesystem::path& path() const { return path_; }
    bool encrypted() const { return at_rest_key_.has_value(); }

    /// Discards memory and re-reads the file.
    void reload();

    std::optional<SelfRecord> self() const;
    void set_self(const SelfRecord& self);

    std::optional<PeerRecord> peer(const Identity& id) const;
    std::vector<PeerRecord> peers() const;
    void put_peer(const PeerRecord& peer);
    bool forget_peer(const Identity& id);

    std::optional<ExchangeRecord> exchange(const ExchangeId& id) const;
    /// In start order.
    std::vector<ExchangeRecord> exchanges() const;
    /// Records from position `first` onward, in start order.
    std::vector<ExchangeRecord> exchanges_from(std::size_t first) const;
    std::size_t exchange_count() const;
    void put_exchange(const ExchangeRecord& record);

    std::vector<StashedEnvelope> stash() const;
    /// False when an identical envelope is already stashed.
    bool stash_add(const TransportEnvelope& env, Timestamp received_at);
    bool stash_remove(const TransportEnvelope& env);

    /// Serialised file contents (also used for in-memory stores).
    std::string dump() const;

private:
    void load_locked();
    void save_locked() const;
    std::string dump_locked() const;
    std::string seal_field(ByteView plain, std::string_view aad) const;
    Bytes open_field(const std::string& stored, std::string_view aad) const;

    mutable std::mutex mu_;
    std::filesystem::path path_;
    std::optional<std::string> passphrase_;
    std::optional<Key256> at_rest_key_;
    Bytes kdf_salt_;
    unsigned long long kdf_ops_ = 0;
    std::size_t kdf_mem_ = 0;

    std::optional<SelfRecord> self_;
    std::map<Identity, PeerRecord> peers_;
    std::map<ExchangeId, ExchangeRecord> exchanges_;
    std::vector<ExchangeId> exchange_order_;
    std::vector<StashedEnvelope> stash_;
};

}  // namespace pakemail
