#pragma once

// Store-and-forward buffer for opaque blobs. The server knows recipients
// only as byte strings and never looks inside a blob, so it links against
// nothing but the framing code.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "pakemail/frame.hpp"
#include "pakemail/net.hpp"

namespace pakemail::relay {

/// Per-recipient queues of unacknowledged blobs. Thread-safe. With a log
/// path, every PUT and ACK is appended (as its wire frame) before it takes
/// effect in memory, and the log is replayed on construction.
class MailboxStore {
public:
    MailboxStore() = default;
    explicit MailboxStore(std::filesystem::path log_path);

    BlobId put(ByteView recipient, ByteView blob);
    std::vector<std::pair<BlobId, Bytes>> get(ByteView recipient) const;
    /// Returns how many of `ids` were present and removed.
    std::size_t ack(ByteView recipient, const std::vector<BlobId>& ids);

    std::size_t size() const;
    bool persistent() const { return log_.is_open(); }

private:
    void apply(const Frame& frame);
    void log(const Frame& frame);

    mutable std::mutex mu_;
    std::map<Bytes, std::map<BlobId, Bytes>> boxes_;
    BlobId next_id_ = 1;
    std::ofstream log_;
};

/// Answers one request frame. Malformed requests yield an ERR frame.
Frame handle_request(MailboxStore& store, const Frame& request);

/// TCP front end; one thread per connection.
class RelayServer {
public:
    RelayServer(MailboxStore& store, net::Endpoint bind);
    ~RelayServer();
    RelayServer(const RelayServer&) = delete;
    RelayServer& operator=(const RelayServer&) = delete;

    /// Binds and starts accepting. Throws Error when the address is taken.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();

    std::uint16_t port() const { return port_; }
    net::Endpoint endpoint() const { return {bind_.host, port_}; }

private:
    struct Connection {
        std::shared_ptr<net::Socket> socket;
        std::thread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };

    void accept_loop();
    void serve(std::shared_ptr<net::Socket> socket);
    void reap(bool all);

    MailboxStore& store_;
    net::Endpoint bind_;
    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::thread acceptor_;
    std::atomic<bool> running_{false};
    std::mutex conn_mu_;
    std::list<Connection> connections_;
};

}  // namespace pakemail::relay
