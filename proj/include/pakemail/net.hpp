#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "pakemail/bytes.hpp"

namespace pakemail::net {

/// Owning TCP socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();
    /// Wakes any thread blocked in accept/recv on this socket.
    void shutdown() const;

private:
    int fd_ = -1;
};

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    /// "host:port"; throws InvalidArgument.
    static Endpoint parse(std::string_view text);
    std::string str() const { return host + ":" + std::to_string(port); }
};

/// Throws UnreachableError when the peer cannot be reached in time.
Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout);

/// Bound, listening socket with SO_REUSEADDR. Port 0 picks a free port.
Socket listen(const Endpoint& ep, int backlog = 64);
std::uint16_t local_port(const Socket& s);

/// Invalid socket once the listener has been shut down.
Socket accept(const Socket& listener);

void set_io_timeout(const Socket& s, std::chrono::milliseconds timeout);

/// Throws TransportError on failure.
void write_all(const Socket& s, ByteView data);

/// Reads one length-prefixed frame and returns the bytes after the prefix.
/// nullopt on a clean close before the first byte. Throws DecodeError when
/// the announced length exceeds `max_size`, TransportError on I/O failure.
std::optional<Bytes> read_frame(const Socket& s, std::size_t max_size);

}  // namespace pakemail::net
