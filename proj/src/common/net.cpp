#include "pakemail/net.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>

#include "pakemail/errors.hpp"

namespace pakemail::net {

namespace {

struct AddrInfoDeleter {
    void operator()(addrinfo* ai) const { freeaddrinfo(ai); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Endpoint& ep, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    auto port = std::to_string(ep.port);
    int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw UnreachableError("cannot resolve " + ep.str() + ": " + gai_strerror(rc));
    return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void Socket::shutdown() const {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Endpoint Endpoint::parse(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon + 1 >= text.size())
        throw InvalidArgument("expected host:port, got '" + std::string(text) + "'");
    Endpoint ep;
    ep.host = std::string(text.substr(0, colon));
    if (ep.host.size() >= 2 && ep.host.front() == '[' && ep.host.back() == ']')
        ep.host = ep.host.substr(1, ep.host.size() - 2);
    unsigned long port = 0;
    for (char c : text.substr(colon + 1)) {
        if (c < '0' || c > '9') throw InvalidArgument("bad port in '" + std::string(text) + "'");
        port = port * 10 + static_cast<unsigned long>(c - '0');
        if (port > 65535) throw InvalidArgument("port out of range in '" + std::string(text) + "'");
    }
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
    auto addrs = resolve(ep, false);
    std::string last_error = "no addresses";
    for (addrinfo* ai = addrs.get(); ai; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!s.valid()) {
            last_error = errno_text();
            continue;
        }
        int flags = fcntl(s.fd(), F_GETFL, 0);
        fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno != EINPROGRESS) {
            last_error = errno_text();
            continue;
        }
        if (rc != 0) {
            pollfd pfd{s.fd(), POLLOUT, 0};
            rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
            if (rc <= 0) {
                last_error = rc == 0 ? "connect timed out" : errno_text();
                continue;
            }
            int err = 0;
            socklen_t len = sizeof err;
            getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
            if (err != 0) {
                last_error = std::strerror(err);
                continue;
            }
        }
        fcntl(s.fd(), F_SETFL, flags);
        int one = 1;
        setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        set_io_timeout(s, timeout);
        return s;
    }
    throw UnreachableError("cannot connect to " + ep.str() + ": " + last_error);
}

Socket listen(const Endpoint& ep, int backlog) {
    auto addrs = resolve(ep, true);
    std::string last_error = "no addresses";
    for (addrinfo* ai = addrs.get(); ai; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!s.valid()) continue;
        int one = 1;
        setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), backlog) != 0) {
            last_error = errno_text();
            continue;
        }
        return s;
    }
    throw Error("cannot listen on " + ep.str() + ": " + last_error);
}

std::uint16_t local_port(const Socket& s) {
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    if (getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) return 0;
    if (addr.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    if (addr.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    return 0;
}

Socket accept(const Socket& listener) {
    for (;;) {
        int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) return Socket(fd);
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return Socket();
    }
}

void set_io_timeout(const Socket& s, std::chrono::milliseconds timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    setsockopt(s.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void write_all(const Socket& s, ByteView data) {
    std::size_t off = 0;
    while (off < data.size()) {
        auto n = ::send(s.fd(), data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError("send failed: " + errno_text(), true);
        }
        off += static_cast<std::size_t>(n);
    }
}

namespace {

// Returns bytes read; stops early only on EOF.
std::size_t read_upto(const Socket& s, std::uint8_t* buf, std::size_t n) {
    std::size_t off = 0;
    while (off < n) {
        auto r = ::recv(s.fd(), buf + off, n - off, 0);
        if (r == 0) break;
        if (r < 0) {
            if (errno == EINTR) continue;
            throw TransportError("recv failed: " + errno_text(), true);
        }
        off += static_cast<std::size_t>(r);
    }
    return off;
}

}  // namespace

std::optional<Bytes> read_frame(const Socket& s, std::size_t max_size) {
    std::uint8_t len_buf[4];
    auto got = read_upto(s, len_buf, 4);
    if (got == 0) return std::nullopt;
    if (got < 4) throw TransportError("connection closed inside frame header", true);
    auto len = get_u32_be(ByteView(len_buf, 4));
    if (len > max_size) throw DecodeError("frame of " + std::to_string(len) + " bytes exceeds limit");
    Bytes body(len);
    if (read_upto(s, body.data(), len) < len) throw TransportError("connection closed inside frame", true);
    return body;
}

}  // namespace pakemail::net
