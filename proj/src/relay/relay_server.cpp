#include "pakemail/relay_server.hpp"

#include <fstream>
#include <iterator>

#include "pakemail/errors.hpp"

namespace pakemail::relay {

MailboxStore::MailboxStore(std::filesystem::path log_path) {
    if (std::filesystem::exists(log_path)) {
        std::ifstream in(log_path, std::ios::binary);
        Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::size_t pos = 0;
        std::size_t good = 0;
        while (data.size() - pos >= 4) {
            auto len = get_u32_be(ByteView(data).subspan(pos, 4));
            if (len > kMaxFrameSize || data.size() - pos - 4 < len) break;
            try {
                apply(decode_frame_body(ByteView(data).subspan(pos + 4, len)));
            } catch (const Error&) {
                break;
            }
            pos += 4 + len;
            good = pos;
        }
        // A crash mid-append leaves a torn record; drop it so new records
        // start on a frame boundary.
        if (good != data.size()) std::filesystem::resize_file(log_path, good);
    }
    log_.open(log_path, std::ios::binary | std::ios::app);
    if (!log_) throw Error("cannot open relay log " + log_path.string());
}

void MailboxStore::apply(const Frame& f) {
    if (f.op == Opcode::put && f.fields.size() == 2) {
        boxes_[f.fields[0]][next_id_++] = f.fields[1];
    } else if (f.op == Opcode::ack && !f.fields.empty()) {
        auto it = boxes_.find(f.fields[0]);
        if (it == boxes_.end()) return;
        for (std::size_t i = 1; i < f.fields.size(); ++i) it->second.erase(decode_id(f.fields[i]));
        if (it->second.empty()) boxes_.erase(it);
    } else {
        throw DecodeError("unexpected record in relay log");
    }
}

void MailboxStore::log(const Frame& f) {
    if (!log_.is_open()) return;
    auto wire = encode_frame(f);
    log_.write(reinterpret_cast<const char*>(wire.data()), static_cast<std::streamsize>(wire.size()));
    log_.flush();
    if (!log_) throw Error("relay log write failed");
}

BlobId MailboxStore::put(ByteView recipient, ByteView blob) {
    if (recipient.empty()) throw InvalidArgument("empty recipient");
    auto f = make_put(recipient, blob);
    std::lock_guard lock(mu_);
    log(f);
    BlobId id = next_id_;
    apply(f);
    return id;
}

std::vector<std::pair<BlobId, Bytes>> MailboxStore::get(ByteView recipient) const {
    std::lock_guard lock(mu_);
    std::vector<std::pair<BlobId, Bytes>> out;
    auto it = boxes_.find(Bytes(recipient.begin(), recipient.end()));
    if (it == boxes_.end()) return out;
    for (const auto& [id, blob] : it->second) out.emplace_back(id, blob);
    return out;
}

std::size_t MailboxStore::ack(ByteView recipient, const std::vector<BlobId>& ids) {
    std::lock_guard lock(mu_);
    auto it = boxes_.find(Bytes(recipient.begin(), recipient.end()));
    if (it == boxes_.end()) return 0;
    std::vector<BlobId> present;
    for (auto id : ids)
        if (it->second.count(id)) present.push_back(id);
    if (present.empty()) return 0;
    auto f = make_ack(recipient, present);
    log(f);
    apply(f);
    return present.size();
}

std::size_t MailboxStore::size() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [_, box] : boxes_) n += box.size();
    return n;
}

Frame handle_request(MailboxStore& store, const Frame& req) {
    try {
        switch (req.op) {
            case Opcode::put:
                if (req.fields.size() != 2 || req.fields[0].empty()) return make_err("PUT expects recipient and blob");
                return make_ok(store.put(req.fields[0], req.fields[1]));
            case Opcode::get:
                if (req.fields.size() != 1 || req.fields[0].empty()) return make_err("GET expects recipient");
                return make_list(store.get(req.fields[0]));
            case Opcode::ack: {
                if (req.fields.empty() || req.fields[0].empty()) return make_err("ACK expects recipient and ids");
                std::vector<BlobId> ids;
                for (std::size_t i = 1; i < req.fields.size(); ++i) ids.push_back(decode_id(req.fields[i]));
                store.ack(req.fields[0], ids);
                return make_ok();
            }
            default:
                return make_err("not a request opcode");
        }
    } catch (const Error& e) {
        return make_err(e.what());
    }
}

RelayServer::RelayServer(MailboxStore& store, net::Endpoint bind) : store_(store), bind_(std::move(bind)) {}

RelayServer::~RelayServer() { stop(); }

void RelayServer::start() {
    if (running_) return;
    listener_ = net::listen(bind_);
    port_ = net::local_port(listener_);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void RelayServer::stop() {
    if (!running_.exchange(false)) return;
    listener_.shutdown();
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();
    {
        std::lock_guard lock(conn_mu_);
        for (auto& c : connections_) c.socket->shutdown();
    }
    reap(true);
}

void RelayServer::wait() {
    if (acceptor_.joinable()) acceptor_.join();
}

void RelayServer::reap(bool all) {
    std::list<Connection> finished;
    {
        std::lock_guard lock(conn_mu_);
        for (auto it = connections_.begin(); it != connections_.end();) {
            auto next = std::next(it);
            if (all || it->done->load()) finished.splice(finished.end(), connections_, it);
            it = next;
        }
    }
    for (auto& c : finished)
        if (c.thread.joinable()) c.thread.join();
}

void RelayServer::accept_loop() {
    while (running_) {
        net::Socket s = net::accept(listener_);
        if (!s.valid()) break;
        reap(false);
        auto sock = std::make_shared<net::Socket>(std::move(s));
        auto done = std::make_shared<std::atomic<bool>>(false);
        std::lock_guard lock(conn_mu_);
        if (!running_) break;
        connections_.push_back({sock, std::thread([this, sock, done] {
                                    serve(sock);
                                    done->store(true);
                                }),
                                done});
    }
}

void RelayServer::serve(std::shared_ptr<net::Socket> sock) {
    try {
        for (;;) {
            std::optional<Bytes> body;
            try {
                body = net::read_frame(*sock, kMaxFrameSize);
            } catch (const DecodeError& e) {
                // Length prefix unusable: the stream cannot be resynchronised.
                net::write_all(*sock, encode_frame(make_err(e.what())));
                return;
            }
            if (!body) return;
            Frame reply;
            try {
                reply = handle_request(store_, decode_frame_body(*body));
            } catch (const DecodeError& e) {
                reply = make_err(e.what());
            }
            net::write_all(*sock, encode_frame(reply));
        }
    } catch (const Error&) {
        // Peer vanished; nothing to clean up beyond the socket.
    }
}

}  // namespace pakemail::relay
