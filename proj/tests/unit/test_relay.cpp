#include <fstream>
#include <thread>

#include "doctest.h"
#include "pakemail/errors.hpp"
#include "pakemail/frame.hpp"
#include "pakemail/net.hpp"
#include "pakemail/relay_client.hpp"
#include "pakemail/relay_server.hpp"
#include "temp_dir.hpp"

using namespace pakemail;
using namespace pakemail::relay;

namespace {

const Identity kA("alice@example.org");
const Identity kB("bob@example.org");

TransportEnvelope sample(Flow flow = Flow::initiator_tag) {
    return {ExchangeId::random(), flow, kA, kB, std::nullopt, Bytes(40, 3)};
}

Frame roundtrip(net::Socket& s, const Frame& f) {
    auto wire = encode_frame(f);
    net::write_all(s, wire);
    auto body = net::read_frame(s, kMaxFrameSize);
    REQUIRE(body);
    return decode_frame_body(*body);
}

}  // namespace

TEST_SUITE("relay") {
    TEST_CASE("frame codec") {
        auto f = make_put(as_bytes("bob"), as_bytes("blob"));
        auto wire = encode_frame(f);
        CHECK(get_u32_be(wire) == wire.size() - 4);
        CHECK(decode_frame_body(ByteView(wire).subspan(4)) == f);
        CHECK_THROWS_AS(decode_frame_body(Bytes{9}), DecodeError);
        CHECK_THROWS_AS(decode_frame_body(Bytes{0, 0, 0, 0, 5}), DecodeError);
        CHECK(decode_id(encode_id(0x0102030405060708ULL)) == 0x0102030405060708ULL);
        auto list = make_list({{1, Bytes{1}}, {2, Bytes{2, 2}}});
        CHECK(parse_list(list).size() == 2);
        CHECK_THROWS(parse_list(Frame{Opcode::list, {Bytes(8)}}));
    }

    TEST_CASE("mailbox queue semantics") {
        MailboxStore store;
        CHECK(store.get(as_bytes("nobody")).empty());
        auto id = store.put(as_bytes("bob"), as_bytes("x"));
        auto got = store.get(as_bytes("bob"));
        REQUIRE(got.size() == 1);
        CHECK(got[0].first == id);
        CHECK(to_string(got[0].second) == "x");
        CHECK(store.ack(as_bytes("bob"), {id, 999}) == 1);
        CHECK(store.get(as_bytes("bob")).empty());
        CHECK(handle_request(store, Frame{Opcode::put, {}}).op == Opcode::err);
        CHECK(handle_request(store, make_get(as_bytes("bob"))).op == Opcode::list);
    }

    TEST_CASE("log replay and torn tail") {
        TempDir tmp;
        auto log = tmp / "relay.log";
        BlobId kept;
        {
            MailboxStore store(log);
            CHECK(store.persistent());
            auto gone = store.put(as_bytes("bob"), as_bytes("one"));
            kept = store.put(as_bytes("bob"), as_bytes("two"));
            store.ack(as_bytes("bob"), {gone});
        }
        {
            std::ofstream torn(log, std::ios::app | std::ios::binary);
            torn << std::string("\x00\x00\x01\x00\x00", 5);  // half a frame
        }
        MailboxStore again(log);
        auto got = again.get(as_bytes("bob"));
        REQUIRE(got.size() == 1);
        CHECK(got[0].first == kept);
        CHECK(again.put(as_bytes("bob"), as_bytes("three")) == kept + 1);
        MailboxStore third(log);
        CHECK(third.get(as_bytes("bob")).size() == 2);
    }

    TEST_CASE("server over TCP: PUT, GET, ACK, GET") {
        MailboxStore store;
        RelayServer server(store, {"127.0.0.1", 0});
        server.start();
        auto s = net::connect(server.endpoint(), std::chrono::seconds(2));
        auto ok = roundtrip(s, make_put(as_bytes("bob"), as_bytes("blob")));
        REQUIRE(ok.op == Opcode::ok);
        auto id = decode_id(ok.fields.at(0));
        auto list = parse_list(roundtrip(s, make_get(as_bytes("bob"))));
        REQUIRE(list.size() == 1);
        CHECK(list[0].first == id);
        CHECK(roundtrip(s, make_ack(as_bytes("bob"), {id})).op == Opcode::ok);
        CHECK(parse_list(roundtrip(s, make_get(as_bytes("bob")))).empty());
        // A malformed body gets ERR and the connection survives.
        Bytes junk;
        put_u32_be(junk, 1);
        junk.push_back(42);
        net::write_all(s, junk);
        auto err = net::read_frame(s, kMaxFrameSize);
        REQUIRE(err);
        CHECK(decode_frame_body(*err).op == Opcode::err);
        CHECK(roundtrip(s, make_get(as_bytes("bob"))).op == Opcode::list);
        server.stop();
    }

    TEST_CASE("oversized frame is refused") {
        MailboxStore store;
        RelayServer server(store, {"127.0.0.1", 0});
        server.start();
        auto s = net::connect(server.endpoint(), std::chrono::seconds(2));
        Bytes huge;
        put_u32_be(huge, static_cast<std::uint32_t>(kMaxFrameSize + 1));
        net::write_all(s, huge);
        auto reply = net::read_frame(s, kMaxFrameSize);
        REQUIRE(reply);
        CHECK(decode_frame_body(*reply).op == Opcode::err);
        server.stop();
    }

    TEST_CASE("relay transport round trip and restart") {
        TempDir tmp;
        auto log = tmp / "relay.log";
        std::uint16_t port;
        auto env = sample();
        {
            MailboxStore store(log);
            RelayServer server(store, {"127.0.0.1", 0});
            server.start();
            port = server.port();
            RelayTransport client(server.endpoint());
            auto receipt = client.send(env);
            CHECK(receipt.backend == "relay");
            server.stop();
        }
        MailboxStore store(log);
        RelayServer server(store, {"127.0.0.1", port});
        server.start();
        RelayTransport client(server.endpoint());
        auto got = client.poll(kB);
        REQUIRE(got.envelopes.size() == 1);
        CHECK(got.envelopes[0] == env);
        CHECK(client.poll(kB).envelopes.empty());  // acknowledged
        store.put(kB.bytes(), as_bytes("not an envelope"));
        auto bad = client.poll(kB);
        CHECK(bad.envelopes.empty());
        CHECK(bad.warnings.size() == 1);
        server.stop();
    }

    TEST_CASE("relay down is retriable unreachable") {
        std::uint16_t port;
        {
            auto l = net::listen({"127.0.0.1", 0}, 1);
            port = net::local_port(l);
        }
        RelayTransport client({"127.0.0.1", port}, std::chrono::milliseconds(500));
        try {
            client.send(sample());
            FAIL("send should fail");
        } catch (const UnreachableError& e) {
            CHECK(e.retriable());
        }
        CHECK_THROWS_AS(client.poll(kB), TransportError);
    }

    TEST_CASE("endpoint parsing") {
        auto e = net::Endpoint::parse("[::1]:7878");
        CHECK(e.host == "::1");
        CHECK(e.port == 7878);
        CHECK(net::Endpoint::parse("relay.example:1").str() == "relay.example:1");
        CHECK_THROWS(net::Endpoint::parse("nohost"));
        CHECK_THROWS(net::Endpoint::parse("h:99999"));
    }
}
