#include "doctest.h"
#include "pakemail/bytes.hpp"
#include "pakemail/envelope.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/types.hpp"

using namespace pakemail;

TEST_SUITE("bytes") {
    TEST_CASE("hex round trip and rejection") {
        Bytes b{0x00, 0x7f, 0xff, 0x10};
        CHECK(to_hex(b) == "007fff10");
        CHECK(from_hex("007FFF10") == b);
        CHECK_THROWS_AS(from_hex("abc"), DecodeError);
        CHECK_THROWS_AS(from_hex("zz"), DecodeError);
        CHECK(is_hex("00ff", 4));
        CHECK_FALSE(is_hex("00fg", 4));
        CHECK_FALSE(is_hex("00ff", 3));
    }

    TEST_CASE("length-prefixed concatenation is unambiguous") {
        auto a = length_prefixed({as_bytes("ab"), as_bytes("c")});
        auto b = length_prefixed({as_bytes("a"), as_bytes("bc")});
        CHECK(a != b);
        CHECK(a == Bytes{0, 0, 0, 2, 'a', 'b', 0, 0, 0, 1, 'c'});
        ByteReader r(a);
        CHECK(to_string(r.length_prefixed()) == "ab");
        CHECK(to_string(r.length_prefixed()) == "c");
        CHECK(r.empty());
        CHECK_THROWS_AS(r.u8(), DecodeError);
    }

    TEST_CASE("reader bounds") {
        Bytes b{0, 0, 0, 9, 1};
        ByteReader r(b);
        CHECK_THROWS_AS(r.length_prefixed(), DecodeError);
        ByteReader r2(b);
        CHECK_THROWS_AS(r2.length_prefixed(4), DecodeError);
    }

    TEST_CASE("big-endian integers") {
        Bytes out;
        put_u32_be(out, 0x01020304);
        put_u64_be(out, 0x0a0b0c0d0e0f1011ULL);
        CHECK(out[0] == 1);
        CHECK(get_u32_be(out) == 0x01020304u);
        CHECK(get_u64_be(ByteView(out).subspan(4)) == 0x0a0b0c0d0e0f1011ULL);
    }

    TEST_CASE("constant-time compare") {
        CHECK(constant_time_equal(as_bytes("abc"), as_bytes("abc")));
        CHECK_FALSE(constant_time_equal(as_bytes("abc"), as_bytes("abd")));
        CHECK_FALSE(constant_time_equal(as_bytes("abc"), as_bytes("ab")));
    }
}

TEST_SUITE("types") {
    TEST_CASE("identity and role") {
        CHECK_THROWS_AS(Identity(""), InvalidArgument);
        CHECK(Identity("a") < Identity("b"));
        CHECK(role_from_string(to_string(Role::responder)) == Role::responder);
        CHECK(other(Role::initiator) == Role::responder);
        CHECK_THROWS(role_from_string("bystander"));
    }

    TEST_CASE("fingerprint") {
        auto f = Fingerprint::from_hex("00112233445566778899aabbccddeeff00112233");
        CHECK(f.hex() == "00112233445566778899aabbccddeeff00112233");
        CHECK_THROWS(Fingerprint::from_bytes(Bytes(19)));
        for (std::size_t bit = 0; bit < 160; ++bit) {
            auto g = f.with_bit_flipped(bit);
            int diff = 0;
            for (std::size_t i = 0; i < 20; ++i) diff += __builtin_popcount(f.array()[i] ^ g.array()[i]);
            CHECK(diff == 1);
            CHECK(g.with_bit_flipped(bit) == f);
        }
    }

    TEST_CASE("envelope encoding") {
        TransportEnvelope env{ExchangeId::random(), Flow::initiator_message, Identity("a@x"), Identity("b@x"),
                              Fingerprint::from_hex("ffffffffffffffffffffffffffffffffffffffff"), Bytes{1, 2, 3}};
        auto wire = encode_envelope(env);
        CHECK(decode_envelope(wire) == env);
        wire[0] ^= 1;
        CHECK_THROWS_AS(decode_envelope(wire), DecodeError);

        env.flow = Flow::initiator_tag;
        CHECK_THROWS_AS(env.validate(), InvalidArgument);  // fingerprint on a tag flow
        env.fingerprint.reset();
        CHECK(decode_envelope(encode_envelope(env)) == env);

        CHECK_THROWS_AS(flow_from_int(7), DecodeError);
        CHECK(flow_from_int(9) == Flow::data);
        auto id = ExchangeId::random();
        CHECK(ExchangeId::from_hex(id.hex()) == id);
        CHECK_THROWS_AS(ExchangeId::from_hex("00"), DecodeError);
    }

    TEST_CASE("truncated envelopes never decode") {
        TransportEnvelope env{ExchangeId::random(), Flow::responder_message, Identity("a@x"), Identity("b@x"),
                              Fingerprint{}, Bytes(32, 7)};
        auto wire = encode_envelope(env);
        for (std::size_t n = 0; n < wire.size(); ++n) CHECK_THROWS(decode_envelope(ByteView(wire).first(n)));
    }
}
