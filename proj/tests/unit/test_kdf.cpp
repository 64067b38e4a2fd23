#include "doctest.h"
#include "pakemail/bytes.hpp"
#include "pakemail/errors.hpp"
#include "pakemail/kdf.hpp"

using namespace pakemail;

namespace {
std::string hex(const Digest256& d) { return to_hex(d); }
}

TEST_SUITE("kdf") {
    TEST_CASE("SHA-256 known answers") {
        CHECK(hex(sha256(as_bytes(""))) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        CHECK(hex(sha256(as_bytes("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    TEST_CASE("HMAC-SHA256 RFC 4231") {
        CHECK(hex(hmac_sha256(Bytes(20, 0x0b), as_bytes("Hi There"))) ==
              "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
        CHECK(hex(hmac_sha256(as_bytes("Jefe"), as_bytes("what do ya want for nothing?"))) ==
              "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
        // Case 6: key longer than the block size.
        CHECK(hex(hmac_sha256(Bytes(131, 0xaa), as_bytes("Test Using Larger Than Block-Size Key - Hash Key First"))) ==
              "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54");
    }

    TEST_CASE("HKDF RFC 5869 case 1") {
        auto ikm = Bytes(22, 0x0b);
        auto salt = from_hex("000102030405060708090a0b0c");
        auto info = from_hex("f0f1f2f3f4f5f6f7f8f9");
        CHECK(hex(hkdf_extract(salt, ikm)) == "077709362c2e32df0ddc3f0dc47bba6390b6c73bb50f9c3122ec844ad7c2b3e5");
        CHECK(to_hex(hkdf(salt, ikm, info, 42)) ==
              "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865");
    }

    TEST_CASE("HKDF RFC 5869 case 3 (empty salt and info)") {
        auto ikm = Bytes(22, 0x0b);
        CHECK(hex(hkdf_extract({}, ikm)) == "19ef24a32c717b167f33a91d6f648bdf96596776afdb6377ac434c1c293ccb04");
        CHECK(to_hex(hkdf({}, ikm, {}, 42)) ==
              "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d9d201395faa4b61a96c8");
    }

    TEST_CASE("HKDF length limits") {
        auto prk = hkdf_extract({}, as_bytes("k"));
        CHECK(hkdf_expand(prk, {}, 255 * 32).size() == 255 * 32);
        CHECK_THROWS_AS(hkdf_expand(prk, {}, 255 * 32 + 1), InvalidArgument);
        // Prefix property of the expand stage.
        auto a = hkdf_expand(prk, as_bytes("i"), 10);
        auto b = hkdf_expand(prk, as_bytes("i"), 70);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}
