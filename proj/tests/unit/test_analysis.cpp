#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "pakemail/attack_cost.hpp"
#include "pakemail/trustwords.hpp"

using namespace pakemail;
using namespace pakemail::attack;

namespace {

// Independent binomial oracle: Pascal's triangle in exact integers.
BigInt usable_preimages(unsigned ell, unsigned t) {
    std::vector<BigInt> row{1};
    for (unsigned n = 1; n <= ell; ++n) {
        std::vector<BigInt> next(n + 1);
        next[0] = next[n] = 1;
        for (unsigned k = 1; k < n; ++k) next[k] = row[k - 1] + row[k];
        row = std::move(next);
    }
    BigInt s = 0;
    for (unsigned k = 1; k <= t; ++k) s += row[k];
    return s;
}

// log2 e at p using only long double and the exact count.
long double oracle_log2_effort(unsigned b, const BigInt& usable, long double p) {
    long double d = usable.convert_to<long double>() / std::ldexp(1.0L, static_cast<int>(b));
    long double e = std::log1p(-p) / std::log1p(-d);
    return std::log2(e);
}

double to_d(const Real& r) { return r.convert_to<double>(); }

}  // namespace

TEST_SUITE("attack-cost") {
    TEST_CASE("exact q against the Pascal oracle") {
        for (auto [u, t] : {std::pair{32u, 16u}, std::pair{16u, 32u}}) {
            auto params = AttackParams::make(80, 16, u);
            CHECK(params.ell() == 48);
            CHECK(params.t() == t);
            auto q = q_no_preimage(params);
            CHECK(q.denominator == BigInt(1) << 80);
            CHECK(q.complement_numerator() == usable_preimages(48, t));
        }
        CHECK(usable_preimages(48, 16) == BigInt("4124304597833"));
        CHECK(usable_preimages(48, 32) == BigInt("279605521026468"));
    }

    TEST_CASE("small cases by hand") {
        auto half = AttackParams::make(1, 0, 0);
        CHECK(to_d(q_no_preimage(half).value()) == doctest::Approx(0.5));
        auto e = effort(half);
        CHECK(to_d(e.attempts) == doctest::Approx(1.0));
        CHECK(e.log2_attempts == doctest::Approx(0.0));
        CHECK(to_d(success_prob(half, BigInt(2))) == doctest::Approx(0.75));
        CHECK(to_d(success_prob(half, BigInt(0))) == 0.0);

        auto none = AttackParams::make(80, 16, 48);
        CHECK(none.t() == 0);
        CHECK(q_no_preimage(none).value() == 1);
        CHECK_THROWS_AS(effort(none), NoAttackSurface);
    }

    TEST_CASE("five-word cases within the published bands") {
        auto cases = five_word_cases();
        auto e38 = effort(cases[0].params);
        auto e32 = effort(cases[1].params);
        CHECK(e38.log2_attempts >= 37);
        CHECK(e38.log2_attempts <= 39);
        CHECK(e32.log2_attempts >= 31);
        CHECK(e32.log2_attempts <= 33);
        // Frozen from a 60-digit mpmath evaluation.
        CHECK(e38.log2_attempts == doctest::Approx(37.563945602459816).epsilon(1e-12));
        CHECK(e32.log2_attempts == doctest::Approx(31.480847450345312).epsilon(1e-12));
        CHECK(to_d(e38.attempts) == doctest::Approx(203176924374.31907).epsilon(1e-12));
        CHECK(to_d(q_no_preimage(cases[0].params).complement()) ==
              doctest::Approx(3.411544803590769396e-12).epsilon(1e-12));
        CHECK(e38.log2_attempts == doctest::Approx(double(oracle_log2_effort(80, usable_preimages(48, 16), 0.5L))));
        CHECK(e32.log2_attempts == doctest::Approx(double(oracle_log2_effort(80, usable_preimages(48, 32), 0.5L))));
    }

    TEST_CASE("success probability inverts effort") {
        for (auto u : {0u, 8u, 16u, 32u, 40u}) {
            for (double p : {0.1, 0.5, 0.9}) {
                auto params = AttackParams::make(80, 16, u, p);
                auto e = effort(params);
                CHECK(to_d(success_prob(params, e.attempts)) == doctest::Approx(p).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("effort grows with checked bits") {
        double prev = -1;
        for (unsigned u = 0; u < 48; u += 4) {
            double l = effort(AttackParams::make(80, 16, u)).log2_attempts;
            CHECK(l > prev);
            prev = l;
        }
    }

    TEST_CASE("parameter validation") {
        CHECK_THROWS(AttackParams::make(80, 41, 0));
        CHECK_THROWS(AttackParams::make(80, 16, 49));
        CHECK_THROWS(AttackParams::make(80, 16, 0, 0.0));
        CHECK_THROWS(AttackParams::make(80, 16, 0, 1.0));
    }
}

TEST_SUITE("trustwords") {
    TEST_CASE("synthetic wordlist is a bijection on 16-bit blocks") {
        const auto& w = Wordlist::synthetic();
        CHECK(w.size() == Wordlist::kSize);
        std::set<std::string> seen;
        for (std::uint32_t i = 0; i < Wordlist::kSize; ++i) {
            seen.insert(w[static_cast<std::uint16_t>(i)]);
            CHECK(w.index_of(w[static_cast<std::uint16_t>(i)]) == static_cast<std::uint16_t>(i));
        }
        CHECK(seen.size() == Wordlist::kSize);
        CHECK_FALSE(w.index_of("no-such-word"));
    }

    TEST_CASE("identical fingerprints give the first word repeated") {
        auto f = Fingerprint::from_hex("89abcdef0123456789abcdef0123456789abcdef");
        const auto& w = Wordlist::synthetic();
        for (int count : {5, 10}) {
            auto words = trustwords(f, f, w, count);
            CHECK(words.size() == std::size_t(count));
            for (const auto& x : words) CHECK(x == w[0]);
        }
        CHECK_THROWS(trustwords(f, f, w, 7));
    }

    TEST_CASE("symmetric and block-exact over random pairs") {
        std::mt19937 rng(99);
        const auto& w = Wordlist::synthetic();
        for (int i = 0; i < 1000; ++i) {
            Fingerprint::Array a{}, b{};
            for (auto& x : a) x = static_cast<std::uint8_t>(rng());
            for (auto& x : b) x = static_cast<std::uint8_t>(rng());
            Fingerprint fa(a), fb(b);
            auto words = trustwords(fa, fb, w);
            CHECK(words == trustwords(fb, fa, w));
            // Rebuild 80 XOR bits from the words and compare.
            for (int k = 0; k < 5; ++k) {
                auto idx = w.index_of(words[k]);
                REQUIRE(idx);
                std::uint16_t expect = static_cast<std::uint16_t>(((a[2 * k] ^ b[2 * k]) << 8) | (a[2 * k + 1] ^ b[2 * k + 1]));
                CHECK(*idx == expect);
            }
        }
    }

    TEST_CASE("a difference beyond bit 80 is invisible in five words") {
        Fingerprint::Array a{};
        Fingerprint fa(a);
        auto fb = fa.with_bit_flipped(100);
        CHECK(trustwords(fa, fb) == trustwords(fa, fa));
        CHECK(trustwords(fa, fb, Wordlist::synthetic(), 10) != trustwords(fa, fa, Wordlist::synthetic(), 10));
        CHECK(trustwords(fa, fa.with_bit_flipped(79)) != trustwords(fa, fa));
    }

    TEST_CASE("custom lists") {
        std::vector<std::string> words;
        for (int i = 0; i < 65536; ++i) words.push_back("w" + std::to_string(i));
        auto list = Wordlist::from_words(words);
        CHECK(list[65535] == "w65535");
        words[5] = "w4";
        CHECK_THROWS(Wordlist::from_words(words));
        words.pop_back();
        CHECK_THROWS(Wordlist::from_words(words));
    }
}
