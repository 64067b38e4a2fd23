#include <cmath>

#include "doctest.h"
#include "pakemail/errors.hpp"
#include "pakemail/harness.hpp"

using namespace pakemail;

namespace {
std::vector<std::string> words(std::size_t d) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < d; ++i) out.push_back("word" + std::to_string(i));
    return out;
}
}  // namespace

TEST_SUITE("harness") {
    TEST_CASE("passive observer never singles out the password") {
        auto s = run_adversary({words(2), Strategy::passive, 200, 5});
        CHECK(s.adversary_successes == 0);
        CHECK(s.min_candidates == 2);  // transcript alone stays ambiguous
        CHECK(s.honest_outcomes[Outcome::success] == 200);
        CHECK(s.history_gaps == 0);
    }

    TEST_CASE("active one-guess hits about 1/d") {
        auto s = run_adversary({words(4), Strategy::active_one_guess, 800, 11});
        CHECK(s.expected_rate == doctest::Approx(0.25));
        CHECK(std::abs(s.success_rate - s.expected_rate) <= 3 * s.sigma);
        CHECK(s.honest_outcomes[Outcome::success] == s.adversary_successes);
        CHECK(s.honest_outcomes[Outcome::password_mismatch] == 800 - s.adversary_successes);
        CHECK(s.history_gaps == 0);
    }

    TEST_CASE("guess-and-abort shows up as timeouts, never success") {
        auto s = run_adversary({words(4), Strategy::guess_and_abort, 300, 2});
        CHECK(s.honest_outcomes[Outcome::aborted_by_timeout] == 300);
        CHECK(s.honest_outcomes[Outcome::success] == 0);
        CHECK(s.history_gaps == 0);
        CHECK(s.adversary_successes > 0);  // the offline check itself still works
    }

    TEST_CASE("config validation") {
        CHECK_THROWS_AS(run_adversary({{}, Strategy::passive, 1, 1}), InvalidArgument);
        CHECK_THROWS_AS(run_adversary({{"a", "a"}, Strategy::passive, 1, 1}), InvalidArgument);
        CHECK(strategy_from_string("guess-and-abort") == Strategy::guess_and_abort);
        CHECK_THROWS(strategy_from_string("bribe"));
    }
}
