#pragma once

// Cost model for a brute-force partial-preimage attack on a fingerprint
// that a lazy user checks only partially. The user checks r bits at each
// end plus u of the remaining ell = b - 2r middle bits; a random key is a
// usable preimage when it differs from the target in at most t = ell - u of
// the middle positions. Then
//
//   q = (2^b - sum_{k=1..t} C(ell, k)) / 2^b      (no preimage per attempt)
//   p = 1 - q^e                                   (success after e attempts)
//   e = log_q(1 - p)

#include <array>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "pakemail/errors.hpp"

namespace pakemail::attack {

using BigInt = boost::multiprecision::cpp_int;
using Real = boost::multiprecision::cpp_bin_float_100;

class NoAttackSurface : public Error {
public:
    NoAttackSurface() : Error("no flippable bits: every middle bit is checked (t = 0)") {}
};

struct AttackParams {
    unsigned b = 0;  // fingerprint bits compared
    unsigned r = 0;  // boundary bits checked at each end
    unsigned u = 0;  // middle bits checked
    double p = 0.5;  // target success probability

    unsigned ell() const { return b - 2 * r; }
    unsigned t() const { return ell() - u; }

    /// Throws InvalidArgument unless 2r <= b, u <= ell and 0 < p < 1.
    static AttackParams make(unsigned b, unsigned r, unsigned u, double p = 0.5);
    void validate() const;
};

/// q as an exact ratio numerator / 2^b.
struct NoPreimageProbability {
    BigInt numerator;
    BigInt denominator;
    /// 2^b - numerator, i.e. the count of usable preimages.
    BigInt complement_numerator() const { return denominator - numerator; }
    Real value() const;
    /// 1 - q without cancellation.
    Real complement() const;
    /// ln q; uses the series -sum d^n / n when d = 1 - q < 2^-20.
    Real log() const;
};

NoPreimageProbability q_no_preimage(const AttackParams& params);

struct Effort {
    Real attempts;  // e
    double log2_attempts;
};

/// Throws NoAttackSurface when t = 0.
Effort effort(const AttackParams& params);

/// 1 - q^attempts.
Real success_prob(const AttackParams& params, const BigInt& attempts);
Real success_prob(const AttackParams& params, const Real& attempts);

/// The two five-word checking patterns: first and last words plus two
/// (u = 32) or one (u = 16) of the three middle words, over b = 80.
struct FiveWordCase {
    const char* label;
    AttackParams params;
};
std::array<FiveWordCase, 2> five_word_cases();

}  // namespace pakemail::attack
