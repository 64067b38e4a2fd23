#include "pakemail/attack_cost.hpp"

#include <cmath>
#include <string>

namespace pakemail::attack {

namespace mp = boost::multiprecision;

AttackParams AttackParams::make(unsigned b, unsigned r, unsigned u, double p) {
    AttackParams params{b, r, u, p};
    params.validate();
    return params;
}

void AttackParams::validate() const {
    if (2ull * r > b) throw InvalidArgument("2r = " + std::to_string(2ull * r) + " exceeds b = " + std::to_string(b));
    if (u > ell()) throw InvalidArgument("u = " + std::to_string(u) + " exceeds ell = " + std::to_string(ell()));
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("p must lie strictly between 0 and 1");
}

Real NoPreimageProbability::value() const { return Real(numerator) / Real(denominator); }

Real NoPreimageProbability::complement() const { return Real(complement_numerator()) / Real(denominator); }

Real NoPreimageProbability::log() const {
    Real d = complement();
    if (d == 0) return Real(0);
    if (d < mp::ldexp(Real(1), -20)) {
        // ln(1 - d) = -(d + d^2/2 + d^3/3 + ...); each term shrinks by >= 2^20.
        Real sum = 0, power = d;
        const Real eps = std::numeric_limits<Real>::epsilon();
        for (unsigned n = 1; n < 1000; ++n) {
            Real term = power / n;
            sum += term;
            if (term < sum * eps) break;
            power *= d;
        }
        return -sum;
    }
    return mp::log(value());
}

NoPreimageProbability q_no_preimage(const AttackParams& params) {
    params.validate();
    const unsigned ell = params.ell();
    const unsigned t = params.t();
    BigInt binom = 1;  // C(ell, 0)
    BigInt flippable = 0;
    for (unsigned k = 1; k <= t; ++k) {
        binom = binom * (ell - k + 1) / k;
        flippable += binom;
    }
    BigInt total = BigInt(1) << params.b;
    return {total - flippable, total};
}

Effort effort(const AttackParams& params) {
    if (params.t() == 0) {
        params.validate();
        throw NoAttackSurface();
    }
    auto q = q_no_preimage(params);
    Real e = mp::log1p(Real(-params.p)) / q.log();
    return {e, static_cast<double>(mp::log2(e))};
}

Real success_prob(const AttackParams& params, const Real& attempts) {
    if (attempts < 0) throw InvalidArgument("attempts must be non-negative");
    auto q = q_no_preimage(params);
    if (attempts == 0) return Real(0);
    return -mp::expm1(attempts * q.log());
}

Real success_prob(const AttackParams& params, const BigInt& attempts) {
    if (attempts < 0) throw InvalidArgument("attempts must be non-negative");
    return success_prob(params, Real(attempts));
}

std::array<FiveWordCase, 2> five_word_cases() {
    return {{
        {"first+last words, two middle words", AttackParams::make(80, 16, 32, 0.5)},
        {"first+last words, one middle word", AttackParams::make(80, 16, 16, 0.5)},
    }};
}

}  // namespace pakemail::attack
