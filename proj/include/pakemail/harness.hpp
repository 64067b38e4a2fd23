#pragma once

// Simulated attackers against honest clients in the toy group. Every
// session runs through real SessionManagers over a loopback transport with
// a manual clock, so the honest side's history is exactly what a deployed
// client would record.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pakemail/keystore.hpp"

namespace pakemail {

enum class Strategy : std::uint8_t {
    /// Wiretaps honest exchanges and tests every dictionary word against
    /// the transcript (X*, Y*) alone.
    passive,
    /// Impersonates the initiator with one dictionary guess per session and
    /// completes the protocol.
    active_one_guess,
    /// Like active_one_guess, but checks the responder's tag offline and
    /// never sends its own, hoping the failure passes as a network fault.
    guess_and_abort,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct HarnessConfig {
    std::vector<std::string> dictionary;
    Strategy strategy = Strategy::passive;
    std::size_t sessions = 1000;
    std::uint64_t seed = 1;
};

struct HarnessStats {
    Strategy strategy = Strategy::passive;
    std::size_t sessions = 0;
    /// Sessions in which the adversary learned the password or got the
    /// honest side to accept it.
    std::size_t adversary_successes = 0;
    double success_rate = 0;
    /// 1/d for the active strategies, 0 for the passive one.
    double expected_rate = 0;
    /// Binomial standard deviation of the observed rate.
    double sigma = 0;
    /// Smallest set of dictionary words the passive observer was ever left
    /// with after checking a transcript.
    std::size_t min_candidates = 0;
    std::map<Outcome, std::size_t> honest_outcomes;
    /// Sessions that left no terminal record on the honest side.
    std::size_t history_gaps = 0;
};

/// Throws InvalidArgument when the dictionary is empty or has duplicates.
HarnessStats run_adversary(const HarnessConfig& config);

}  // namespace pakemail
