#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamc/eltl.hpp"

namespace tamc {

using Assignment = std::map<std::string, Rational>;

struct MissingIndeterminate : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnboundedSpace : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

ThresholdAutomaton instantiate(const ThresholdAutomaton& sketch, const Assignment& mu);

std::string format_assignment(const Assignment& mu);

// Candidate values numerator / denominator per indeterminate.
struct CandidateSpace {
    std::vector<std::string> indeterminates;
    std::vector<std::vector<std::int64_t>> numerators;  // sorted, sane on their own
    std::int64_t denominator = 1;

    // Product of the per-indeterminate ranges (saturates at UINT64_MAX).
    std::uint64_t size() const;
};

struct SaneOptions {
    std::int64_t denominator = 1;
    std::optional<std::int64_t> bound;  // |value| <= bound
};

// Sane guards stay within [0, n] for every admissible parameter valuation.
// The search window comes from `bound`, or, for a resilience condition
// n > sum delta_i t_i, from the coefficient bounds it implies; every window
// value is then probed with the solver.
CandidateSpace sane_space(const ThresholdAutomaton& sketch, const SaneOptions& options, const SolverConfig& solver);

// Every guard of TA[mu] is sane.
bool sane_assignment(const ThresholdAutomaton& sketch, const Assignment& mu, const SolverConfig& solver);

struct SynthesisOptions {
    SaneOptions space;
    double budget_s = 300;
    unsigned recheck = 5;  // pruned candidates re-verified per run
    std::uint64_t seed = 0;
    CheckOptions check;
};

struct CandidateLog {
    Assignment mu;
    std::string outcome;  // holds | violated | pruned | insane | not-multiplicative | unknown
    std::string detail;
};

struct SynthesisResult {
    enum class Kind { Found, NoneInSpace, Unknown };
    Kind kind = Kind::Unknown;
    std::optional<Assignment> assignment;
    std::uint64_t space_size = 0;
    std::size_t candidates_tried = 0;  // checked with the solver
    std::size_t pruned = 0;
    std::vector<CandidateLog> log;
    std::vector<Assignment> rechecked;
    std::size_t recheck_failures = 0;  // pruned candidates that did not re-verify as violated
    std::string reason;
};

const char* to_string(SynthesisResult::Kind k);

// `spec` describes the bad runs: a Found assignment leaves no run satisfying it.
SynthesisResult synthesize(const ThresholdAutomaton& sketch, const EltlFormula& spec, const SolverConfig& solver,
                           const SynthesisOptions& options = {});

nlohmann::json synthesis_to_json(const SynthesisResult& r);

}  // namespace tamc
