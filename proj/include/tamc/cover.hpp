#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamc/reach.hpp"

namespace tamc {

struct NotConstantRise : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SaturationState {
    std::vector<bool> locations;  // X_L
    std::vector<bool> rules;      // X_R
};

struct FixpointResult {
    std::vector<std::size_t> locations;  // coverable locations
    std::vector<std::size_t> rules;      // rules that can occur
    std::size_t iterations = 0;
};

// True when every guard is x >= c with a parameter-free constant c.
bool is_constant_rise(const ThresholdAutomaton& ta);

FixpointResult cover_fixpoint(const ThresholdAutomaton& ta);

struct CoverQuery {
    std::size_t location = 0;
    std::optional<Configuration> init;  // empty: parameterized
    std::optional<std::int64_t> bound;
    bool assume_multiplicative = false;
};

struct CoverResult {
    Verdict::Kind kind = Verdict::Kind::Unknown;  // Sat = coverable
    std::string method;                           // "fixpoint" or "reach"
    std::optional<FixpointResult> fixpoint;
    std::optional<ReachResult> reach;
    std::string reason;
};

CoverResult cover(const ThresholdAutomaton& ta, const CoverQuery& query, const SolverConfig& solver);

}  // namespace tamc
