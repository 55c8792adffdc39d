#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamc/ta.hpp"

namespace tamc {

struct Configuration {
    std::vector<std::int64_t> counters;  // kappa, per location
    std::vector<std::int64_t> globals;   // g, per shared variable
    std::vector<std::int64_t> params;    // p, per parameter

    std::int64_t processes() const;
    friend bool operator==(const Configuration&, const Configuration&) = default;
    friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const;
};

using Schedule = std::vector<std::size_t>;  // rule indices

// Sorted indices into a guard list (normally GuardIndex::guards).
using Context = std::vector<std::size_t>;

struct NotEnabled : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotApplicable : std::runtime_error {
    NotApplicable(std::size_t index, const std::string& rule)
        : std::runtime_error("schedule not applicable at index " + std::to_string(index) + " (rule " + rule + ")"),
          index(index) {}
    std::size_t index;
};

struct ResourceLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Guard-level propositions: a positive Boolean combination of guards.
struct GuardFormula {
    enum class Kind { True, Atom, And, Or };
    Kind kind = Kind::True;
    IntegerGuard atom;
    std::vector<GuardFormula> children;

    bool eval(const std::vector<std::int64_t>& globals, const std::vector<std::int64_t>& params) const;
    void collect(std::vector<IntegerGuard>& out) const;
    friend bool operator==(const GuardFormula&, const GuardFormula&) = default;
};

// Conjunction of (S = 0) and not(S = 0) atoms.
struct CounterFormula {
    std::vector<std::size_t> zero;                  // union of all S with S = 0
    std::vector<std::vector<std::size_t>> nonzero;  // each S with not(S = 0)

    bool eval(const std::vector<std::int64_t>& counters) const;
    bool is_true() const { return zero.empty() && nonzero.empty(); }
    friend bool operator==(const CounterFormula&, const CounterFormula&) = default;
};

// cf, or gf => cf when `premise` is set.
struct PropFormula {
    std::optional<GuardFormula> premise;
    CounterFormula conclusion;

    bool is_true() const { return conclusion.is_true(); }
    friend bool operator==(const PropFormula&, const PropFormula&) = default;
};

bool eval_prop(const Configuration& sigma, const PropFormula& pf);
bool eval_props(const Configuration& sigma, const std::vector<PropFormula>& pfs);

Configuration lift(const Configuration& sigma, std::int64_t mu);

Context context_of(const std::vector<IntegerGuard>& guards, const Configuration& sigma);

// Concrete counter-system semantics of one automaton.
class Semantics {
public:
    explicit Semantics(ThresholdAutomaton ta);

    const ThresholdAutomaton& ta() const { return ta_; }
    const GuardIndex& guards() const { return guards_; }

    bool enables(const Configuration& sigma, std::size_t rule) const;
    bool guards_hold(const Configuration& sigma, std::size_t rule) const;
    Configuration apply(const Configuration& sigma, std::size_t rule) const;
    void apply_in_place(Configuration& sigma, std::size_t rule) const;
    Configuration run(const Configuration& sigma, const Schedule& tau) const;
    // All configurations visited, including sigma and the final one.
    std::vector<Configuration> trace(const Configuration& sigma, const Schedule& tau) const;
    Context context(const Configuration& sigma) const { return context_of(guards_.guards, sigma); }

    bool is_initial(const Configuration& sigma) const;
    // Checks shape, admissible parameters and sum kappa = N(p).
    bool is_valid(const Configuration& sigma) const;

    Schedule parse_schedule(const std::vector<std::string>& ids) const;
    std::vector<std::string> schedule_ids(const Schedule& tau) const;

    nlohmann::json to_json(const Configuration& sigma) const;
    Configuration from_json(const nlohmann::json& j) const;

private:
    ThresholdAutomaton ta_;
    GuardIndex guards_;
    std::vector<std::vector<IntegerGuard>> rule_guards_;
};

struct ParamBounds {
    std::vector<std::int64_t> lo;
    std::vector<std::int64_t> hi;

    static ParamBounds uniform(std::size_t nparams, std::int64_t lo, std::int64_t hi);
    static ParamBounds exact(const std::vector<std::int64_t>& p);
};

// Admissible parameter valuations within the bounds whose N(p) is natural.
std::vector<std::vector<std::int64_t>> admissible_params(const Environment& env, const ParamBounds& bounds);

// Every initial configuration for parameters within bounds.
std::vector<Configuration> initial_configurations(const ThresholdAutomaton& ta, const ParamBounds& bounds,
                                                  std::size_t cap = 100000);

struct OracleOptions {
    std::size_t max_states = 4000000;
    // Clamp globals at this value during search (exact when every guard on
    // the variable is a constant rise guard with threshold <= the clamp).
    std::optional<std::vector<std::int64_t>> global_caps;
    // Clamp every counter at (remaining budget + 1). Exact when the goal only
    // asks which counters are positive: with r firings left, a location
    // holding more than r processes cannot be emptied.
    bool clamp_counters = false;
};

struct OracleWitness {
    Configuration init;
    Schedule schedule;
};

using ConfigPredicate = std::function<bool(const Configuration&)>;

// Breadth-first search over schedules of length <= bound from the given
// initial configurations; returns a shortest witness.
std::optional<OracleWitness> oracle_search(const Semantics& sem, const std::vector<Configuration>& inits,
                                           const ConfigPredicate& goal, std::size_t bound,
                                           const OracleOptions& options = {});

// All configurations reachable within the bound (used by saturation tests).
std::vector<Configuration> oracle_reachable(const Semantics& sem, const std::vector<Configuration>& inits,
                                            std::size_t bound, const OracleOptions& options = {});

nlohmann::json trace_to_json(const Semantics& sem, const Configuration& init, const Schedule& tau);

}  // namespace tamc
