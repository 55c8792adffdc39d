#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamc/presburger.hpp"
#include "tamc/semantics.hpp"
#include "tamc/ta.hpp"

namespace tamc {

struct SymbolicConfig {
    std::vector<VarId> counters;
    std::vector<VarId> globals;
    std::vector<VarId> params;
};

struct SteadyCounts {
    std::vector<VarId> counts;  // x_r
    std::vector<VarId> ranks;   // rho_r (empty for single steps)
};

struct InternalInvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

enum class ApplEncoding {
    Rank,    // polynomial rank variables
    Chains,  // explicit disjunction over rule chains
};

// Extra constraint attached to every steady block: (block start, block end, counts).
using BlockHook = std::function<Formula(const SymbolicConfig&, const SymbolicConfig&, const SteadyCounts&)>;

struct ReachEncoding {
    Formula formula;
    std::vector<SymbolicConfig> points;  // sigma_0, sigma'_0, sigma_1, ..., sigma'_K
    std::vector<SteadyCounts> blocks;    // K + 1 steady blocks
    std::vector<std::vector<VarId>> steps;  // K single steps
    std::vector<VarId> sums;             // per-rule totals
};

struct ReachOptions {
    ApplEncoding appl = ApplEncoding::Rank;
    BlockHook block_hook;
    std::optional<std::int64_t> bound;  // sum over rules of sum_r <= bound
};

// Builds the pieces of the reachability characterization over one VarPool.
class ReachEncoder {
public:
    // `extra_guards` are added to the guards whose truth fixes a context.
    ReachEncoder(const ThresholdAutomaton& ta, VarPool& pool, const std::vector<IntegerGuard>& extra_guards = {});

    const ThresholdAutomaton& ta() const { return ta_; }
    VarPool& pool() { return pool_; }
    const std::vector<IntegerGuard>& tracked_guards() const { return tracked_; }
    std::size_t segments_bound() const { return tracked_.size(); }  // K

    // Fresh variables; `params` reuses existing parameter variables if given.
    SymbolicConfig make_config(const std::string& prefix, const std::vector<VarId>* params = nullptr);
    SteadyCounts make_counts(const std::string& prefix, bool with_ranks);

    Formula guard_holds(const IntegerGuard& g, const SymbolicConfig& s) const;
    Formula resilience(const SymbolicConfig& s) const;
    Formula admissible(const SymbolicConfig& s) const;  // RC and sum kappa = N(p)
    Formula same_params(const SymbolicConfig& a, const SymbolicConfig& b) const;
    Formula initial(const SymbolicConfig& s) const;
    Formula equals(const SymbolicConfig& s, const Configuration& c) const;
    Formula zero(const SymbolicConfig& s, const std::vector<std::size_t>& locs) const;
    Formula positive(const SymbolicConfig& s, const std::vector<std::size_t>& locs) const;

    Formula phi_base(const SymbolicConfig& s, const SymbolicConfig& t) const;
    Formula phi_flow(const SymbolicConfig& s, const SymbolicConfig& t, const std::vector<VarId>& x) const;
    Formula phi_shared(const SymbolicConfig& s, const SymbolicConfig& t, const std::vector<VarId>& x) const;
    Formula phi_enabled(const SymbolicConfig& s, const std::vector<VarId>& x) const;
    Formula phi_appl(const SymbolicConfig& s, const SteadyCounts& x) const;
    Formula phi_appl_chains(const SymbolicConfig& s, const std::vector<VarId>& x) const;
    Formula phi_steady(const SymbolicConfig& s, const SymbolicConfig& t, const SteadyCounts& x,
                       ApplEncoding appl = ApplEncoding::Rank) const;
    Formula phi_step(const SymbolicConfig& s, const SymbolicConfig& t, const std::vector<VarId>& y) const;
    ReachEncoding phi_reach(const SymbolicConfig& s, const SymbolicConfig& t, const std::string& prefix,
                            const ReachOptions& options = {});

    Configuration decode(const SymbolicConfig& s, const Model& m) const;

private:
    LinTerm size_term(const SymbolicConfig& s) const;  // D * N(p)

    const ThresholdAutomaton& ta_;
    VarPool& pool_;
    std::vector<IntegerGuard> tracked_;
    std::vector<std::vector<std::size_t>> rule_guards_;
};

// Simple rule chains r_1 ... r_s = r (distinct rules, r_i.to = r_{i+1}.from).
std::vector<std::vector<std::size_t>> rule_chains(const ThresholdAutomaton& ta, std::size_t rule,
                                                  std::size_t cap = 200000);

struct ReachWitness {
    std::vector<Configuration> points;             // 2(K+1) configurations
    std::vector<std::vector<std::int64_t>> steady;  // per block, per rule
    std::vector<std::vector<std::int64_t>> steps;   // per step, per rule (0/1)
    std::vector<std::int64_t> sums;                // per rule
};

ReachWitness decode_witness(const ReachEncoder& enc, const ReachEncoding& e, const Model& m);

// Schedule firing each rule exactly counts[r] times along a steady path from sigma.
Schedule realize_steady(const Semantics& sem, const Configuration& sigma, const std::vector<std::int64_t>& counts);
Schedule realize_path(const Semantics& sem, const ReachWitness& w);

struct ReachQuery {
    std::optional<Configuration> init;  // concrete start; otherwise any initial configuration
    std::vector<std::size_t> zero;      // kappa(l) = 0 at the target
    std::vector<std::size_t> pos;       // kappa(l) > 0 at the target
    std::optional<std::int64_t> bound;
    std::optional<ParamBounds> param_bounds;
    ApplEncoding appl = ApplEncoding::Rank;
};

struct ReachResult {
    Verdict::Kind kind = Verdict::Kind::Unknown;
    std::optional<ReachWitness> witness;
    Schedule schedule;  // realized and replayed
    std::string reason;
};

ReachResult solve_reach(const ThresholdAutomaton& ta, const ReachQuery& query, const SolverConfig& solver);

nlohmann::json reach_witness_to_json(const Semantics& sem, const ReachWitness& w, const Schedule& schedule);

}  // namespace tamc
