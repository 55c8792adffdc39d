#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamc/reach.hpp"

namespace tamc {

// psi ::= pf | G psi | F psi | psi and psi
struct EltlFormula {
    enum class Kind { Prop, And, F, G };
    Kind kind = Kind::Prop;
    PropFormula prop;
    std::vector<EltlFormula> kids;

    static EltlFormula atom(PropFormula p);
    static EltlFormula conj(std::vector<EltlFormula> kids);
    static EltlFormula eventually(EltlFormula f);
    static EltlFormula always(EltlFormula f);
    friend bool operator==(const EltlFormula&, const EltlFormula&) = default;
};

// Spec files are s-expressions:
//   psi  := (and psi ...) | (F psi) | (G psi) | pf
//   pf   := cf | (imp gf cf)
//   cf   := (eq0 l ...) | (ne0 l ...) | (not (eq0 l ...)) | (and cf ...) | true
//   gf   := (ge x e) | (lt x e) | (and gf ...) | (or gf ...) | true
//   e    := number | p/q | param | (+ e ...) | (- e ...) | (* c e)
EltlFormula parse_eltl(const std::string& text, const ThresholdAutomaton& ta);
EltlFormula load_eltl(const std::string& path, const ThresholdAutomaton& ta);
std::string print_eltl(const EltlFormula& f, const ThresholdAutomaton& ta);
std::string print_props(const std::vector<PropFormula>& props, const ThresholdAutomaton& ta);

// Every spec-level guard, in first-occurrence order without duplicates.
std::vector<IntegerGuard> spec_guards(const EltlFormula& f);

struct NormalizationFailed : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// phi0 and F e_1 and ... and F e_k and G always
struct NormalForm {
    std::vector<PropFormula> phi0;               // local proposition (empty: true)
    std::vector<NormalForm> eventualities;
    std::shared_ptr<const NormalForm> always;    // null: G true

    // Local proposition of `always`.
    std::vector<PropFormula> global() const;
};

NormalForm to_normal_form(const EltlFormula& f);

struct CutGraph {
    enum class NodeKind { Root, Eventuality, LoopStart, LoopEnd };
    struct Node {
        NodeKind kind = NodeKind::Root;
        std::string name;
        bool in_loop = false;
        std::vector<PropFormula> local;
        std::vector<PropFormula> global;
    };
    std::vector<Node> nodes;                    // root first, loop_st and loop_end last
    std::vector<std::vector<std::size_t>> succ;
    std::size_t loop_st = 0;
    std::size_t loop_end = 0;

    std::size_t edge_count() const;
};

CutGraph cut_graph(const NormalForm& nf);

// Visits topological orders in lexicographic order of node indices until
// `visit` returns false. Returns the number of orders visited.
std::size_t for_each_topo_order(const CutGraph& g, const std::function<bool(const std::vector<std::size_t>&)>& visit);
std::size_t count_topo_orders(const CutGraph& g);

// Holds at one symbolic point.
Formula props_hold(ReachEncoder& enc, const std::vector<PropFormula>& props, const SymbolicConfig& s);

// Reachability from s to t along a path whose lifted version satisfies `props`.
// The encoder must track the premise guards of `props` (see spec_guards).
ReachEncoding phi_prop(ReachEncoder& enc, const std::vector<PropFormula>& props, const SymbolicConfig& s,
                       const SymbolicConfig& t, const std::string& prefix, ApplEncoding appl = ApplEncoding::Rank);

// Milestone obligations of one order: local props per milestone, global props per segment.
struct LassoObligations {
    std::vector<std::vector<PropFormula>> local;
    std::vector<std::vector<PropFormula>> global;
    std::size_t c = 0;  // index of loop_st
};

LassoObligations obligations(const CutGraph& g, const std::vector<std::size_t>& order);

struct LiveEncoding {
    Formula formula;
    std::vector<SymbolicConfig> milestones;  // eta_0 .. eta_l
    std::vector<ReachEncoding> segments;     // eta_i -> eta_{i+1}
    std::size_t c = 0;
};

LiveEncoding phi_live(ReachEncoder& enc, const CutGraph& g, const std::vector<std::size_t>& order,
                      ApplEncoding appl = ApplEncoding::Rank);

struct LassoWitness {
    std::vector<std::size_t> order;
    std::size_t c = 0;
    std::int64_t mu = 1;                                // lifting factor applied
    std::vector<Configuration> milestones;              // lifted eta_0 .. eta_l
    std::vector<std::vector<std::int64_t>> segment_counts;  // lifted, per segment and rule
    Schedule schedule;                                  // stem followed by one loop iteration
    std::vector<std::size_t> boundaries;                // schedule index at which milestone i is reached

    Schedule stem() const;
    Schedule loop() const;
};

struct CertificateInvalid : std::logic_error {
    using std::logic_error::logic_error;
};

// Empty when the witness is a valid lasso for the order's obligations.
std::optional<std::string> lasso_defect(const Semantics& sem, const CutGraph& g, const LassoWitness& w);
// Throws CertificateInvalid on any defect.
bool replay_lasso(const Semantics& sem, const CutGraph& g, const LassoWitness& w);

nlohmann::json lasso_to_json(const Semantics& sem, const CutGraph& g, const LassoWitness& w);
LassoWitness lasso_from_json(const Semantics& sem, const CutGraph& g, const nlohmann::json& j);

struct NotMultiplicative : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CheckOptions {
    std::size_t max_orders = 0;  // 0: no cap
    bool assume_multiplicative = false;
    unsigned jobs = 1;
    ApplEncoding appl = ApplEncoding::Rank;
    std::vector<std::int64_t> lift_factors{2, 1, 3, 4};
};

struct CheckResult {
    enum class Kind { Holds, Violated, Unknown };
    Kind kind = Kind::Unknown;
    std::optional<LassoWitness> witness;
    std::size_t orders_checked = 0;
    std::string reason;
};

const char* to_string(CheckResult::Kind k);

// Searches for a run satisfying `spec`; Holds means none exists.
CheckResult check_spec(const ThresholdAutomaton& ta, const EltlFormula& spec, const SolverConfig& solver,
                       const CheckOptions& options = {});

// Truth of `f` on the ultimately periodic run init, stem, loop, loop, ...
// The loop must return the counters to their value at its start.
bool eval_on_lasso(const Semantics& sem, const EltlFormula& f, const Configuration& init, const Schedule& stem,
                   const Schedule& loop);

// Loop rules never wait on a fall guard over a variable the loop increments.
bool fall_guard_condition(const ThresholdAutomaton& ta, const Schedule& loop);

struct OracleLasso {
    Configuration init;
    Schedule stem;
    Schedule loop;
};

// Exhaustive bounded lasso search over every initial configuration within
// `bounds`: stems of at most `stem_bound` non-stuttering steps, loops of at
// most `loop_bound` rules.
std::optional<OracleLasso> oracle_lasso(const Semantics& sem, const EltlFormula& f, const ParamBounds& bounds,
                                        std::size_t stem_bound, std::size_t loop_bound,
                                        std::size_t max_states = 4000000);

}  // namespace tamc
