#include "tamc/cover.hpp"

namespace tamc {

bool is_constant_rise(const ThresholdAutomaton& ta) {
    for (const auto& r : ta.rules)
        for (const auto& g : r.guards) {
            if (!g.rhs.is_concrete()) return false;
            IntegerGuard ig = normalize_guard(g);
            if (ig.kind != GuardKind::Rise || !ig.parameter_free()) return false;
        }
    return true;
}

FixpointResult cover_fixpoint(const ThresholdAutomaton& ta) {
    if (!is_constant_rise(ta)) throw NotConstantRise("automaton has guards other than constant rise guards");
    // guards reduced to the variables they wait on; x >= c with c <= 0 is dropped
    std::vector<std::vector<std::size_t>> waits(ta.rules.size());
    for (std::size_t r = 0; r < ta.rules.size(); ++r)
        for (const auto& g : ta.rules[r].guards) {
            IntegerGuard ig = normalize_guard(g);
            if (!trivially_true(ig)) waits[r].push_back(ig.var);
        }

    SaturationState st{std::vector<bool>(ta.locations.size(), false), std::vector<bool>(ta.rules.size(), false)};
    for (auto l : ta.initial) st.locations[l] = true;
    std::vector<bool> incremented(ta.shared.size(), false);

    FixpointResult res;
    bool changed = true;
    while (changed) {
        changed = false;
        ++res.iterations;
        for (std::size_t r = 0; r < ta.rules.size(); ++r) {
            if (st.rules[r] || !st.locations[ta.rules[r].from]) continue;
            bool unlocked = true;
            for (auto x : waits[r]) unlocked = unlocked && incremented[x];
            if (!unlocked) continue;
            st.rules[r] = true;
            st.locations[ta.rules[r].to] = true;
            for (std::size_t x = 0; x < ta.shared.size(); ++x)
                if (ta.rules[r].update[x] > 0) incremented[x] = true;
            changed = true;
        }
    }
    for (std::size_t l = 0; l < st.locations.size(); ++l)
        if (st.locations[l]) res.locations.push_back(l);
    for (std::size_t r = 0; r < st.rules.size(); ++r)
        if (st.rules[r]) res.rules.push_back(r);
    return res;
}

CoverResult cover(const ThresholdAutomaton& ta, const CoverQuery& query, const SolverConfig& solver) {
    CoverResult res;
    if (!query.init && !query.bound && is_constant_rise(ta)) {
        auto m = check_multiplicative(ta);
        if (m.kind == Multiplicativity::Kind::Yes || (m.kind == Multiplicativity::Kind::Unknown && query.assume_multiplicative)) {
            res.method = "fixpoint";
            res.fixpoint = cover_fixpoint(ta);
            bool hit = false;
            for (auto l : res.fixpoint->locations) hit = hit || l == query.location;
            res.kind = hit ? Verdict::Kind::Sat : Verdict::Kind::Unsat;
            return res;
        }
    }
    res.method = "reach";
    ReachQuery q;
    q.init = query.init;
    q.pos = {query.location};
    q.bound = query.bound;
    res.reach = solve_reach(ta, q, solver);
    res.kind = res.reach->kind;
    res.reason = res.reach->reason;
    return res;
}

}  // namespace tamc
