#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "tamc/semantics.hpp"
#include "tamc/ta.hpp"

namespace tamc::testing {

inline std::string data_path(const std::string& name) { return std::string(TAMC_DATA_DIR) + "/" + name; }

inline ThresholdAutomaton strb() { return load_ta(data_path("strb.ta.json")); }

inline Configuration make_config(const ThresholdAutomaton& ta, const std::map<std::string, std::int64_t>& counters,
                                 const std::map<std::string, std::int64_t>& globals,
                                 const std::vector<std::int64_t>& params) {
    Configuration c;
    c.counters.assign(ta.locations.size(), 0);
    c.globals.assign(ta.shared.size(), 0);
    c.params = params;
    for (const auto& [l, v] : counters) c.counters[*ta.location_index(l)] = v;
    for (const auto& [x, v] : globals) c.globals[*ta.shared_index(x)] = v;
    return c;
}

struct RandomTaShape {
    int max_locations = 5;
    int max_rules = 8;
    int max_shared = 2;
    int max_params = 2;
    bool allow_fall = true;
};

// Random automaton in the desk-scale family used by the differential tests.
inline ThresholdAutomaton random_ta(std::mt19937_64& rng, const RandomTaShape& shape = {}) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    ThresholdAutomaton ta;
    int nparams = pick(1, shape.max_params);
    ta.env.params = nparams == 1 ? std::vector<std::string>{"n"} : std::vector<std::string>{"n", "t"};
    if (nparams == 1) {
        static const char* rcs[] = {"", "n >= 1", "n >= 2"};
        std::string rc = rcs[pick(0, 2)];
        if (!rc.empty()) ta.env.resilience.push_back(parse_constraint(rc, ta.env.params));
        ta.env.size_fn = to_affine(parse_linear_expr("n", ta.env.params, {}));
    } else {
        static const char* rcs[] = {"n > 3*t", "n > 2*t", "n >= t", "n > t"};
        ta.env.resilience.push_back(parse_constraint(rcs[pick(0, 3)], ta.env.params));
        ta.env.size_fn = to_affine(parse_linear_expr(pick(0, 1) ? "n" : "n - t", ta.env.params, {}));
    }
    int nloc = pick(2, shape.max_locations);
    for (int i = 0; i < nloc; ++i) ta.locations.push_back("l" + std::to_string(i));
    ta.initial.push_back(0);
    if (nloc > 2 && pick(0, 2) == 0) ta.initial.push_back(1);
    int nshared = pick(0, shape.max_shared);
    for (int i = 0; i < nshared; ++i) ta.shared.push_back(i == 0 ? "x" : "y");
    std::vector<std::string> rhs1 = {"0", "1", "2", "n", "1/2*n", "n - 1"};
    std::vector<std::string> rhs2 = {"t + 1", "n - t", "2*t", "1/2*n + 1/2*t", "t", "n - 2*t"};
    int nrules = pick(1, shape.max_rules);
    for (int i = 0; i < nrules; ++i) {
        Rule r;
        r.id = "r" + std::to_string(i);
        r.from = static_cast<std::size_t>(pick(0, nloc - 1));
        r.to = static_cast<std::size_t>(pick(0, nloc - 1));
        r.update.assign(ta.shared.size(), 0);
        for (auto& u : r.update) u = pick(0, 2) == 0 ? 0 : 1;
        if (!ta.shared.empty() && pick(0, 1) == 0) {
            int nguards = pick(1, 2);
            for (int g = 0; g < nguards; ++g) {
                const auto& pool = (nparams == 2 && pick(0, 1)) ? rhs2 : rhs1;
                std::string text = ta.shared[pick(0, nshared - 1)] +
                                   ((shape.allow_fall && pick(0, 2) == 0) ? " < " : " >= ") + pool[pick(0, int(pool.size()) - 1)];
                r.guards.push_back(parse_guard(text, ta));
            }
        }
        ta.rules.push_back(std::move(r));
    }
    return ta;
}

// Constant-rise automaton over one parameter k with N(k) = k: at most 6
// locations, 10 rules, 2 shared variables and thresholds in 1..3.
inline ThresholdAutomaton random_constant_rise_ta(std::mt19937_64& rng) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    ThresholdAutomaton ta;
    ta.env.params = {"k"};
    ta.env.size_fn = to_affine(parse_linear_expr("k", ta.env.params, {}));
    int nloc = pick(2, 6);
    for (int i = 0; i < nloc; ++i) ta.locations.push_back("l" + std::to_string(i));
    ta.initial.push_back(0);
    if (nloc > 2 && pick(0, 2) == 0) ta.initial.push_back(1);
    int nshared = pick(1, 2);
    for (int i = 0; i < nshared; ++i) ta.shared.push_back(i == 0 ? "x" : "y");
    int nrules = pick(1, 10);
    for (int i = 0; i < nrules; ++i) {
        Rule r;
        r.id = "r" + std::to_string(i);
        r.from = static_cast<std::size_t>(pick(0, nloc - 1));
        r.to = static_cast<std::size_t>(pick(0, nloc - 1));
        r.update.assign(ta.shared.size(), 0);
        for (auto& u : r.update) u = pick(0, 2) == 0 ? 1 : 0;
        if (pick(0, 1) == 0) {
            int nguards = pick(1, nshared);
            for (int g = 0; g < nguards; ++g)
                r.guards.push_back(parse_guard(ta.shared[g] + " >= " + std::to_string(pick(1, 3)), ta));
        }
        ta.rules.push_back(std::move(r));
    }
    return ta;
}

// Multiplicative automaton: homogeneous resilience condition and system size,
// constant-free thresholds. At most 4 locations and 6 rules, some of them
// stuttering self-loops.
inline ThresholdAutomaton random_multiplicative_ta(std::mt19937_64& rng) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    ThresholdAutomaton ta;
    ta.env.params = {"n", "t"};
    static const char* rcs[] = {"n > 3*t", "n > 2*t", "n >= t"};
    ta.env.resilience.push_back(parse_constraint(rcs[pick(0, 2)], ta.env.params));
    ta.env.size_fn = to_affine(parse_linear_expr(pick(0, 1) ? "n" : "n - t", ta.env.params, {}));
    int nloc = pick(2, 4);
    for (int i = 0; i < nloc; ++i) ta.locations.push_back("l" + std::to_string(i));
    ta.initial.push_back(0);
    if (nloc > 2 && pick(0, 2) == 0) ta.initial.push_back(1);
    int nshared = pick(1, 2);
    for (int i = 0; i < nshared; ++i) ta.shared.push_back(i == 0 ? "x" : "y");
    static const char* rhs[] = {"t", "n", "2*t", "n - t", "1/2*n", "1/2*n + 1/2*t", "n - 2*t"};
    int nrules = pick(1, 6);
    for (int i = 0; i < nrules; ++i) {
        Rule r;
        r.id = "r" + std::to_string(i);
        r.update.assign(ta.shared.size(), 0);
        if (pick(0, 3) == 0) {
            r.from = r.to = static_cast<std::size_t>(pick(0, nloc - 1));
        } else {
            r.from = static_cast<std::size_t>(pick(0, nloc - 1));
            r.to = static_cast<std::size_t>(pick(0, nloc - 1));
            for (auto& u : r.update) u = pick(0, 2) == 0 ? 0 : 1;
            if (pick(0, 1) == 0) {
                std::string text = ta.shared[pick(0, nshared - 1)] + (pick(0, 3) == 0 ? " < " : " >= ") + rhs[pick(0, 6)];
                r.guards.push_back(parse_guard(text, ta));
            }
        }
        ta.rules.push_back(std::move(r));
    }
    return ta;
}

}  // namespace tamc::testing
