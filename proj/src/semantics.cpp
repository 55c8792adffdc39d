#include "tamc/semantics.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace tamc {

std::int64_t Configuration::processes() const {
    return std::accumulate(counters.begin(), counters.end(), std::int64_t{0});
}

std::size_t ConfigurationHash::operator()(const Configuration& c) const {
    std::size_t h = 1469598103934665603ull;
    auto mix = [&](std::int64_t v) {
        h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (auto v : c.counters) mix(v);
    mix(-1);
    for (auto v : c.globals) mix(v);
    mix(-2);
    for (auto v : c.params) mix(v);
    return h;
}

// ---------------------------------------------------------------- propositions

bool GuardFormula::eval(const std::vector<std::int64_t>& globals, const std::vector<std::int64_t>& params) const {
    switch (kind) {
        case Kind::True: return true;
        case Kind::Atom: return atom.holds(globals.at(atom.var), params);
        case Kind::And:
            return std::all_of(children.begin(), children.end(), [&](const GuardFormula& c) { return c.eval(globals, params); });
        case Kind::Or:
            return std::any_of(children.begin(), children.end(), [&](const GuardFormula& c) { return c.eval(globals, params); });
    }
    return false;
}

void GuardFormula::collect(std::vector<IntegerGuard>& out) const {
    if (kind == Kind::Atom && std::find(out.begin(), out.end(), atom) == out.end()) out.push_back(atom);
    for (const auto& c : children) c.collect(out);
}

bool CounterFormula::eval(const std::vector<std::int64_t>& counters) const {
    for (auto l : zero)
        if (counters.at(l) != 0) return false;
    for (const auto& s : nonzero)
        if (std::all_of(s.begin(), s.end(), [&](std::size_t l) { return counters.at(l) == 0; })) return false;
    return true;
}

bool eval_prop(const Configuration& sigma, const PropFormula& pf) {
    if (pf.premise && !pf.premise->eval(sigma.globals, sigma.params)) return true;
    return pf.conclusion.eval(sigma.counters);
}

bool eval_props(const Configuration& sigma, const std::vector<PropFormula>& pfs) {
    return std::all_of(pfs.begin(), pfs.end(), [&](const PropFormula& p) { return eval_prop(sigma, p); });
}

Configuration lift(const Configuration& sigma, std::int64_t mu) {
    Configuration out = sigma;
    for (auto& v : out.counters) v *= mu;
    for (auto& v : out.globals) v *= mu;
    for (auto& v : out.params) v *= mu;
    return out;
}

Context context_of(const std::vector<IntegerGuard>& guards, const Configuration& sigma) {
    Context ctx;
    for (std::size_t i = 0; i < guards.size(); ++i) {
        bool h = guards[i].holds(sigma.globals.at(guards[i].var), sigma.params);
        if ((guards[i].kind == GuardKind::Rise) == h) ctx.push_back(i);
    }
    return ctx;
}

// ---------------------------------------------------------------- Semantics

Semantics::Semantics(ThresholdAutomaton ta) : ta_(std::move(ta)) {
    if (ta_.is_sketch()) throw std::invalid_argument("semantics requires a concrete automaton");
    guards_ = index_guards(ta_);
    for (const auto& ids : guards_.by_rule) {
        std::vector<IntegerGuard> gs;
        for (auto id : ids) gs.push_back(guards_.guards[id]);
        rule_guards_.push_back(std::move(gs));
    }
}

bool Semantics::guards_hold(const Configuration& sigma, std::size_t rule) const {
    for (const auto& g : rule_guards_.at(rule))
        if (!g.holds(sigma.globals[g.var], sigma.params)) return false;
    return true;
}

bool Semantics::enables(const Configuration& sigma, std::size_t rule) const {
    return sigma.counters.at(ta_.rules.at(rule).from) > 0 && guards_hold(sigma, rule);
}

void Semantics::apply_in_place(Configuration& sigma, std::size_t rule) const {
    if (!enables(sigma, rule)) throw NotEnabled("rule " + ta_.rules.at(rule).id + " is not enabled");
    const Rule& r = ta_.rules[rule];
    --sigma.counters[r.from];
    ++sigma.counters[r.to];
    for (std::size_t i = 0; i < r.update.size(); ++i) sigma.globals[i] += static_cast<std::int64_t>(r.update[i]);
}

Configuration Semantics::apply(const Configuration& sigma, std::size_t rule) const {
    Configuration out = sigma;
    apply_in_place(out, rule);
    return out;
}

Configuration Semantics::run(const Configuration& sigma, const Schedule& tau) const {
    Configuration cur = sigma;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] >= ta_.rules.size() || !enables(cur, tau[i]))
            throw NotApplicable(i, tau[i] < ta_.rules.size() ? ta_.rules[tau[i]].id : "?");
        apply_in_place(cur, tau[i]);
    }
    return cur;
}

std::vector<Configuration> Semantics::trace(const Configuration& sigma, const Schedule& tau) const {
    std::vector<Configuration> out{sigma};
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] >= ta_.rules.size() || !enables(out.back(), tau[i]))
            throw NotApplicable(i, tau[i] < ta_.rules.size() ? ta_.rules[tau[i]].id : "?");
        out.push_back(apply(out.back(), tau[i]));
    }
    return out;
}

bool Semantics::is_initial(const Configuration& sigma) const {
    for (std::size_t l = 0; l < sigma.counters.size(); ++l)
        if (!ta_.is_initial(l) && sigma.counters[l] != 0) return false;
    return std::all_of(sigma.globals.begin(), sigma.globals.end(), [](std::int64_t v) { return v == 0; });
}

bool Semantics::is_valid(const Configuration& sigma) const {
    if (sigma.counters.size() != ta_.locations.size() || sigma.globals.size() != ta_.shared.size() ||
        sigma.params.size() != ta_.env.params.size())
        return false;
    if (!ta_.env.admissible(sigma.params)) return false;
    for (auto v : sigma.counters)
        if (v < 0) return false;
    for (auto v : sigma.globals)
        if (v < 0) return false;
    auto n = ta_.env.system_size(sigma.params);
    return n && *n == sigma.processes();
}

Schedule Semantics::parse_schedule(const std::vector<std::string>& ids) const {
    Schedule tau;
    for (const auto& id : ids) {
        auto i = ta_.rule_index(id);
        if (!i) throw std::invalid_argument("unknown rule '" + id + "'");
        tau.push_back(*i);
    }
    return tau;
}

std::vector<std::string> Semantics::schedule_ids(const Schedule& tau) const {
    std::vector<std::string> out;
    for (auto r : tau) out.push_back(ta_.rules.at(r).id);
    return out;
}

nlohmann::json Semantics::to_json(const Configuration& sigma) const {
    nlohmann::json j;
    j["params"] = nlohmann::json::object();
    for (std::size_t i = 0; i < sigma.params.size(); ++i) j["params"][ta_.env.params[i]] = sigma.params[i];
    j["counters"] = nlohmann::json::object();
    for (std::size_t i = 0; i < sigma.counters.size(); ++i)
        if (sigma.counters[i] != 0) j["counters"][ta_.locations[i]] = sigma.counters[i];
    j["globals"] = nlohmann::json::object();
    for (std::size_t i = 0; i < sigma.globals.size(); ++i) j["globals"][ta_.shared[i]] = sigma.globals[i];
    return j;
}

Configuration Semantics::from_json(const nlohmann::json& j) const {
    Configuration c;
    c.counters.assign(ta_.locations.size(), 0);
    c.globals.assign(ta_.shared.size(), 0);
    c.params.assign(ta_.env.params.size(), 0);
    auto fill = [&](const char* key, std::vector<std::int64_t>& dst, auto index) {
        if (!j.contains(key)) return;
        for (const auto& [name, v] : j.at(key).items()) {
            auto i = index(name);
            if (!i) throw std::invalid_argument(std::string("unknown name '") + name + "' in " + key);
            if (!v.is_number_integer() || v.template get<std::int64_t>() < 0)
                throw std::invalid_argument(std::string("value of '") + name + "' must be a natural number");
            dst[*i] = v.template get<std::int64_t>();
        }
    };
    fill("params", c.params, [&](const std::string& n) { return ta_.param_index(n); });
    fill("counters", c.counters, [&](const std::string& n) { return ta_.location_index(n); });
    fill("globals", c.globals, [&](const std::string& n) { return ta_.shared_index(n); });
    return c;
}

// ---------------------------------------------------------------- oracle

ParamBounds ParamBounds::uniform(std::size_t nparams, std::int64_t lo, std::int64_t hi) {
    return {std::vector<std::int64_t>(nparams, lo), std::vector<std::int64_t>(nparams, hi)};
}

ParamBounds ParamBounds::exact(const std::vector<std::int64_t>& p) { return {p, p}; }

std::vector<std::vector<std::int64_t>> admissible_params(const Environment& env, const ParamBounds& bounds) {
    std::vector<std::vector<std::int64_t>> out;
    std::size_t k = env.params.size();
    std::vector<std::int64_t> p(bounds.lo);
    for (std::size_t i = 0; i < k; ++i)
        if (bounds.lo[i] > bounds.hi[i]) return out;
    while (true) {
        if (env.admissible(p) && env.system_size(p)) out.push_back(p);
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (p[i] < bounds.hi[i]) {
                ++p[i];
                break;
            }
            p[i] = bounds.lo[i];
            if (i == 0) return out;
        }
        if (k == 0) return out;
    }
}

std::vector<Configuration> initial_configurations(const ThresholdAutomaton& ta, const ParamBounds& bounds,
                                                  std::size_t cap) {
    std::vector<Configuration> out;
    const auto& init = ta.initial;
    for (const auto& p : admissible_params(ta.env, bounds)) {
        Configuration c;
        c.counters.assign(ta.locations.size(), 0);
        c.globals.assign(ta.shared.size(), 0);
        c.params = p;
        // every way of spreading N(p) processes over the initial locations
        std::function<void(std::size_t, std::int64_t)> spread = [&](std::size_t i, std::int64_t left) {
            if (i + 1 == init.size()) {
                c.counters[init[i]] = left;
                out.push_back(c);
                if (out.size() > cap) throw ResourceLimit("more than " + std::to_string(cap) + " initial configurations");
                c.counters[init[i]] = 0;
                return;
            }
            for (std::int64_t v = 0; v <= left; ++v) {
                c.counters[init[i]] = v;
                spread(i + 1, left - v);
            }
            c.counters[init[i]] = 0;
        };
        spread(0, *ta.env.system_size(p));
    }
    return out;
}

namespace {

struct SearchNode {
    std::size_t parent;
    std::size_t rule;
    std::size_t depth;
};

void clamp(Configuration& c, const OracleOptions& opts, std::size_t remaining) {
    if (opts.global_caps)
        for (std::size_t i = 0; i < c.globals.size(); ++i) c.globals[i] = std::min(c.globals[i], (*opts.global_caps)[i]);
    if (opts.clamp_counters) {
        auto cap = static_cast<std::int64_t>(remaining) + 1;
        for (auto& v : c.counters) v = std::min(v, cap);
    }
}

}  // namespace

std::optional<OracleWitness> oracle_search(const Semantics& sem, const std::vector<Configuration>& inits,
                                           const ConfigPredicate& goal, std::size_t bound,
                                           const OracleOptions& options) {
    constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
    std::vector<Configuration> states;
    std::vector<SearchNode> nodes;
    std::unordered_map<Configuration, std::size_t, ConfigurationHash> seen;
    std::deque<std::size_t> queue;
    std::vector<Configuration> sorted(inits);
    std::sort(sorted.begin(), sorted.end());

    auto rebuild = [&](std::size_t idx) {
        OracleWitness w;
        while (nodes[idx].parent != kRoot) {
            w.schedule.push_back(nodes[idx].rule);
            idx = nodes[idx].parent;
        }
        std::reverse(w.schedule.begin(), w.schedule.end());
        w.init = sorted[nodes[idx].rule];
        return w;
    };

    for (std::size_t i = 0; i < sorted.size(); ++i) {
        Configuration c = sorted[i];
        clamp(c, options, bound);
        if (!seen.emplace(c, states.size()).second) continue;
        states.push_back(c);
        nodes.push_back({kRoot, i, 0});
        if (goal(c)) return rebuild(states.size() - 1);
        queue.push_back(states.size() - 1);
    }
    const std::size_t nrules = sem.ta().rules.size();
    while (!queue.empty()) {
        std::size_t idx = queue.front();
        queue.pop_front();
        if (nodes[idx].depth >= bound) continue;
        for (std::size_t r = 0; r < nrules; ++r) {
            if (!sem.enables(states[idx], r)) continue;
            Configuration next = sem.apply(states[idx], r);
            clamp(next, options, bound - nodes[idx].depth - 1);
            if (seen.count(next)) continue;
            if (states.size() >= options.max_states)
                throw ResourceLimit("oracle state cap of " + std::to_string(options.max_states) + " exceeded");
            seen.emplace(next, states.size());
            states.push_back(std::move(next));
            nodes.push_back({idx, r, nodes[idx].depth + 1});
            if (goal(states.back())) return rebuild(states.size() - 1);
            queue.push_back(states.size() - 1);
        }
    }
    return std::nullopt;
}

std::vector<Configuration> oracle_reachable(const Semantics& sem, const std::vector<Configuration>& inits,
                                            std::size_t bound, const OracleOptions& options) {
    std::vector<Configuration> out;
    oracle_search(
        sem, inits,
        [&](const Configuration& c) {
            out.push_back(c);
            return false;
        },
        bound, options);
    return out;
}

nlohmann::json trace_to_json(const Semantics& sem, const Configuration& init, const Schedule& tau) {
    nlohmann::json j;
    j["params"] = sem.to_json(init)["params"];
    j["init"] = sem.to_json(init);
    j["schedule"] = sem.schedule_ids(tau);
    nlohmann::json states = nlohmann::json::array();
    for (const auto& c : sem.trace(init, tau)) states.push_back(sem.to_json(c));
    j["states"] = states;
    return j;
}

}  // namespace tamc
