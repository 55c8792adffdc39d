#include "tamc/reach.hpp"

#include <algorithm>
#include <deque>

namespace tamc {

namespace {

LinTerm affine_term(const AffineForm& f, const std::vector<VarId>& params, std::int64_t scale) {
    LinTerm t((f.constant * Rational(scale)).num());
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        Rational c = f.coeffs[i] * Rational(scale);
        if (!c.is_zero()) t += LinTerm::var(params[i], c.num());
    }
    return t;
}

}  // namespace

ReachEncoder::ReachEncoder(const ThresholdAutomaton& ta, VarPool& pool, const std::vector<IntegerGuard>& extra_guards)
    : ta_(ta), pool_(pool) {
    GuardIndex idx = index_guards(ta);
    for (const auto& g : extra_guards)
        if (!trivially_true(g)) idx.intern(g);
    tracked_ = idx.guards;
    rule_guards_ = idx.by_rule;
}

SymbolicConfig ReachEncoder::make_config(const std::string& prefix, const std::vector<VarId>* params) {
    SymbolicConfig s;
    for (const auto& l : ta_.locations) s.counters.push_back(pool_.add(prefix + "_k_" + l));
    for (const auto& x : ta_.shared) s.globals.push_back(pool_.add(prefix + "_g_" + x));
    if (params) {
        s.params = *params;
    } else {
        for (const auto& p : ta_.env.params) s.params.push_back(pool_.add(prefix + "_p_" + p));
    }
    return s;
}

SteadyCounts ReachEncoder::make_counts(const std::string& prefix, bool with_ranks) {
    SteadyCounts x;
    for (const auto& r : ta_.rules) x.counts.push_back(pool_.add(prefix + "_x_" + r.id));
    if (with_ranks)
        for (const auto& r : ta_.rules) x.ranks.push_back(pool_.add(prefix + "_rho_" + r.id));
    return x;
}

Formula ReachEncoder::guard_holds(const IntegerGuard& g, const SymbolicConfig& s) const {
    LinTerm lhs = LinTerm::var(s.globals.at(g.var), g.scale);
    LinTerm rhs(g.constant);
    for (std::size_t i = 0; i < g.coeffs.size(); ++i) rhs += LinTerm::var(s.params[i], g.coeffs[i]);
    return atom(lhs, g.kind == GuardKind::Rise ? Relation::Ge : Relation::Lt, rhs);
}

Formula ReachEncoder::resilience(const SymbolicConfig& s) const {
    std::vector<Formula> fs;
    for (const auto& c : ta_.env.resilience) fs.push_back(atom(affine_term(c.lhs, s.params, c.lhs.denominator_lcm()), c.rel, 0));
    return conj(std::move(fs));
}

LinTerm ReachEncoder::size_term(const SymbolicConfig& s) const {
    return affine_term(ta_.env.size_fn, s.params, ta_.env.size_fn.denominator_lcm());
}

Formula ReachEncoder::admissible(const SymbolicConfig& s) const {
    return conj(resilience(s), eq(sum_of(s.counters) * ta_.env.size_fn.denominator_lcm(), size_term(s)));
}

Formula ReachEncoder::same_params(const SymbolicConfig& a, const SymbolicConfig& b) const {
    std::vector<Formula> fs;
    for (std::size_t i = 0; i < a.params.size(); ++i)
        if (a.params[i] != b.params[i]) fs.push_back(eq(LinTerm::var(a.params[i]), LinTerm::var(b.params[i])));
    return conj(std::move(fs));
}

Formula ReachEncoder::initial(const SymbolicConfig& s) const {
    std::vector<Formula> fs;
    for (std::size_t l = 0; l < ta_.locations.size(); ++l)
        if (!ta_.is_initial(l)) fs.push_back(eq(LinTerm::var(s.counters[l]), 0));
    for (auto g : s.globals) fs.push_back(eq(LinTerm::var(g), 0));
    return conj(std::move(fs));
}

Formula ReachEncoder::equals(const SymbolicConfig& s, const Configuration& c) const {
    std::vector<Formula> fs;
    for (std::size_t i = 0; i < s.counters.size(); ++i) fs.push_back(eq(LinTerm::var(s.counters[i]), c.counters.at(i)));
    for (std::size_t i = 0; i < s.globals.size(); ++i) fs.push_back(eq(LinTerm::var(s.globals[i]), c.globals.at(i)));
    for (std::size_t i = 0; i < s.params.size(); ++i) fs.push_back(eq(LinTerm::var(s.params[i]), c.params.at(i)));
    return conj(std::move(fs));
}

Formula ReachEncoder::zero(const SymbolicConfig& s, const std::vector<std::size_t>& locs) const {
    std::vector<Formula> fs;
    for (auto l : locs) fs.push_back(eq(LinTerm::var(s.counters.at(l)), 0));
    return conj(std::move(fs));
}

Formula ReachEncoder::positive(const SymbolicConfig& s, const std::vector<std::size_t>& locs) const {
    std::vector<Formula> fs;
    for (auto l : locs) fs.push_back(gt(LinTerm::var(s.counters.at(l)), 0));
    return conj(std::move(fs));
}

Formula ReachEncoder::phi_base(const SymbolicConfig& s, const SymbolicConfig& t) const {
    std::vector<Formula> fs{same_params(s, t), admissible(s), admissible(t)};
    for (const auto& g : tracked_) {
        Formula a = guard_holds(g, s);
        Formula b = guard_holds(g, t);
        fs.push_back(disj(conj(a, b), conj(negate(a), negate(b))));
    }
    return conj(std::move(fs));
}

Formula ReachEncoder::phi_flow(const SymbolicConfig& s, const SymbolicConfig& t, const std::vector<VarId>& x) const {
    std::vector<Formula> fs;
    for (std::size_t l = 0; l < ta_.locations.size(); ++l) {
        LinTerm net;
        for (std::size_t r = 0; r < ta_.rules.size(); ++r) {
            if (ta_.rules[r].to == l) net += LinTerm::var(x[r]);
            if (ta_.rules[r].from == l) net -= LinTerm::var(x[r]);
        }
        fs.push_back(eq(net, LinTerm::var(t.counters[l]) - LinTerm::var(s.counters[l])));
    }
    return conj(std::move(fs));
}

Formula ReachEncoder::phi_shared(const SymbolicConfig& s, const SymbolicConfig& t, const std::vector<VarId>& x) const {
    std::vector<Formula> fs;
    for (std::size_t z = 0; z < ta_.shared.size(); ++z) {
        LinTerm inc;
        for (std::size_t r = 0; r < ta_.rules.size(); ++r)
            if (ta_.rules[r].update[z] != 0) inc += LinTerm::var(x[r], static_cast<std::int64_t>(ta_.rules[r].update[z]));
        fs.push_back(eq(inc, LinTerm::var(t.globals[z]) - LinTerm::var(s.globals[z])));
    }
    return conj(std::move(fs));
}

Formula ReachEncoder::phi_enabled(const SymbolicConfig& s, const std::vector<VarId>& x) const {
    std::vector<Formula> fs;
    for (std::size_t r = 0; r < ta_.rules.size(); ++r) {
        if (rule_guards_[r].empty()) continue;
        std::vector<Formula> gs;
        for (auto g : rule_guards_[r]) gs.push_back(guard_holds(tracked_[g], s));
        fs.push_back(implies(gt(LinTerm::var(x[r]), 0), conj(std::move(gs))));
    }
    return conj(std::move(fs));
}

Formula ReachEncoder::phi_appl(const SymbolicConfig& s, const SteadyCounts& x) const {
    std::vector<Formula> fs;
    for (std::size_t r = 0; r < ta_.rules.size(); ++r) {
        const Rule& rule = ta_.rules[r];
        std::vector<Formula> reasons{gt(LinTerm::var(s.counters[rule.from]), 0)};
        for (std::size_t q = 0; q < ta_.rules.size(); ++q) {
            if (q == r || ta_.rules[q].to != rule.from) continue;
            reasons.push_back(conj(gt(LinTerm::var(x.counts[q]), 0), lt(LinTerm::var(x.ranks[q]), LinTerm::var(x.ranks[r]))));
        }
        fs.push_back(implies(gt(LinTerm::var(x.counts[r]), 0), disj(std::move(reasons))));
    }
    return conj(std::move(fs));
}

std::vector<std::vector<std::size_t>> rule_chains(const ThresholdAutomaton& ta, std::size_t rule, std::size_t cap) {
    // grow chains backwards from `rule`
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> chain{rule};
    std::vector<bool> used(ta.rules.size(), false);
    used[rule] = true;
    std::function<void()> grow = [&] {
        std::vector<std::size_t> forward(chain.rbegin(), chain.rend());
        out.push_back(forward);
        if (out.size() > cap) throw ResourceLimit("too many rule chains");
        std::size_t head = chain.back();
        for (std::size_t q = 0; q < ta.rules.size(); ++q) {
            if (used[q] || ta.rules[q].to != ta.rules[head].from) continue;
            used[q] = true;
            chain.push_back(q);
            grow();
            chain.pop_back();
            used[q] = false;
        }
    };
    grow();
    return out;
}

Formula ReachEncoder::phi_appl_chains(const SymbolicConfig& s, const std::vector<VarId>& x) const {
    std::vector<Formula> fs;
    for (std::size_t r = 0; r < ta_.rules.size(); ++r) {
        std::vector<Formula> options;
        for (const auto& ch : rule_chains(ta_, r)) {
            std::vector<Formula> parts{gt(LinTerm::var(s.counters[ta_.rules[ch.front()].from]), 0)};
            for (auto q : ch) parts.push_back(gt(LinTerm::var(x[q]), 0));
            options.push_back(conj(std::move(parts)));
        }
        fs.push_back(implies(gt(LinTerm::var(x[r]), 0), disj(std::move(options))));
    }
    return conj(std::move(fs));
}

Formula ReachEncoder::phi_steady(const SymbolicConfig& s, const SymbolicConfig& t, const SteadyCounts& x,
                                 ApplEncoding appl) const {
    return conj({phi_base(s, t), phi_flow(s, t, x.counts), phi_shared(s, t, x.counts), phi_enabled(s, x.counts),
                 appl == ApplEncoding::Rank ? phi_appl(s, x) : phi_appl_chains(s, x.counts)});
}

Formula ReachEncoder::phi_step(const SymbolicConfig& s, const SymbolicConfig& t, const std::vector<VarId>& y) const {
    std::vector<Formula> fs{same_params(s, t), admissible(s), admissible(t), phi_flow(s, t, y), phi_shared(s, t, y),
                            phi_enabled(s, y), le(sum_of(y), 1)};
    // with at most one firing the only chain is the rule itself
    for (std::size_t r = 0; r < ta_.rules.size(); ++r)
        fs.push_back(implies(gt(LinTerm::var(y[r]), 0), gt(LinTerm::var(s.counters[ta_.rules[r].from]), 0)));
    return conj(std::move(fs));
}

ReachEncoding ReachEncoder::phi_reach(const SymbolicConfig& s, const SymbolicConfig& t, const std::string& prefix,
                                      const ReachOptions& options) {
    ReachEncoding e;
    const std::size_t k = segments_bound();
    std::vector<Formula> fs;
    for (std::size_t i = 0; i <= k; ++i) {
        SymbolicConfig start = i == 0 ? s : make_config(prefix + "_s" + std::to_string(i), &s.params);
        SymbolicConfig end = i == k ? t : make_config(prefix + "_e" + std::to_string(i), &s.params);
        if (i > 0) {
            std::vector<VarId> y = make_counts(prefix + "_y" + std::to_string(i - 1), false).counts;
            fs.push_back(phi_step(e.points.back(), start, y));
            e.steps.push_back(std::move(y));
        }
        SteadyCounts x = make_counts(prefix + "_b" + std::to_string(i), options.appl == ApplEncoding::Rank);
        fs.push_back(phi_steady(start, end, x, options.appl));
        if (options.block_hook) fs.push_back(options.block_hook(start, end, x));
        e.points.push_back(start);
        e.points.push_back(end);
        e.blocks.push_back(std::move(x));
    }
    LinTerm total;
    for (std::size_t r = 0; r < ta_.rules.size(); ++r) {
        VarId sum = pool_.add(prefix + "_sum_" + ta_.rules[r].id);
        LinTerm parts;
        for (const auto& b : e.blocks) parts += LinTerm::var(b.counts[r]);
        for (const auto& y : e.steps) parts += LinTerm::var(y[r]);
        fs.push_back(eq(LinTerm::var(sum), parts));
        total += LinTerm::var(sum);
        e.sums.push_back(sum);
    }
    if (options.bound) fs.push_back(le(total, *options.bound));
    e.formula = conj(std::move(fs));
    return e;
}

Configuration ReachEncoder::decode(const SymbolicConfig& s, const Model& m) const {
    Configuration c;
    for (auto v : s.counters) c.counters.push_back(m[v]);
    for (auto v : s.globals) c.globals.push_back(m[v]);
    for (auto v : s.params) c.params.push_back(m[v]);
    return c;
}

ReachWitness decode_witness(const ReachEncoder& enc, const ReachEncoding& e, const Model& m) {
    if (e.blocks.size() > enc.segments_bound() + 1)
        throw InternalInvariantViolation("witness uses more than |guards|+1 steady segments");
    ReachWitness w;
    for (const auto& p : e.points) w.points.push_back(enc.decode(p, m));
    for (const auto& b : e.blocks) {
        std::vector<std::int64_t> v;
        for (auto x : b.counts) v.push_back(m[x]);
        w.steady.push_back(std::move(v));
    }
    for (const auto& y : e.steps) {
        std::vector<std::int64_t> v;
        for (auto x : y) v.push_back(m[x]);
        w.steps.push_back(std::move(v));
    }
    for (auto s : e.sums) w.sums.push_back(m[s]);
    return w;
}

// ---------------------------------------------------------------- realization

Schedule realize_steady(const Semantics& sem, const Configuration& sigma, const std::vector<std::int64_t>& counts) {
    const auto& rules = sem.ta().rules;
    const std::size_t nloc = sem.ta().locations.size();
    std::vector<std::int64_t> rem(counts);
    std::int64_t left = 0;
    for (auto c : rem) {
        if (c < 0) throw InternalInvariantViolation("negative rule count");
        left += c;
    }
    Configuration cur = sigma;
    Schedule tau;
    auto cycle_rule_at = [&](std::size_t loc) -> std::optional<std::size_t> {
        for (std::size_t t = 0; t < rules.size(); ++t) {
            if (rem[t] == 0 || rules[t].from != loc) continue;
            // can loc be reached again from rules[t].to using remaining rules?
            std::vector<bool> seen(nloc, false);
            std::deque<std::size_t> q{rules[t].to};
            seen[rules[t].to] = true;
            while (!q.empty()) {
                std::size_t l = q.front();
                q.pop_front();
                if (l == loc) return t;
                for (std::size_t u = 0; u < rules.size(); ++u)
                    if (rem[u] > 0 && rules[u].from == l && !seen[rules[u].to]) {
                        seen[rules[u].to] = true;
                        q.push_back(rules[u].to);
                    }
            }
        }
        return std::nullopt;
    };
    while (left > 0) {
        std::optional<std::size_t> head;
        for (std::size_t r = 0; r < rules.size() && !head; ++r)
            if (rem[r] > 0 && cur.counters[rules[r].from] > 0) head = r;
        if (!head) throw InternalInvariantViolation("steady realization stalled: no remaining rule has a populated source");
        std::size_t fire = cycle_rule_at(rules[*head].from).value_or(*head);
        if (!sem.enables(cur, fire))
            throw InternalInvariantViolation("steady realization picked disabled rule " + rules[fire].id);
        sem.apply_in_place(cur, fire);
        --rem[fire];
        --left;
        tau.push_back(fire);
    }
    return tau;
}

Schedule realize_path(const Semantics& sem, const ReachWitness& w) {
    Schedule tau;
    for (std::size_t i = 0; i < w.steady.size(); ++i) {
        const Configuration& start = w.points[2 * i];
        const Configuration& end = w.points[2 * i + 1];
        Schedule seg = realize_steady(sem, start, w.steady[i]);
        Configuration reached = sem.run(start, seg);
        if (reached != end) throw InternalInvariantViolation("steady segment " + std::to_string(i) + " ends off its target");
        if (sem.context(start) != sem.context(end))
            throw InternalInvariantViolation("steady segment " + std::to_string(i) + " changes context");
        tau.insert(tau.end(), seg.begin(), seg.end());
        if (i < w.steps.size()) {
            const Configuration& next = w.points[2 * i + 2];
            Configuration after = end;
            for (std::size_t r = 0; r < w.steps[i].size(); ++r) {
                if (w.steps[i][r] == 0) continue;
                if (!sem.enables(after, r)) throw InternalInvariantViolation("single step " + std::to_string(i) + " is not enabled");
                sem.apply_in_place(after, r);
                tau.push_back(r);
            }
            if (after != next) throw InternalInvariantViolation("single step " + std::to_string(i) + " ends off its target");
        }
    }
    return tau;
}

// ---------------------------------------------------------------- queries

ReachResult solve_reach(const ThresholdAutomaton& ta, const ReachQuery& query, const SolverConfig& solver) {
    VarPool pool;
    ReachEncoder enc(ta, pool);
    SymbolicConfig start = enc.make_config("init");
    SymbolicConfig target = enc.make_config("goal", &start.params);
    std::vector<Formula> fs;
    if (query.init) fs.push_back(enc.equals(start, *query.init));
    else fs.push_back(enc.initial(start));
    fs.push_back(enc.admissible(start));
    fs.push_back(enc.zero(target, query.zero));
    fs.push_back(enc.positive(target, query.pos));
    if (query.param_bounds) {
        for (std::size_t i = 0; i < start.params.size(); ++i) {
            fs.push_back(ge(LinTerm::var(start.params[i]), query.param_bounds->lo[i]));
            fs.push_back(le(LinTerm::var(start.params[i]), query.param_bounds->hi[i]));
        }
    }
    ReachOptions opts;
    opts.appl = query.appl;
    opts.bound = query.bound;
    ReachEncoding e = enc.phi_reach(start, target, "r", opts);
    fs.push_back(e.formula);
    Verdict v = solve(pool, conj(std::move(fs)), solver);
    ReachResult res;
    res.kind = v.kind;
    res.reason = v.reason;
    if (!v.sat()) return res;

    Semantics sem(ta);
    ReachWitness w = decode_witness(enc, e, v.model);
    res.schedule = realize_path(sem, w);
    Configuration end = sem.run(w.points.front(), res.schedule);
    if (end != w.points.back()) throw InternalInvariantViolation("realized schedule does not reach the witness target");
    if (!sem.is_valid(w.points.front())) throw InternalInvariantViolation("witness start is not a valid configuration");
    std::vector<std::int64_t> fired(ta.rules.size(), 0);
    for (auto r : res.schedule) ++fired[r];
    if (fired != w.sums) throw InternalInvariantViolation("realized schedule does not match the rule totals");
    res.witness = std::move(w);
    return res;
}

nlohmann::json reach_witness_to_json(const Semantics& sem, const ReachWitness& w, const Schedule& schedule) {
    const auto& ta = sem.ta();
    auto counts_json = [&](const std::vector<std::int64_t>& c) {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t r = 0; r < c.size(); ++r)
            if (c[r] != 0) j[ta.rules[r].id] = c[r];
        return j;
    };
    nlohmann::json segs = nlohmann::json::array();
    for (std::size_t i = 0; i < w.steady.size(); ++i) {
        bool empty = std::all_of(w.steady[i].begin(), w.steady[i].end(), [](std::int64_t c) { return c == 0; });
        if (!empty) {
            nlohmann::json s;
            s["start"] = sem.to_json(w.points[2 * i]);
            s["end"] = sem.to_json(w.points[2 * i + 1]);
            s["counts"] = counts_json(w.steady[i]);
            segs.push_back(s);
        }
        if (i < w.steps.size()) {
            for (std::size_t r = 0; r < w.steps[i].size(); ++r)
                if (w.steps[i][r] != 0) segs.push_back({{"step", ta.rules[r].id}});
        }
    }
    nlohmann::json j = trace_to_json(sem, w.points.front(), schedule);
    j["segments"] = segs;
    j["sums"] = counts_json(w.sums);
    j["segment_bound"] = w.steady.size();
    return j;
}

}  // namespace tamc
