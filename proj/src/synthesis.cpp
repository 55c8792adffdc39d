#include "tamc/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace tamc {

namespace {

constexpr std::uint64_t kMaxCandidates = 2000000;

// n > sum delta_i t_i as the only resilience constraint
struct DeltaShape {
    std::size_t n = 0;
    std::vector<Rational> delta;  // per parameter, 0 for n
};

std::optional<DeltaShape> delta_shape(const Environment& env) {
    if (env.resilience.size() != 1) return std::nullopt;
    const auto& c = env.resilience[0];
    if (c.rel != Relation::Gt || !c.lhs.constant.is_zero()) return std::nullopt;
    std::optional<std::size_t> n;
    for (std::size_t i = 0; i < c.lhs.coeffs.size(); ++i) {
        if (c.lhs.coeffs[i].sign() > 0) {
            if (n) return std::nullopt;
            n = i;
        }
    }
    if (!n) return std::nullopt;
    DeltaShape s;
    s.n = *n;
    for (std::size_t i = 0; i < c.lhs.coeffs.size(); ++i)
        s.delta.push_back(i == *n ? Rational(0) : -c.lhs.coeffs[i] / c.lhs.coeffs[*n]);
    return s;
}

std::optional<std::size_t> system_parameter(const Environment& env) {
    if (auto s = delta_shape(env)) return s->n;
    for (std::size_t i = 0; i < env.params.size(); ++i)
        if (env.params[i] == "n") return i;
    if (env.params.size() == 1) return 0;
    return std::nullopt;
}

LinTerm scaled_term(const AffineForm& f, const std::vector<VarId>& vars, std::int64_t scale) {
    LinTerm t;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        Rational c = f.coeffs[i] * Rational(scale);
        if (!c.is_zero()) t += LinTerm::var(vars[i], c.num());
    }
    t += LinTerm((f.constant * Rational(scale)).num());
    return t;
}

AffineForm substitute(const LinearExpr& e, const Assignment& mu) {
    auto value = [&](const Coefficient& c) {
        if (c.is_constant()) return c.value;
        auto it = mu.find(c.indeterminate);
        if (it == mu.end()) throw MissingIndeterminate("no value for indeterminate '" + c.indeterminate + "'");
        return it->second;
    };
    AffineForm f;
    f.constant = value(e.constant);
    for (const auto& c : e.coeffs) f.coeffs.push_back(value(c));
    return f;
}

std::vector<std::string> indeterminates_of(const LinearExpr& e) {
    std::vector<std::string> out;
    if (!e.constant.is_constant()) out.push_back(e.constant.indeterminate);
    for (const auto& c : e.coeffs)
        if (!c.is_constant()) out.push_back(c.indeterminate);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Solver-backed sanity checks, cached per instantiated threshold.
class SanityProbe {
public:
    SanityProbe(const Environment& env, const SolverConfig& solver) : env_(env), solver_(solver) {
        auto n = system_parameter(env);
        if (!n) throw UnboundedSpace("cannot tell which parameter counts the processes");
        n_ = *n;
    }

    bool sane(const AffineForm& rhs) {
        std::string key = format_affine(rhs, env_.params);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        VarPool pool;
        std::vector<VarId> p;
        for (const auto& name : env_.params) p.push_back(pool.add(name));
        std::vector<Formula> fs;
        for (const auto& c : env_.resilience) {
            std::int64_t s = c.lhs.denominator_lcm();
            fs.push_back(atom(scaled_term(c.lhs, p, s), c.rel, 0));
        }
        std::int64_t s = rhs.denominator_lcm();
        LinTerm r = scaled_term(rhs, p, s);
        fs.push_back(disj(lt(r, 0), gt(r, LinTerm::var(p[n_], s))));
        Verdict v = solve(pool, conj(std::move(fs)), solver_);
        if (v.unknown()) throw ResourceLimit("sanity probe for threshold " + key + " returned unknown: " + v.reason);
        bool ok = v.unsat();
        cache_.emplace(key, ok);
        return ok;
    }

private:
    const Environment& env_;
    const SolverConfig& solver_;
    std::size_t n_ = 0;
    std::unordered_map<std::string, bool> cache_;
};

std::int64_t ceil_of(const Rational& r) { return r.ceil(); }

}  // namespace

ThresholdAutomaton instantiate(const ThresholdAutomaton& sketch, const Assignment& mu) {
    ThresholdAutomaton ta = sketch;
    for (auto& r : ta.rules)
        for (auto& g : r.guards) {
            AffineForm f = substitute(g.rhs, mu);
            g.rhs.constant = Coefficient::constant(f.constant);
            for (std::size_t i = 0; i < f.coeffs.size(); ++i) g.rhs.coeffs[i] = Coefficient::constant(f.coeffs[i]);
        }
    ta.indeterminates.clear();
    return ta;
}

std::string format_assignment(const Assignment& mu) {
    std::string s = "{";
    for (const auto& [k, v] : mu) s += (s.size() > 1 ? ", " : "") + k + " = " + v.str();
    return s + "}";
}

std::uint64_t CandidateSpace::size() const {
    std::uint64_t n = 1;
    for (const auto& r : numerators) {
        if (r.empty()) return 0;
        if (n > std::numeric_limits<std::uint64_t>::max() / r.size()) return std::numeric_limits<std::uint64_t>::max();
        n *= r.size();
    }
    return n;
}

CandidateSpace sane_space(const ThresholdAutomaton& sketch, const SaneOptions& options, const SolverConfig& solver) {
    if (options.denominator < 1) throw std::invalid_argument("denominator bound must be positive");
    CandidateSpace space;
    space.indeterminates = sketch.indeterminates;
    space.denominator = options.denominator;
    const std::int64_t D = options.denominator;
    auto shape = delta_shape(sketch.env);
    if (!options.bound && !shape)
        throw UnboundedSpace("resilience condition is not of the form n > sum delta_i t_i; a numerator bound is required");
    SanityProbe probe(sketch.env, solver);

    for (const auto& v : sketch.indeterminates) {
        std::int64_t lo = 0, hi = 0;
        if (options.bound) {
            lo = -*options.bound * D;
            hi = *options.bound * D;
        } else {
            Rational sum_delta(0);
            for (const auto& d : shape->delta) sum_delta += d;
            const std::int64_t k = static_cast<std::int64_t>(sketch.env.params.size()) - 1;
            bool first = true;
            auto widen = [&](std::int64_t a, std::int64_t b) {
                lo = first ? a : std::min(lo, a);
                hi = first ? b : std::max(hi, b);
                first = false;
            };
            for (const auto& r : sketch.rules)
                for (const auto& g : r.guards) {
                    if (g.rhs.constant.indeterminate == v) {
                        std::int64_t c = ceil_of(Rational(2) * sum_delta) + k + 1;
                        widen(-c * D, c * D);
                    }
                    for (std::size_t i = 0; i < g.rhs.coeffs.size(); ++i) {
                        if (g.rhs.coeffs[i].indeterminate != v) continue;
                        if (i == shape->n) {
                            widen(0, D);
                        } else {
                            std::int64_t b = ceil_of(shape->delta[i]) + 1;
                            widen(-b * D, b * D);
                        }
                    }
                }
        }
        std::vector<std::int64_t> keep;
        for (std::int64_t j = lo; j <= hi; ++j) {
            Assignment single{{v, Rational(j, D)}};
            bool ok = true;
            for (const auto& r : sketch.rules)
                for (const auto& g : r.guards) {
                    if (!ok) break;
                    auto ids = indeterminates_of(g.rhs);
                    if (ids.size() == 1 && ids[0] == v) ok = probe.sane(substitute(g.rhs, single));
                }
            if (ok) keep.push_back(j);
        }
        space.numerators.push_back(std::move(keep));
    }
    return space;
}

bool sane_assignment(const ThresholdAutomaton& sketch, const Assignment& mu, const SolverConfig& solver) {
    SanityProbe probe(sketch.env, solver);
    for (const auto& r : sketch.rules)
        for (const auto& g : r.guards)
            if (!indeterminates_of(g.rhs).empty() && !probe.sane(substitute(g.rhs, mu))) return false;
    return true;
}

const char* to_string(SynthesisResult::Kind k) {
    switch (k) {
        case SynthesisResult::Kind::Found: return "found";
        case SynthesisResult::Kind::NoneInSpace: return "none-in-space";
        case SynthesisResult::Kind::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

// Lexicographic by (common denominator of the reduced values, numerator vector).
std::vector<Assignment> enumerate(const CandidateSpace& space) {
    std::uint64_t total = space.size();
    if (total > kMaxCandidates) throw ResourceLimit("candidate space of " + std::to_string(total) + " assignments is too large");
    struct Entry {
        std::int64_t den;
        std::vector<std::int64_t> nums;
    };
    std::vector<Entry> entries;
    std::vector<std::size_t> idx(space.numerators.size(), 0);
    if (total == 0) return {};
    for (;;) {
        Entry e{1, {}};
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::int64_t j = space.numerators[i][idx[i]];
            e.nums.push_back(j);
            e.den = std::lcm(e.den, Rational(j, space.denominator).den());
        }
        entries.push_back(std::move(e));
        std::size_t i = 0;
        while (i < idx.size() && ++idx[i] == space.numerators[i].size()) idx[i++] = 0;
        if (i == idx.size()) break;
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.den, a.nums) < std::tie(b.den, b.nums);
    });
    std::vector<Assignment> out;
    for (const auto& e : entries) {
        Assignment mu;
        for (std::size_t i = 0; i < e.nums.size(); ++i) mu[space.indeterminates[i]] = Rational(e.nums[i], space.denominator);
        out.push_back(std::move(mu));
    }
    return out;
}

}  // namespace

SynthesisResult synthesize(const ThresholdAutomaton& sketch, const EltlFormula& spec, const SolverConfig& solver,
                           const SynthesisOptions& options) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

    SynthesisResult res;
    CandidateSpace space;
    if (sketch.indeterminates.empty()) {
        space.denominator = options.space.denominator;
    } else {
        space = sane_space(sketch, options.space, solver);
    }
    res.space_size = space.size();
    std::vector<Assignment> cands = enumerate(space);
    const CutGraph graph = cut_graph(to_normal_form(spec));
    std::vector<bool> blocked(cands.size(), false);
    std::vector<std::size_t> pruned_ids;
    bool undecided = false;

    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (blocked[i]) continue;
        if (elapsed() > options.budget_s) {
            res.kind = SynthesisResult::Kind::Unknown;
            res.reason = "budget of " + std::to_string(options.budget_s) + " s exhausted after " +
                         std::to_string(res.candidates_tried) + " checked and " + std::to_string(res.pruned) +
                         " pruned of " + std::to_string(cands.size()) + " candidates";
            return res;
        }
        const Assignment& mu = cands[i];
        if (!sketch.indeterminates.empty() && !sane_assignment(sketch, mu, solver)) {
            res.log.push_back({mu, "insane", ""});
            continue;
        }
        ThresholdAutomaton ta = instantiate(sketch, mu);
        Multiplicativity m = check_multiplicative(ta);
        if (m.kind == Multiplicativity::Kind::No) {
            res.log.push_back({mu, "not-multiplicative", m.reason});
            continue;
        }
        CheckOptions opts = options.check;
        opts.assume_multiplicative = true;
        ++res.candidates_tried;
        CheckResult cr = check_spec(ta, spec, solver, opts);
        if (cr.kind == CheckResult::Kind::Holds) {
            res.log.push_back({mu, "holds", ""});
            res.kind = SynthesisResult::Kind::Found;
            res.assignment = mu;
            break;
        }
        if (cr.kind == CheckResult::Kind::Unknown) {
            res.log.push_back({mu, "unknown", cr.reason});
            undecided = true;
            continue;
        }
        res.log.push_back({mu, "violated", std::to_string(cr.witness->schedule.size()) + "-step lasso"});
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
            if (blocked[j]) continue;
            ThresholdAutomaton other = instantiate(sketch, cands[j]);
            Semantics sem(other);
            const LassoWitness& w = *cr.witness;
            if (lasso_defect(sem, graph, w)) continue;
            if (!eval_on_lasso(sem, spec, w.milestones[0], w.stem(), w.loop())) continue;
            blocked[j] = true;
            ++res.pruned;
            pruned_ids.push_back(j);
            res.log.push_back({cands[j], "pruned", "witness of " + format_assignment(mu) + " replays"});
        }
    }

    if (!res.assignment) {
        res.kind = undecided ? SynthesisResult::Kind::Unknown : SynthesisResult::Kind::NoneInSpace;
        if (undecided) res.reason = "some candidates could not be decided";
    }

    std::mt19937_64 rng(options.seed);
    std::shuffle(pruned_ids.begin(), pruned_ids.end(), rng);
    if (pruned_ids.size() > options.recheck) pruned_ids.resize(options.recheck);
    for (auto j : pruned_ids) {
        CheckOptions opts = options.check;
        opts.assume_multiplicative = true;
        CheckResult cr = check_spec(instantiate(sketch, cands[j]), spec, solver, opts);
        res.rechecked.push_back(cands[j]);
        if (cr.kind != CheckResult::Kind::Violated) ++res.recheck_failures;
    }
    return res;
}

nlohmann::json synthesis_to_json(const SynthesisResult& r) {
    auto assignment_json = [](const Assignment& mu) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : mu) j[k] = std::to_string(v.num()) + "/" + std::to_string(v.den());
        return j;
    };
    nlohmann::json j;
    j["verdict"] = to_string(r.kind);
    j["assignment"] = r.assignment ? assignment_json(*r.assignment) : nlohmann::json(nullptr);
    j["space_size"] = r.space_size;
    j["candidates_tried"] = r.candidates_tried;
    j["pruned"] = r.pruned;
    j["rechecked"] = r.rechecked.size();
    j["recheck_failures"] = r.recheck_failures;
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : r.log) log.push_back({{"assignment", assignment_json(e.mu)}, {"outcome", e.outcome}, {"detail", e.detail}});
    j["log"] = log;
    if (!r.reason.empty()) j["reason"] = r.reason;
    return j;
}

}  // namespace tamc
