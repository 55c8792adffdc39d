#include "tamc/generators.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace tamc {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Line {
    std::size_t number;
    std::vector<std::string> words;
};

std::vector<Line> tokenize_lines(const std::string& text) {
    std::vector<Line> out;
    std::istringstream in(text);
    std::string raw;
    std::size_t n = 0;
    while (std::getline(in, raw)) {
        ++n;
        if (auto pct = raw.find('%'); pct != std::string::npos) raw.resize(pct);
        std::istringstream ws(raw);
        Line line{n, {}};
        for (std::string w; ws >> w;) line.words.push_back(w);
        if (line.words.empty() || line.words[0] == "c") continue;
        out.push_back(std::move(line));
    }
    return out;
}

long parse_int(const std::string& w, std::size_t line) {
    char* end = nullptr;
    long v = std::strtol(w.c_str(), &end, 10);
    if (w.empty() || *end != '\0') throw ParseError("expected an integer, got '" + w + "'", line, 0);
    return v;
}

// Reads 0-terminated literal groups after the header.
std::vector<std::vector<int>> read_groups(const std::vector<Line>& lines, std::size_t from, std::size_t num_vars,
                                          const char* what) {
    std::vector<std::vector<int>> groups;
    std::vector<int> cur;
    std::size_t last = 0;
    for (std::size_t i = from; i < lines.size(); ++i) {
        for (const auto& w : lines[i].words) {
            long v = parse_int(w, lines[i].number);
            last = lines[i].number;
            if (v == 0) {
                if (cur.size() > 3) throw ParseError(std::string(what) + " with more than 3 literals", lines[i].number, 0);
                groups.push_back(cur);
                cur.clear();
                continue;
            }
            if (static_cast<std::size_t>(std::labs(v)) > num_vars)
                throw ParseError("literal " + w + " exceeds the declared variable count", lines[i].number, 0);
            cur.push_back(static_cast<int>(v));
        }
    }
    if (!cur.empty()) throw ParseError(std::string(what) + " is not 0-terminated", last, 0);
    return groups;
}

LinearExpr constant_expr(std::size_t nparams, std::int64_t c) {
    LinearExpr e;
    e.constant = Coefficient::constant(Rational(c));
    e.coeffs.assign(nparams, Coefficient::constant(Rational(0)));
    return e;
}

Guard guard(std::size_t var, GuardKind kind, LinearExpr rhs) { return Guard{var, kind, std::move(rhs)}; }

Rule rule(const ThresholdAutomaton& ta, std::string id, const std::string& from, const std::string& to) {
    Rule r;
    r.id = std::move(id);
    r.from = *ta.location_index(from);
    r.to = *ta.location_index(to);
    r.update.assign(ta.shared.size(), 0);
    return r;
}

void bump(const ThresholdAutomaton& ta, Rule& r, const std::string& var) { r.update[*ta.shared_index(var)] = 1; }

bool eval_literal(int lit, std::uint64_t assignment) {
    bool v = (assignment >> (std::abs(lit) - 1)) & 1U;
    return lit > 0 ? v : !v;
}

}  // namespace

Cnf3 parse_dimacs(const std::string& text) {
    auto lines = tokenize_lines(text);
    if (lines.empty()) throw ParseError("missing 'p cnf' header", 1, 1);
    const auto& h = lines[0];
    if (h.words.size() != 4 || h.words[0] != "p" || h.words[1] != "cnf")
        throw ParseError("expected 'p cnf <vars> <clauses>'", h.number, 1);
    long vars = parse_int(h.words[2], h.number);
    long clauses = parse_int(h.words[3], h.number);
    if (vars < 0 || clauses < 0) throw ParseError("negative count in header", h.number, 1);
    Cnf3 f;
    f.num_vars = static_cast<std::size_t>(vars);
    f.clauses = read_groups(lines, 1, f.num_vars, "clause");
    if (f.clauses.size() != static_cast<std::size_t>(clauses))
        throw ParseError("header declares " + std::to_string(clauses) + " clauses, found " + std::to_string(f.clauses.size()));
    return f;
}

Cnf3 load_dimacs(const std::string& path) { return parse_dimacs(slurp(path)); }

std::string print_dimacs(const Cnf3& f) {
    std::string s = "p cnf " + std::to_string(f.num_vars) + " " + std::to_string(f.clauses.size()) + "\n";
    for (const auto& c : f.clauses) {
        for (int l : c) s += std::to_string(l) + " ";
        s += "0\n";
    }
    return s;
}

ThresholdAutomaton gen_3sat(const Cnf3& f, SatVariant variant) {
    if (f.num_vars == 0) throw std::invalid_argument("formula has no variables");
    const std::size_t n = f.num_vars;
    ThresholdAutomaton ta;
    ta.name = variant == SatVariant::Param ? "3sat" : "3sat_nonparam";
    ta.env.params = {"k"};
    ta.env.size_fn = to_affine(parse_linear_expr("k", ta.env.params, {}));
    for (std::size_t i = 1; i <= n; ++i) ta.locations.push_back("l_" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) ta.locations.push_back("top_" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) ta.locations.push_back("bot_" + std::to_string(i));
    ta.locations.push_back("l_mid");
    ta.locations.push_back("l_F");
    for (std::size_t i = 0; i < n; ++i) ta.initial.push_back(i);
    for (std::size_t i = 1; i <= n; ++i) ta.shared.push_back("y_" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) ta.shared.push_back("ybar_" + std::to_string(i));
    for (std::size_t j = 1; j <= f.clauses.size(); ++j) ta.shared.push_back("c_" + std::to_string(j));

    for (std::size_t i = 1; i <= n; ++i) {
        auto s = std::to_string(i);
        Rule pos = rule(ta, "set_" + s, "l_" + s, "top_" + s);
        Rule neg = rule(ta, "unset_" + s, "l_" + s, "bot_" + s);
        if (variant == SatVariant::Param) {
            pos.guards.push_back(guard(*ta.shared_index("ybar_" + s), GuardKind::Fall, constant_expr(1, 1)));
            bump(ta, pos, "y_" + s);
            neg.guards.push_back(guard(*ta.shared_index("y_" + s), GuardKind::Fall, constant_expr(1, 1)));
            bump(ta, neg, "ybar_" + s);
        }
        ta.rules.push_back(std::move(pos));
        ta.rules.push_back(std::move(neg));
    }
    for (std::size_t i = 1; i <= n; ++i) {
        auto s = std::to_string(i);
        Rule t = rule(ta, "top_" + s + "_mid", "top_" + s, "l_mid");
        Rule b = rule(ta, "bot_" + s + "_mid", "bot_" + s, "l_mid");
        for (std::size_t j = 0; j < f.clauses.size(); ++j) {
            const auto& c = f.clauses[j];
            auto cj = "c_" + std::to_string(j + 1);
            if (std::find(c.begin(), c.end(), static_cast<int>(i)) != c.end()) bump(ta, t, cj);
            if (std::find(c.begin(), c.end(), -static_cast<int>(i)) != c.end()) bump(ta, b, cj);
        }
        ta.rules.push_back(std::move(t));
        ta.rules.push_back(std::move(b));
    }
    Rule fin = rule(ta, "final", "l_mid", "l_F");
    for (std::size_t j = 1; j <= f.clauses.size(); ++j)
        fin.guards.push_back(guard(*ta.shared_index("c_" + std::to_string(j)), GuardKind::Rise, constant_expr(1, 1)));
    ta.rules.push_back(std::move(fin));
    return ta;
}

Configuration nonparam_initial(const ThresholdAutomaton& ta, const Cnf3& f) {
    Configuration c;
    c.counters.assign(ta.locations.size(), 0);
    for (std::size_t i = 0; i < f.num_vars; ++i) c.counters[i] = 1;
    c.globals.assign(ta.shared.size(), 0);
    c.params = {static_cast<std::int64_t>(f.num_vars)};
    return c;
}

bool brute_sat(const Cnf3& f) {
    if (f.num_vars > 20) throw TooLarge("brute force is limited to 20 variables");
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << f.num_vars); ++a) {
        bool all = std::all_of(f.clauses.begin(), f.clauses.end(), [&](const std::vector<int>& c) {
            return std::any_of(c.begin(), c.end(), [&](int l) { return eval_literal(l, a); });
        });
        if (all) return true;
    }
    return false;
}

Sigma2Instance parse_sigma2(const std::string& text) {
    auto lines = tokenize_lines(text);
    if (lines.empty()) throw ParseError("missing 'p dnf' header", 1, 1);
    const auto& h = lines[0];
    if (h.words.size() != 4 || h.words[0] != "p" || h.words[1] != "dnf")
        throw ParseError("expected 'p dnf <vars> <terms>'", h.number, 1);
    long vars = parse_int(h.words[2], h.number);
    long terms = parse_int(h.words[3], h.number);
    if (vars < 0 || terms < 0) throw ParseError("negative count in header", h.number, 1);
    std::vector<char> quant(static_cast<std::size_t>(vars) + 1, 'e');
    std::size_t i = 1;
    for (; i < lines.size() && (lines[i].words[0] == "e" || lines[i].words[0] == "a"); ++i) {
        const auto& ln = lines[i];
        if (ln.words.back() != "0") throw ParseError("quantifier line is not 0-terminated", ln.number, 0);
        for (std::size_t k = 1; k + 1 < ln.words.size(); ++k) {
            long v = parse_int(ln.words[k], ln.number);
            if (v <= 0 || v > vars) throw ParseError("bad variable " + ln.words[k] + " in quantifier line", ln.number, 0);
            quant[static_cast<std::size_t>(v)] = ln.words[0][0];
        }
    }
    auto raw = read_groups(lines, i, static_cast<std::size_t>(vars), "term");
    if (raw.size() != static_cast<std::size_t>(terms))
        throw ParseError("header declares " + std::to_string(terms) + " terms, found " + std::to_string(raw.size()));
    std::vector<int> renumber(quant.size(), 0);
    Sigma2Instance q;
    for (std::size_t v = 1; v < quant.size(); ++v)
        if (quant[v] == 'e') renumber[v] = static_cast<int>(++q.exists_vars);
    for (std::size_t v = 1; v < quant.size(); ++v)
        if (quant[v] == 'a') renumber[v] = static_cast<int>(q.exists_vars + ++q.forall_vars);
    for (auto& t : raw) {
        for (auto& l : t) l = l > 0 ? renumber[l] : -renumber[-l];
        q.dnf.push_back(t);
    }
    return q;
}

Sigma2Instance load_sigma2(const std::string& path) { return parse_sigma2(slurp(path)); }

std::string print_sigma2(const Sigma2Instance& q) {
    std::string s = "p dnf " + std::to_string(q.exists_vars + q.forall_vars) + " " + std::to_string(q.dnf.size()) + "\n";
    if (q.exists_vars) {
        s += "e";
        for (std::size_t v = 1; v <= q.exists_vars; ++v) s += " " + std::to_string(v);
        s += " 0\n";
    }
    if (q.forall_vars) {
        s += "a";
        for (std::size_t v = q.exists_vars + 1; v <= q.exists_vars + q.forall_vars; ++v) s += " " + std::to_string(v);
        s += " 0\n";
    }
    for (const auto& t : q.dnf) {
        for (int l : t) s += std::to_string(l) + " ";
        s += "0\n";
    }
    return s;
}

Sigma2Reduction gen_sigma2(const Sigma2Instance& q) {
    const std::size_t m = q.exists_vars, k = q.forall_vars;
    Sigma2Reduction out;
    ThresholdAutomaton& ta = out.sketch;
    ta.name = "sigma2";
    ta.env.params = {"n"};
    ta.env.resilience.push_back(parse_constraint("n >= 1", ta.env.params));
    ta.env.size_fn = to_affine(parse_linear_expr("n", ta.env.params, {}));
    for (std::size_t i = 0; i <= m; ++i) ta.locations.push_back("lx" + std::to_string(i));
    for (std::size_t i = 0; i <= k; ++i) ta.locations.push_back("ly" + std::to_string(i));
    for (std::size_t i = 1; i <= k; ++i) {
        ta.locations.push_back("lz" + std::to_string(i));
        ta.locations.push_back("lzbar" + std::to_string(i));
    }
    ta.locations.push_back("lF");
    ta.initial = {0};
    ta.shared.push_back("a");
    for (std::size_t i = 1; i <= m; ++i) {
        ta.shared.push_back("b" + std::to_string(i));
        ta.shared.push_back("bbar" + std::to_string(i));
    }
    for (std::size_t i = 1; i <= k; ++i) {
        ta.shared.push_back("c" + std::to_string(i));
        ta.shared.push_back("cbar" + std::to_string(i));
    }
    for (std::size_t i = 1; i <= m; ++i) ta.indeterminates.push_back("v" + std::to_string(i));

    const std::size_t a = *ta.shared_index("a");
    auto n_times = [&](const std::string& indet) {
        LinearExpr e = constant_expr(1, 0);
        e.coeffs[0] = indet.empty() ? Coefficient::constant(Rational(1)) : Coefficient::unknown(indet);
        return e;
    };
    for (std::size_t i = 1; i <= m; ++i) {
        auto s = std::to_string(i);
        auto prev = "lx" + std::to_string(i - 1), next = "lx" + s;
        Rule t = rule(ta, "xt" + s, prev, next);
        t.guards.push_back(guard(a, GuardKind::Fall, n_times("v" + s)));
        bump(ta, t, "b" + s);
        Rule f = rule(ta, "xf" + s, prev, next);
        f.guards.push_back(guard(a, GuardKind::Rise, n_times("v" + s)));
        bump(ta, f, "bbar" + s);
        ta.rules.push_back(std::move(t));
        ta.rules.push_back(std::move(f));
    }
    ta.rules.push_back(rule(ta, "xy", "lx" + std::to_string(m), "ly0"));
    for (std::size_t i = 1; i <= k; ++i) {
        auto s = std::to_string(i);
        auto prev = "ly" + std::to_string(i - 1);
        Rule t = rule(ta, "yt" + s, prev, "lz" + s);
        bump(ta, t, "c" + s);
        Rule f = rule(ta, "yf" + s, prev, "lzbar" + s);
        bump(ta, f, "cbar" + s);
        Rule tj = rule(ta, "zt" + s, "lz" + s, "ly" + s);
        tj.guards.push_back(guard(*ta.shared_index("c" + s), GuardKind::Rise, n_times("")));
        Rule fj = rule(ta, "zf" + s, "lzbar" + s, "ly" + s);
        fj.guards.push_back(guard(*ta.shared_index("cbar" + s), GuardKind::Rise, n_times("")));
        ta.rules.push_back(std::move(t));
        ta.rules.push_back(std::move(f));
        ta.rules.push_back(std::move(tj));
        ta.rules.push_back(std::move(fj));
    }
    const std::string last = "ly" + std::to_string(k);
    auto var_of = [&](int lit) {
        std::size_t v = static_cast<std::size_t>(std::abs(lit));
        std::string base = v <= m ? "b" + std::to_string(v) : "c" + std::to_string(v - m);
        return lit > 0 ? base : (v <= m ? "bbar" + std::to_string(v) : "cbar" + std::to_string(v - m));
    };
    std::vector<std::string> unlock;
    for (std::size_t d = 0; d < q.dnf.size(); ++d) {
        Rule r = rule(ta, "d" + std::to_string(d + 1), last, "lF");
        std::string conj = "(and";
        for (int lit : q.dnf[d]) {
            r.guards.push_back(guard(*ta.shared_index(var_of(lit)), GuardKind::Rise, constant_expr(1, 1)));
            conj += " (ge " + var_of(lit) + " 1)";
        }
        unlock.push_back(q.dnf[d].empty() ? "true" : conj + ")");
        ta.rules.push_back(std::move(r));
    }
    ta.rules.push_back(rule(ta, "sly", last, last));
    ta.rules.push_back(rule(ta, "slF", "lF", "lF"));

    std::string premise;
    if (unlock.size() == 1) {
        premise = unlock[0];
    } else if (!unlock.empty()) {
        premise = "(or";
        for (const auto& u : unlock) premise += " " + u;
        premise += ")";
    }
    // an empty disjunction never unlocks, so the first conjunct is trivially true
    out.spec_text = premise.empty() ? "(G (eq0 lF))"
                                    : "(and (F (G (imp " + premise + " (eq0 " + last + ")))) (G (eq0 lF)))";
    out.spec = parse_eltl(out.spec_text, ta);
    return out;
}

bool brute_sigma2(const Sigma2Instance& q) {
    if (q.exists_vars + q.forall_vars > 20) throw TooLarge("brute force is limited to 20 variables");
    auto holds = [&](std::uint64_t assignment) {
        return std::any_of(q.dnf.begin(), q.dnf.end(), [&](const std::vector<int>& t) {
            return std::all_of(t.begin(), t.end(), [&](int l) { return eval_literal(l, assignment); });
        });
    };
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << q.exists_vars); ++x) {
        bool all = true;
        for (std::uint64_t y = 0; y < (std::uint64_t{1} << q.forall_vars) && all; ++y)
            all = holds(x | (y << q.exists_vars));
        if (all) return true;
    }
    return false;
}

Cnf3 random_cnf(std::mt19937_64& rng, std::size_t max_vars, std::size_t max_clauses) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    Cnf3 f;
    f.num_vars = pick(1, max_vars);
    std::size_t m = pick(1, max_clauses);
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t len = pick(1, std::min<std::size_t>(3, f.num_vars));
        std::vector<int> vars(f.num_vars);
        for (std::size_t v = 0; v < f.num_vars; ++v) vars[v] = static_cast<int>(v + 1);
        std::shuffle(vars.begin(), vars.end(), rng);
        std::vector<int> c;
        for (std::size_t l = 0; l < len; ++l) c.push_back(pick(0, 1) ? vars[l] : -vars[l]);
        f.clauses.push_back(std::move(c));
    }
    return f;
}

Sigma2Instance random_sigma2(std::mt19937_64& rng, std::size_t max_exists, std::size_t max_forall,
                             std::size_t max_terms) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    Sigma2Instance q;
    q.exists_vars = pick(1, max_exists);
    q.forall_vars = pick(0, max_forall);
    const std::size_t total = q.exists_vars + q.forall_vars;
    std::size_t terms = pick(1, max_terms);
    for (std::size_t d = 0; d < terms; ++d) {
        std::size_t len = pick(1, std::min<std::size_t>(3, total));
        std::vector<int> t;
        for (std::size_t l = 0; l < len; ++l) {
            int v = static_cast<int>(pick(1, total));
            t.push_back(pick(0, 1) ? v : -v);
        }
        q.dnf.push_back(std::move(t));
    }
    return q;
}

}  // namespace tamc
