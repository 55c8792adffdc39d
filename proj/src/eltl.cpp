#include "tamc/eltl.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tamc/sexpr.hpp"

namespace tamc {

EltlFormula EltlFormula::atom(PropFormula p) {
    EltlFormula f;
    f.prop = std::move(p);
    return f;
}

EltlFormula EltlFormula::conj(std::vector<EltlFormula> kids) {
    EltlFormula f;
    f.kind = Kind::And;
    f.kids = std::move(kids);
    return f;
}

EltlFormula EltlFormula::eventually(EltlFormula k) {
    EltlFormula f;
    f.kind = Kind::F;
    f.kids.push_back(std::move(k));
    return f;
}

EltlFormula EltlFormula::always(EltlFormula k) {
    EltlFormula f;
    f.kind = Kind::G;
    f.kids.push_back(std::move(k));
    return f;
}

// ---------------------------------------------------------------- parsing

namespace {

[[noreturn]] void fail(const SExpr& e, const std::string& msg) { throw ParseError(msg, e.line, e.column); }

bool head_is(const SExpr& e, const char* name) {
    return e.is_list() && !e.items.empty() && e.items[0].is_atom && e.items[0].atom == name;
}

class SpecParser {
public:
    explicit SpecParser(const ThresholdAutomaton& ta) : ta_(ta) {}

    EltlFormula psi(const SExpr& e) {
        if (e.is_atom) {
            if (e.atom == "true") return EltlFormula::atom({});
            fail(e, "unexpected symbol '" + e.atom + "'");
        }
        if (e.items.empty() || !e.items[0].is_atom) fail(e, "expected an operator");
        const std::string& op = e.items[0].atom;
        if (op == "F" || op == "G") {
            if (e.items.size() != 2) fail(e, op + " takes one argument");
            auto k = psi(e.items[1]);
            return op == "F" ? EltlFormula::eventually(std::move(k)) : EltlFormula::always(std::move(k));
        }
        if (op == "and") {
            if (e.items.size() < 2) fail(e, "and needs arguments");
            std::vector<EltlFormula> kids;
            for (std::size_t i = 1; i < e.items.size(); ++i) kids.push_back(psi(e.items[i]));
            return kids.size() == 1 ? kids[0] : EltlFormula::conj(std::move(kids));
        }
        if (op == "imp") {
            if (e.items.size() != 3) fail(e, "imp takes a guard formula and a counter formula");
            PropFormula p;
            p.premise = gf(e.items[1]);
            p.conclusion = cf(e.items[2]);
            return EltlFormula::atom(std::move(p));
        }
        if (op == "eq0" || op == "ne0" || op == "not") return EltlFormula::atom({std::nullopt, cf(e)});
        if (op == "or" || op == "ge" || op == "lt")
            fail(e, "guard formula '" + op + "' is only allowed as the premise of imp");
        fail(e, "unknown operator '" + op + "'");
    }

private:
    std::vector<std::size_t> locations(const SExpr& e) {
        if (e.items.size() < 2) fail(e, "empty location set");
        std::vector<std::size_t> out;
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            const auto& it = e.items[i];
            if (!it.is_atom) fail(it, "expected a location name");
            auto l = ta_.location_index(it.atom);
            if (!l) fail(it, "unknown location '" + it.atom + "'");
            out.push_back(*l);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    CounterFormula cf(const SExpr& e) {
        CounterFormula c;
        if (e.is_atom) {
            if (e.atom == "true") return c;
            fail(e, "expected a counter formula");
        }
        if (head_is(e, "eq0")) {
            c.zero = locations(e);
        } else if (head_is(e, "ne0")) {
            c.nonzero.push_back(locations(e));
        } else if (head_is(e, "not")) {
            if (e.items.size() != 2 || !head_is(e.items[1], "eq0")) fail(e, "not applies only to (eq0 ...)");
            c.nonzero.push_back(locations(e.items[1]));
        } else if (head_is(e, "and")) {
            for (std::size_t i = 1; i < e.items.size(); ++i) {
                CounterFormula k = cf(e.items[i]);
                c.zero.insert(c.zero.end(), k.zero.begin(), k.zero.end());
                c.nonzero.insert(c.nonzero.end(), k.nonzero.begin(), k.nonzero.end());
            }
            std::sort(c.zero.begin(), c.zero.end());
            c.zero.erase(std::unique(c.zero.begin(), c.zero.end()), c.zero.end());
        } else {
            fail(e, "expected a counter formula");
        }
        return c;
    }

    GuardFormula gf(const SExpr& e) {
        GuardFormula g;
        if (e.is_atom) {
            if (e.atom == "true") return g;
            fail(e, "expected a guard formula");
        }
        if (head_is(e, "and") || head_is(e, "or")) {
            g.kind = head_is(e, "and") ? GuardFormula::Kind::And : GuardFormula::Kind::Or;
            if (e.items.size() < 2) fail(e, "empty guard formula");
            for (std::size_t i = 1; i < e.items.size(); ++i) g.children.push_back(gf(e.items[i]));
            return g;
        }
        if (head_is(e, "ge") || head_is(e, "lt")) {
            if (e.items.size() != 3 || !e.items[1].is_atom) fail(e, "expected (ge x expr) or (lt x expr)");
            auto x = ta_.shared_index(e.items[1].atom);
            if (!x) fail(e.items[1], "unknown shared variable '" + e.items[1].atom + "'");
            Guard raw;
            raw.var = *x;
            raw.kind = head_is(e, "ge") ? GuardKind::Rise : GuardKind::Fall;
            raw.rhs = expr(e.items[2]);
            g.kind = GuardFormula::Kind::Atom;
            g.atom = normalize_guard(raw);
            return g;
        }
        fail(e, "expected a guard formula");
    }

    LinearExpr zero_expr() const {
        LinearExpr x;
        x.constant = Coefficient::constant(Rational(0));
        x.coeffs.assign(ta_.env.params.size(), Coefficient::constant(Rational(0)));
        return x;
    }

    static void add_scaled(LinearExpr& acc, const LinearExpr& e, const Rational& k) {
        acc.constant.value = acc.constant.value + e.constant.value * k;
        for (std::size_t i = 0; i < acc.coeffs.size(); ++i) acc.coeffs[i].value = acc.coeffs[i].value + e.coeffs[i].value * k;
    }

    LinearExpr expr(const SExpr& e) {
        LinearExpr out = zero_expr();
        if (e.is_atom) {
            if (auto p = ta_.param_index(e.atom)) {
                out.coeffs[*p].value = Rational(1);
                return out;
            }
            try {
                out.constant.value = Rational::parse(e.atom);
            } catch (const std::exception&) {
                fail(e, "expected a number or parameter, got '" + e.atom + "'");
            }
            return out;
        }
        if (e.items.size() < 2 || !e.items[0].is_atom) fail(e, "malformed arithmetic expression");
        const std::string& op = e.items[0].atom;
        if (op == "+") {
            for (std::size_t i = 1; i < e.items.size(); ++i) add_scaled(out, expr(e.items[i]), Rational(1));
        } else if (op == "-") {
            if (e.items.size() == 2) {
                add_scaled(out, expr(e.items[1]), Rational(-1));
            } else {
                add_scaled(out, expr(e.items[1]), Rational(1));
                for (std::size_t i = 2; i < e.items.size(); ++i) add_scaled(out, expr(e.items[i]), Rational(-1));
            }
        } else if (op == "*") {
            if (e.items.size() != 3) fail(e, "* takes a constant and an expression");
            LinearExpr k = expr(e.items[1]);
            for (const auto& c : k.coeffs)
                if (c.value != Rational(0)) fail(e.items[1], "the first factor of * must be a constant");
            add_scaled(out, expr(e.items[2]), k.constant.value);
        } else {
            fail(e, "unknown arithmetic operator '" + op + "'");
        }
        return out;
    }

    const ThresholdAutomaton& ta_;
};

std::string format_rational(const Rational& r) { return r.str(); }

// (c + sum a_i p_i) / D as an s-expression
std::string format_rhs(const IntegerGuard& g, const ThresholdAutomaton& ta) {
    std::vector<std::string> terms;
    Rational c(g.constant, g.scale);
    if (c != Rational(0)) terms.push_back(format_rational(c));
    for (std::size_t i = 0; i < g.coeffs.size(); ++i) {
        if (g.coeffs[i] == 0) continue;
        Rational a(g.coeffs[i], g.scale);
        terms.push_back(a == Rational(1) ? ta.env.params[i] : "(* " + format_rational(a) + " " + ta.env.params[i] + ")");
    }
    if (terms.empty()) return "0";
    if (terms.size() == 1) return terms[0];
    std::string s = "(+";
    for (const auto& t : terms) s += " " + t;
    return s + ")";
}

std::string format_gf(const GuardFormula& g, const ThresholdAutomaton& ta) {
    switch (g.kind) {
        case GuardFormula::Kind::True: return "true";
        case GuardFormula::Kind::Atom:
            return std::string(g.atom.kind == GuardKind::Rise ? "(ge " : "(lt ") + ta.shared[g.atom.var] + " " +
                   format_rhs(g.atom, ta) + ")";
        case GuardFormula::Kind::And:
        case GuardFormula::Kind::Or: {
            std::string s = g.kind == GuardFormula::Kind::And ? "(and" : "(or";
            for (const auto& c : g.children) s += " " + format_gf(c, ta);
            return s + ")";
        }
    }
    return "true";
}

std::string format_cf(const CounterFormula& c, const ThresholdAutomaton& ta) {
    std::vector<std::string> parts;
    auto set = [&](const char* op, const std::vector<std::size_t>& locs) {
        std::string s = std::string("(") + op;
        for (auto l : locs) s += " " + ta.locations[l];
        return s + ")";
    };
    if (!c.zero.empty()) parts.push_back(set("eq0", c.zero));
    for (const auto& s : c.nonzero) parts.push_back(set("ne0", s));
    if (parts.empty()) return "true";
    if (parts.size() == 1) return parts[0];
    std::string s = "(and";
    for (const auto& p : parts) s += " " + p;
    return s + ")";
}

std::string format_pf(const PropFormula& p, const ThresholdAutomaton& ta) {
    if (!p.premise) return format_cf(p.conclusion, ta);
    return "(imp " + format_gf(*p.premise, ta) + " " + format_cf(p.conclusion, ta) + ")";
}

}  // namespace

EltlFormula parse_eltl(const std::string& text, const ThresholdAutomaton& ta) {
    std::vector<SExpr> top;
    try {
        top = parse_sexprs(text);
    } catch (const SExprError& e) {
        throw ParseError(e.what(), e.line, e.column);
    }
    if (top.empty()) throw ParseError("empty specification", 1, 1);
    SpecParser p(ta);
    std::vector<EltlFormula> kids;
    for (const auto& e : top) kids.push_back(p.psi(e));
    return kids.size() == 1 ? kids[0] : EltlFormula::conj(std::move(kids));
}

EltlFormula load_eltl(const std::string& path, const ThresholdAutomaton& ta) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_eltl(ss.str(), ta);
}

std::string print_eltl(const EltlFormula& f, const ThresholdAutomaton& ta) {
    switch (f.kind) {
        case EltlFormula::Kind::Prop: return format_pf(f.prop, ta);
        case EltlFormula::Kind::F: return "(F " + print_eltl(f.kids.at(0), ta) + ")";
        case EltlFormula::Kind::G: return "(G " + print_eltl(f.kids.at(0), ta) + ")";
        case EltlFormula::Kind::And: {
            std::string s = "(and";
            for (const auto& k : f.kids) s += " " + print_eltl(k, ta);
            return s + ")";
        }
    }
    return "true";
}

std::string print_props(const std::vector<PropFormula>& props, const ThresholdAutomaton& ta) {
    if (props.empty()) return "true";
    if (props.size() == 1) return format_pf(props[0], ta);
    std::string s = "(and";
    for (const auto& p : props) s += " " + format_pf(p, ta);
    return s + ")";
}

std::vector<IntegerGuard> spec_guards(const EltlFormula& f) {
    std::vector<IntegerGuard> out;
    std::function<void(const EltlFormula&)> walk = [&](const EltlFormula& g) {
        if (g.kind == EltlFormula::Kind::Prop && g.prop.premise) g.prop.premise->collect(out);
        for (const auto& k : g.kids) walk(k);
    };
    walk(f);
    return out;
}

// ---------------------------------------------------------------- normal form

std::vector<PropFormula> NormalForm::global() const { return always ? always->phi0 : std::vector<PropFormula>{}; }

namespace {

bool trivial(const NormalForm& n) { return n.phi0.empty() && n.eventualities.empty() && !n.always; }

NormalForm merge(NormalForm a, const NormalForm& b) {
    a.phi0.insert(a.phi0.end(), b.phi0.begin(), b.phi0.end());
    a.eventualities.insert(a.eventualities.end(), b.eventualities.begin(), b.eventualities.end());
    if (a.always && b.always) a.always = std::make_shared<const NormalForm>(merge(*a.always, *b.always));
    else if (b.always) a.always = b.always;
    return a;
}

// G(p and F e and G a) = G(p and F e and a)
NormalForm flatten(const NormalForm& n) {
    if (!n.always) return n;
    NormalForm head = n;
    head.always = nullptr;
    return merge(head, flatten(*n.always));
}

}  // namespace

NormalForm to_normal_form(const EltlFormula& f) {
    switch (f.kind) {
        case EltlFormula::Kind::Prop: {
            NormalForm n;
            if (!f.prop.is_true()) n.phi0.push_back(f.prop);
            return n;
        }
        case EltlFormula::Kind::And: {
            if (f.kids.empty()) throw NormalizationFailed("empty conjunction");
            NormalForm n;
            for (const auto& k : f.kids) n = merge(n, to_normal_form(k));
            return n;
        }
        case EltlFormula::Kind::F: {
            if (f.kids.size() != 1) throw NormalizationFailed("F with " + std::to_string(f.kids.size()) + " arguments");
            NormalForm inner = to_normal_form(f.kids[0]);
            NormalForm n;
            if (trivial(inner)) return n;
            // F(F a and F b) = F a and F b
            if (inner.phi0.empty() && !inner.always) return inner;
            n.eventualities.push_back(std::move(inner));
            return n;
        }
        case EltlFormula::Kind::G: {
            if (f.kids.size() != 1) throw NormalizationFailed("G with " + std::to_string(f.kids.size()) + " arguments");
            NormalForm inner = flatten(to_normal_form(f.kids[0]));
            NormalForm n;
            if (!trivial(inner)) n.always = std::make_shared<const NormalForm>(std::move(inner));
            return n;
        }
    }
    throw NormalizationFailed("unknown formula kind");
}

// ---------------------------------------------------------------- cut graph

std::size_t CutGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& s : succ) n += s.size();
    return n;
}

CutGraph cut_graph(const NormalForm& nf) {
    constexpr std::size_t kLoopSt = static_cast<std::size_t>(-1);
    constexpr std::size_t kLoopEnd = static_cast<std::size_t>(-2);
    CutGraph g;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    auto add_node = [&](CutGraph::NodeKind kind, const NormalForm* n, bool in_loop) {
        CutGraph::Node node;
        node.kind = kind;
        node.in_loop = in_loop;
        if (n) {
            node.local = n->phi0;
            node.global = n->global();
        }
        node.name = kind == CutGraph::NodeKind::Root ? "root" : "F" + std::to_string(g.nodes.size());
        g.nodes.push_back(std::move(node));
        return g.nodes.size() - 1;
    };
    std::function<void(const NormalForm&, std::size_t, bool)> children = [&](const NormalForm& n, std::size_t u, bool in_loop) {
        for (const auto& e : n.eventualities) {
            std::size_t v = add_node(CutGraph::NodeKind::Eventuality, &e, in_loop);
            if (in_loop) {
                edges.emplace_back(kLoopSt, v);
                edges.emplace_back(v, kLoopEnd);
            } else {
                edges.emplace_back(u, v);
                edges.emplace_back(v, kLoopSt);
            }
            children(e, v, in_loop);
        }
        if (!n.always) return;
        for (const auto& e : n.always->eventualities) {
            std::size_t v = add_node(CutGraph::NodeKind::Eventuality, &e, true);
            edges.emplace_back(kLoopSt, v);
            edges.emplace_back(v, kLoopEnd);
            children(e, v, true);
        }
    };
    std::size_t root = add_node(CutGraph::NodeKind::Root, &nf, false);
    children(nf, root, false);
    g.loop_st = add_node(CutGraph::NodeKind::LoopStart, nullptr, true);
    g.nodes[g.loop_st].name = "loop_st";
    g.loop_end = add_node(CutGraph::NodeKind::LoopEnd, nullptr, true);
    g.nodes[g.loop_end].name = "loop_end";
    edges.emplace_back(root, kLoopSt);
    edges.emplace_back(kLoopSt, kLoopEnd);

    g.succ.assign(g.nodes.size(), {});
    auto resolve = [&](std::size_t v) { return v == kLoopSt ? g.loop_st : v == kLoopEnd ? g.loop_end : v; };
    for (auto [a, b] : edges) {
        auto& s = g.succ[resolve(a)];
        if (std::find(s.begin(), s.end(), resolve(b)) == s.end()) s.push_back(resolve(b));
    }
    for (auto& s : g.succ) std::sort(s.begin(), s.end());
    return g;
}

std::size_t for_each_topo_order(const CutGraph& g, const std::function<bool(const std::vector<std::size_t>&)>& visit) {
    const std::size_t n = g.nodes.size();
    std::vector<std::size_t> indeg(n, 0);
    for (const auto& s : g.succ)
        for (auto v : s) ++indeg[v];
    std::vector<std::size_t> order;
    std::vector<bool> used(n, false);
    std::size_t count = 0;
    bool stop = false;
    std::function<void()> rec = [&]() {
        if (stop) return;
        if (order.size() == n) {
            ++count;
            if (!visit(order)) stop = true;
            return;
        }
        for (std::size_t v = 0; v < n && !stop; ++v) {
            if (used[v] || indeg[v] != 0) continue;
            used[v] = true;
            order.push_back(v);
            for (auto w : g.succ[v]) --indeg[w];
            rec();
            for (auto w : g.succ[v]) ++indeg[w];
            order.pop_back();
            used[v] = false;
        }
    };
    rec();
    return count;
}

std::size_t count_topo_orders(const CutGraph& g) {
    return for_each_topo_order(g, [](const std::vector<std::size_t>&) { return true; });
}

// ---------------------------------------------------------------- encoding

namespace {

Formula gf_holds(ReachEncoder& enc, const GuardFormula& g, const SymbolicConfig& s) {
    switch (g.kind) {
        case GuardFormula::Kind::True: return f_true();
        case GuardFormula::Kind::Atom: return enc.guard_holds(g.atom, s);
        case GuardFormula::Kind::And:
        case GuardFormula::Kind::Or: {
            std::vector<Formula> fs;
            for (const auto& c : g.children) fs.push_back(gf_holds(enc, c, s));
            return g.kind == GuardFormula::Kind::And ? conj(std::move(fs)) : disj(std::move(fs));
        }
    }
    return f_true();
}

Formula some_positive(const SymbolicConfig& s, const std::vector<std::size_t>& locs) {
    std::vector<Formula> fs;
    for (auto l : locs) fs.push_back(gt(LinTerm::var(s.counters.at(l)), 0));
    return disj(std::move(fs));
}

Formula cf_at(ReachEncoder& enc, const CounterFormula& c, const SymbolicConfig& s) {
    std::vector<Formula> fs{enc.zero(s, c.zero)};
    for (const auto& set : c.nonzero) fs.push_back(some_positive(s, set));
    return conj(std::move(fs));
}

// The per-block strengthening: endpoints satisfy c and nothing enters the zero set.
Formula cf_block(ReachEncoder& enc, const CounterFormula& c, const SymbolicConfig& s, const SymbolicConfig& t,
                 const SteadyCounts& x) {
    std::vector<Formula> fs{cf_at(enc, c, s), cf_at(enc, c, t)};
    const auto& rules = enc.ta().rules;
    for (std::size_t r = 0; r < rules.size(); ++r)
        if (std::binary_search(c.zero.begin(), c.zero.end(), rules[r].to)) fs.push_back(eq(LinTerm::var(x.counts[r]), 0));
    return conj(std::move(fs));
}

}  // namespace

Formula props_hold(ReachEncoder& enc, const std::vector<PropFormula>& props, const SymbolicConfig& s) {
    std::vector<Formula> fs;
    for (const auto& p : props) {
        Formula c = cf_at(enc, p.conclusion, s);
        fs.push_back(p.premise ? implies(gf_holds(enc, *p.premise, s), c) : c);
    }
    return conj(std::move(fs));
}

ReachEncoding phi_prop(ReachEncoder& enc, const std::vector<PropFormula>& props, const SymbolicConfig& s,
                       const SymbolicConfig& t, const std::string& prefix, ApplEncoding appl) {
    ReachOptions opts;
    opts.appl = appl;
    if (!props.empty()) {
        opts.block_hook = [&enc, props](const SymbolicConfig& a, const SymbolicConfig& b, const SteadyCounts& x) {
            std::vector<Formula> fs;
            for (const auto& p : props) {
                Formula c = cf_block(enc, p.conclusion, a, b, x);
                // the context is fixed on a steady block, so the premise is read at its start
                fs.push_back(p.premise ? implies(gf_holds(enc, *p.premise, a), c) : c);
            }
            return conj(std::move(fs));
        };
    }
    return enc.phi_reach(s, t, prefix, opts);
}

LassoObligations obligations(const CutGraph& g, const std::vector<std::size_t>& order) {
    LassoObligations ob;
    const std::size_t l = order.size() - 1;
    ob.local.resize(order.size());
    ob.global.resize(l);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] == g.loop_st) ob.c = i;
        if (order[i] != g.loop_st && order[i] != g.loop_end) ob.local[i] = g.nodes[order[i]].local;
    }
    std::vector<PropFormula> acc;
    for (std::size_t i = 0; i < l; ++i) {
        const auto& gl = g.nodes[order[i]].global;
        acc.insert(acc.end(), gl.begin(), gl.end());
        if (i < ob.c) ob.global[i] = acc;
    }
    for (std::size_t i = ob.c; i < l; ++i) ob.global[i] = acc;
    return ob;
}

LiveEncoding phi_live(ReachEncoder& enc, const CutGraph& g, const std::vector<std::size_t>& order, ApplEncoding appl) {
    const auto& ta = enc.ta();
    LassoObligations ob = obligations(g, order);
    const std::size_t l = order.size() - 1;
    LiveEncoding live;
    live.c = ob.c;
    live.milestones.push_back(enc.make_config("eta0"));
    for (std::size_t i = 1; i <= l; ++i) live.milestones.push_back(enc.make_config("eta" + std::to_string(i), &live.milestones[0].params));

    std::vector<Formula> fs;
    // first condition: initial start, loop returns the counters
    fs.push_back(enc.initial(live.milestones[0]));
    fs.push_back(enc.admissible(live.milestones[0]));
    for (std::size_t k = 0; k < ta.locations.size(); ++k)
        fs.push_back(eq(LinTerm::var(live.milestones[ob.c].counters[k]), LinTerm::var(live.milestones[l].counters[k])));
    // second condition: local propositions at the milestones
    for (std::size_t i = 0; i <= l; ++i)
        if (i != ob.c && i != l) fs.push_back(props_hold(enc, ob.local[i], live.milestones[i]));
    // third and fourth conditions: every segment keeps the accumulated global propositions
    for (std::size_t i = 0; i < l; ++i) {
        live.segments.push_back(
            phi_prop(enc, ob.global[i], live.milestones[i], live.milestones[i + 1], "s" + std::to_string(i), appl));
        fs.push_back(live.segments.back().formula);
    }
    // loop totals per rule
    std::vector<LinTerm> loop(ta.rules.size());
    LinTerm all;
    for (std::size_t i = ob.c; i < l; ++i)
        for (std::size_t r = 0; r < ta.rules.size(); ++r) {
            loop[r] += LinTerm::var(live.segments[i].sums[r]);
            all += LinTerm::var(live.segments[i].sums[r]);
        }
    // fifth condition: no loop rule waits on a fall guard over a variable the loop increments
    for (std::size_t x = 0; x < ta.shared.size(); ++x) {
        std::vector<Formula> inc, fall;
        for (std::size_t r = 0; r < ta.rules.size(); ++r) {
            if (ta.rules[r].update[x] > 0) inc.push_back(gt(loop[r], 0));
            bool falls = std::any_of(ta.rules[r].guards.begin(), ta.rules[r].guards.end(),
                                     [&](const Guard& gd) { return gd.var == x && gd.kind == GuardKind::Fall; });
            if (falls) fall.push_back(eq(loop[r], 0));
        }
        if (!inc.empty() && !fall.empty()) fs.push_back(implies(disj(std::move(inc)), conj(std::move(fall))));
    }
    // the loop fires at least one rule
    fs.push_back(ge(all, 1));
    live.formula = conj(std::move(fs));
    return live;
}

// ---------------------------------------------------------------- witnesses

Schedule LassoWitness::stem() const { return Schedule(schedule.begin(), schedule.begin() + boundaries.at(c)); }

Schedule LassoWitness::loop() const { return Schedule(schedule.begin() + boundaries.at(c), schedule.end()); }

bool fall_guard_condition(const ThresholdAutomaton& ta, const Schedule& loop) {
    std::vector<bool> incremented(ta.shared.size(), false);
    for (auto r : loop)
        for (std::size_t x = 0; x < ta.shared.size(); ++x)
            if (ta.rules[r].update[x] > 0) incremented[x] = true;
    for (auto r : loop)
        for (const auto& gd : ta.rules[r].guards)
            if (gd.kind == GuardKind::Fall && incremented[gd.var]) return false;
    return true;
}

std::optional<std::string> lasso_defect(const Semantics& sem, const CutGraph& g, const LassoWitness& w) {
    const auto& ta = sem.ta();
    if (w.order.size() != g.nodes.size()) return "order does not cover the cut graph";
    LassoObligations ob = obligations(g, w.order);
    const std::size_t l = w.order.size() - 1;
    if (w.c != ob.c) return "loop start index does not match the order";
    if (w.milestones.size() != l + 1 || w.boundaries.size() != l + 1 || w.segment_counts.size() != l)
        return "witness has the wrong number of milestones";
    if (w.boundaries.front() != 0 || w.boundaries.back() != w.schedule.size()) return "schedule boundaries are inconsistent";
    for (std::size_t i = 0; i < l; ++i)
        if (w.boundaries[i] > w.boundaries[i + 1]) return "schedule boundaries decrease";
    const Configuration& start = w.milestones.front();
    if (!sem.is_valid(start)) return "start is not a valid configuration";
    if (!sem.is_initial(start)) return "start is not an initial configuration";

    Configuration cur = start;
    for (std::size_t i = 0; i < l; ++i) {
        if (!eval_props(cur, ob.global[i])) return "segment " + std::to_string(i) + " violates its global proposition at its start";
        std::vector<std::int64_t> fired(ta.rules.size(), 0);
        for (std::size_t k = w.boundaries[i]; k < w.boundaries[i + 1]; ++k) {
            std::size_t r = w.schedule[k];
            if (r >= ta.rules.size()) return "unknown rule index";
            if (!sem.enables(cur, r)) return "rule " + ta.rules[r].id + " is not enabled at schedule position " + std::to_string(k);
            sem.apply_in_place(cur, r);
            ++fired[r];
            if (!eval_props(cur, ob.global[i]))
                return "segment " + std::to_string(i) + " violates its global proposition after position " + std::to_string(k);
        }
        if (cur != w.milestones[i + 1]) return "segment " + std::to_string(i) + " does not end at its milestone";
        if (fired != w.segment_counts[i]) return "segment " + std::to_string(i) + " fires rules other than its counts";
    }
    for (std::size_t i = 0; i <= l; ++i)
        if (i != ob.c && i != l && !eval_props(w.milestones[i], ob.local[i]))
            return "milestone " + std::to_string(i) + " violates its local proposition";
    if (w.milestones[ob.c].counters != w.milestones[l].counters) return "loop does not return the counters";
    Schedule loop = w.loop();
    if (loop.empty()) return "loop is empty";
    if (!fall_guard_condition(ta, loop)) return "loop increments a variable that one of its fall guards reads";
    // a second iteration from the loop end
    Configuration again = w.milestones[l];
    for (auto r : loop) {
        if (!sem.enables(again, r)) return "rule " + ta.rules[r].id + " is not enabled in the second loop iteration";
        sem.apply_in_place(again, r);
    }
    if (again.counters != w.milestones[ob.c].counters) return "second loop iteration does not return the counters";
    return std::nullopt;
}

bool replay_lasso(const Semantics& sem, const CutGraph& g, const LassoWitness& w) {
    if (auto d = lasso_defect(sem, g, w)) throw CertificateInvalid(*d);
    return true;
}

nlohmann::json lasso_to_json(const Semantics& sem, const CutGraph& g, const LassoWitness& w) {
    const auto& ta = sem.ta();
    nlohmann::json j;
    nlohmann::json order = nlohmann::json::array();
    for (auto v : w.order) order.push_back(g.nodes[v].name);
    j["order"] = order;
    j["loop_start"] = w.c;
    j["lift"] = w.mu;
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : w.milestones) ms.push_back(sem.to_json(m));
    j["milestones"] = ms;
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& c : w.segment_counts) {
        nlohmann::json o = nlohmann::json::object();
        for (std::size_t r = 0; r < c.size(); ++r)
            if (c[r] != 0) o[ta.rules[r].id] = c[r];
        counts.push_back(o);
    }
    j["segment_counts"] = counts;
    j["boundaries"] = w.boundaries;
    j["stem"] = sem.schedule_ids(w.stem());
    j["loop"] = sem.schedule_ids(w.loop());
    return j;
}

LassoWitness lasso_from_json(const Semantics& sem, const CutGraph& g, const nlohmann::json& j) {
    const auto& ta = sem.ta();
    LassoWitness w;
    for (const auto& name : j.at("order")) {
        auto it = std::find_if(g.nodes.begin(), g.nodes.end(), [&](const CutGraph::Node& n) { return n.name == name.get<std::string>(); });
        if (it == g.nodes.end()) throw ParseError("unknown cut-graph node " + name.get<std::string>());
        w.order.push_back(static_cast<std::size_t>(it - g.nodes.begin()));
    }
    w.c = j.at("loop_start").get<std::size_t>();
    w.mu = j.at("lift").get<std::int64_t>();
    for (const auto& m : j.at("milestones")) w.milestones.push_back(sem.from_json(m));
    for (const auto& c : j.at("segment_counts")) {
        std::vector<std::int64_t> v(ta.rules.size(), 0);
        for (auto it = c.begin(); it != c.end(); ++it) {
            auto r = ta.rule_index(it.key());
            if (!r) throw ParseError("unknown rule " + it.key());
            v[*r] = it.value().get<std::int64_t>();
        }
        w.segment_counts.push_back(std::move(v));
    }
    w.boundaries = j.at("boundaries").get<std::vector<std::size_t>>();
    w.schedule = sem.parse_schedule(j.at("stem").get<std::vector<std::string>>());
    Schedule loop = sem.parse_schedule(j.at("loop").get<std::vector<std::string>>());
    w.schedule.insert(w.schedule.end(), loop.begin(), loop.end());
    return w;
}

// ---------------------------------------------------------------- checking

const char* to_string(CheckResult::Kind k) {
    switch (k) {
        case CheckResult::Kind::Holds: return "holds";
        case CheckResult::Kind::Violated: return "violated";
        case CheckResult::Kind::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

struct OrderOutcome {
    Verdict::Kind kind = Verdict::Kind::Unknown;
    std::optional<LassoWitness> witness;
    std::string reason;
};

LassoWitness build_lasso(const Semantics& sem, const ReachEncoder& enc, const LiveEncoding& live, const Model& m,
                         const std::vector<std::size_t>& order, std::int64_t mu) {
    LassoWitness w;
    w.order = order;
    w.c = live.c;
    w.mu = mu;
    w.boundaries.push_back(0);
    for (const auto& s : live.milestones) w.milestones.push_back(lift(enc.decode(s, m), mu));
    for (const auto& seg : live.segments) {
        ReachWitness rw = decode_witness(enc, seg, m);
        for (std::size_t b = 0; b < rw.steady.size(); ++b) {
            Schedule tau = realize_steady(sem, rw.points[2 * b], rw.steady[b]);
            for (std::int64_t k = 0; k < mu; ++k) w.schedule.insert(w.schedule.end(), tau.begin(), tau.end());
            if (b < rw.steps.size())
                for (std::size_t r = 0; r < rw.steps[b].size(); ++r)
                    for (std::int64_t k = 0; k < mu * rw.steps[b][r]; ++k) w.schedule.push_back(r);
        }
        std::vector<std::int64_t> counts(rw.sums);
        for (auto& c : counts) c *= mu;
        w.segment_counts.push_back(std::move(counts));
        w.boundaries.push_back(w.schedule.size());
    }
    return w;
}

OrderOutcome check_order(const ThresholdAutomaton& ta, const Semantics& sem, const CutGraph& g,
                         const std::vector<IntegerGuard>& extra, const std::vector<std::size_t>& order,
                         const SolverConfig& solver, const CheckOptions& options) {
    VarPool pool;
    ReachEncoder enc(ta, pool, extra);
    LiveEncoding live = phi_live(enc, g, order, options.appl);
    Verdict v = solve(pool, live.formula, solver);
    OrderOutcome out;
    out.kind = v.kind;
    out.reason = v.reason;
    if (!v.sat()) return out;
    std::string defects;
    for (auto mu : options.lift_factors) {
        LassoWitness w = build_lasso(sem, enc, live, v.model, order, mu);
        auto d = lasso_defect(sem, g, w);
        if (!d) {
            out.witness = std::move(w);
            return out;
        }
        defects += (defects.empty() ? "" : "; ") + std::string("lift ") + std::to_string(mu) + ": " + *d;
    }
    out.kind = Verdict::Kind::Unknown;
    out.reason = "satisfiable order without a certified lasso (" + defects + ")";
    return out;
}

}  // namespace

CheckResult check_spec(const ThresholdAutomaton& ta, const EltlFormula& spec, const SolverConfig& solver,
                       const CheckOptions& options) {
    if (ta.is_sketch()) throw std::invalid_argument("cannot model check a sketch; instantiate it first");
    Multiplicativity m = check_multiplicative(ta);
    if (m.kind != Multiplicativity::Kind::Yes && !options.assume_multiplicative)
        throw NotMultiplicative("environment is not known to be multiplicative (" + std::string(to_string(m.kind)) +
                                (m.reason.empty() ? "" : ": " + m.reason) + ")");
    Semantics sem(ta);
    CutGraph g = cut_graph(to_normal_form(spec));
    std::vector<IntegerGuard> extra = spec_guards(spec);
    const unsigned jobs = std::max(1u, options.jobs);

    CheckResult res;
    std::string unknown_reason;
    std::vector<std::vector<std::size_t>> batch;
    bool capped = false;
    auto flush = [&]() {
        std::vector<OrderOutcome> outs(batch.size());
        if (jobs == 1 || batch.size() == 1) {
            for (std::size_t i = 0; i < batch.size(); ++i) {
                outs[i] = check_order(ta, sem, g, extra, batch[i], solver, options);
                if (outs[i].witness) {
                    outs.resize(i + 1);
                    break;
                }
            }
        } else {
            std::vector<std::future<OrderOutcome>> fut;
            for (const auto& o : batch)
                fut.push_back(std::async(std::launch::async, [&, o] { return check_order(ta, sem, g, extra, o, solver, options); }));
            for (std::size_t i = 0; i < fut.size(); ++i) outs[i] = fut[i].get();
        }
        batch.clear();
        for (auto& o : outs) {
            ++res.orders_checked;
            if (o.witness) {
                res.kind = CheckResult::Kind::Violated;
                res.witness = std::move(o.witness);
                return false;
            }
            if (o.kind != Verdict::Kind::Unsat && unknown_reason.empty()) unknown_reason = o.reason;
        }
        return true;
    };
    bool going = true;
    for_each_topo_order(g, [&](const std::vector<std::size_t>& order) {
        if (options.max_orders && res.orders_checked + batch.size() >= options.max_orders) {
            capped = true;
            return false;
        }
        batch.push_back(order);
        if (batch.size() >= jobs) going = flush();
        return going;
    });
    if (going && !batch.empty()) going = flush();
    if (res.kind == CheckResult::Kind::Violated) return res;
    if (!unknown_reason.empty()) {
        res.kind = CheckResult::Kind::Unknown;
        res.reason = unknown_reason;
    } else if (capped) {
        res.kind = CheckResult::Kind::Unknown;
        res.reason = "order cap of " + std::to_string(options.max_orders) + " reached";
    } else {
        res.kind = CheckResult::Kind::Holds;
    }
    return res;
}

// ---------------------------------------------------------------- lasso semantics

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {  // b > 0
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

std::vector<bool> eval_word(const EltlFormula& f, const std::vector<Configuration>& word, std::size_t prefix) {
    const std::size_t n = word.size();
    std::vector<bool> out(n, false);
    switch (f.kind) {
        case EltlFormula::Kind::Prop:
            for (std::size_t i = 0; i < n; ++i) out[i] = eval_prop(word[i], f.prop);
            break;
        case EltlFormula::Kind::And: {
            out.assign(n, true);
            for (const auto& k : f.kids) {
                auto v = eval_word(k, word, prefix);
                for (std::size_t i = 0; i < n; ++i) out[i] = out[i] && v[i];
            }
            break;
        }
        case EltlFormula::Kind::F:
        case EltlFormula::Kind::G: {
            auto v = eval_word(f.kids.at(0), word, prefix);
            bool is_g = f.kind == EltlFormula::Kind::G;
            bool cyc = is_g;
            for (std::size_t i = prefix; i < n; ++i) cyc = is_g ? (cyc && v[i]) : (cyc || v[i]);
            for (std::size_t i = prefix; i < n; ++i) out[i] = cyc;
            bool next = cyc;
            for (std::size_t i = prefix; i-- > 0;) {
                next = is_g ? (v[i] && next) : (v[i] || next);
                out[i] = next;
            }
            break;
        }
    }
    return out;
}

}  // namespace

bool eval_on_lasso(const Semantics& sem, const EltlFormula& f, const Configuration& init, const Schedule& stem,
                   const Schedule& loop) {
    if (loop.empty()) throw std::invalid_argument("empty loop");
    std::vector<Configuration> word = sem.trace(init, stem);
    Configuration start = word.back();
    word.pop_back();
    std::vector<Configuration> q = sem.trace(start, loop);
    Configuration end = q.back();
    q.pop_back();
    if (end.counters != start.counters) throw std::invalid_argument("loop does not return the counters");
    std::vector<std::int64_t> delta(start.globals.size());
    for (std::size_t x = 0; x < delta.size(); ++x) delta[x] = end.globals[x] - start.globals[x];
    // iterations after which every spec guard has settled
    std::int64_t settle = 0;
    for (const auto& a : spec_guards(f)) {
        if (delta[a.var] == 0) continue;
        std::int64_t thr = a.threshold(start.params);
        for (const auto& c : q) settle = std::max(settle, ceil_div(thr - a.scale * c.globals[a.var], a.scale * delta[a.var]));
    }
    for (std::int64_t k = 0; k <= settle; ++k)
        for (auto c : q) {
            for (std::size_t x = 0; x < delta.size(); ++x) c.globals[x] += k * delta[x];
            word.push_back(std::move(c));
        }
    std::size_t prefix = word.size() - q.size();
    return eval_word(f, word, prefix).front();
}

std::optional<OracleLasso> oracle_lasso(const Semantics& sem, const EltlFormula& f, const ParamBounds& bounds,
                                        std::size_t stem_bound, std::size_t loop_bound, std::size_t max_states) {
    const auto& ta = sem.ta();
    std::size_t explored = 0;
    auto tick = [&]() {
        if (++explored > max_states) throw ResourceLimit("lasso oracle state cap of " + std::to_string(max_states) + " exceeded");
    };
    // distinct loops per loop start, keyed by the stutter-free configuration cycle
    std::unordered_map<Configuration, std::vector<Schedule>, ConfigurationHash> loop_cache;
    auto loops_from = [&](const Configuration& start) -> const std::vector<Schedule>& {
        auto it = loop_cache.find(start);
        if (it != loop_cache.end()) return it->second;
        std::vector<Schedule> found;
        std::set<std::vector<Configuration>> keys;
        Schedule cur;
        std::vector<Configuration> path{start};
        std::function<void()> rec = [&]() {
            if (!cur.empty() && path.back().counters == start.counters && fall_guard_condition(ta, cur)) {
                std::vector<Configuration> key;
                for (const auto& c : path)
                    if (key.empty() || key.back() != c) key.push_back(c);
                if (key.size() > 1 && key.back().counters == start.counters && key.back().globals == start.globals) key.pop_back();
                if (keys.insert(key).second) found.push_back(cur);
            }
            if (cur.size() >= loop_bound) return;
            for (std::size_t r = 0; r < ta.rules.size(); ++r) {
                if (!sem.enables(path.back(), r)) continue;
                tick();
                cur.push_back(r);
                path.push_back(sem.apply(path.back(), r));
                rec();
                path.pop_back();
                cur.pop_back();
            }
        };
        rec();
        return loop_cache.emplace(start, std::move(found)).first->second;
    };

    std::optional<OracleLasso> hit;
    for (const auto& init : initial_configurations(ta, bounds)) {
        Schedule stem;
        Configuration cur = init;
        std::function<bool()> rec = [&]() {
            for (const auto& loop : loops_from(cur))
                if (eval_on_lasso(sem, f, init, stem, loop)) {
                    hit = OracleLasso{init, stem, loop};
                    return true;
                }
            if (stem.size() >= stem_bound) return false;
            std::vector<Configuration> tried;
            for (std::size_t r = 0; r < ta.rules.size(); ++r) {
                if (!sem.enables(cur, r)) continue;
                Configuration next = sem.apply(cur, r);
                if (next == cur || std::find(tried.begin(), tried.end(), next) != tried.end()) continue;
                tried.push_back(next);
                tick();
                Configuration saved = cur;
                cur = next;
                stem.push_back(r);
                if (rec()) return true;
                stem.pop_back();
                cur = saved;
            }
            return false;
        };
        if (rec()) return hit;
    }
    return std::nullopt;
}

}  // namespace tamc
