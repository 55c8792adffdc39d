#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tamc/eltl.hpp"

using namespace tamc;
using tamc::testing::data_path;
using tamc::testing::make_config;
using tamc::testing::strb;

namespace {

// Five locations named after the propositions of a five-eventuality formula.
ThresholdAutomaton letters_ta() {
    return parse_ta(R"({
      "name": "letters", "parameters": ["n"], "resilience": [], "system_size": "n",
      "locations": ["a", "b", "c", "d", "e"], "initial": ["a"], "shared": ["x"],
      "rules": [{"id": "r", "from": "a", "to": "b", "guard": [], "update": {"x": 1}}]
    })").ta;
}

const char* kLassoFormula = "(F (and (ne0 a) (F (ne0 b)) (F (ne0 c)) (G (ne0 d)) (G (F (ne0 e)))))";

std::vector<std::string> names(const CutGraph& g, const std::vector<std::size_t>& order) {
    std::vector<std::string> out;
    for (auto v : order) out.push_back(g.nodes[v].name);
    return out;
}

std::size_t brute_force_orders(const CutGraph& g) {
    std::vector<std::size_t> perm(g.nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t count = 0;
    do {
        std::vector<std::size_t> pos(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) pos[perm[i]] = i;
        bool ok = true;
        for (std::size_t u = 0; u < g.succ.size() && ok; ++u)
            for (auto v : g.succ[u]) ok = ok && pos[u] < pos[v];
        count += ok;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return count;
}

SolverConfig solver() { return SolverConfig::from_env(); }

}  // namespace

TEST_CASE("spec parser") {
    auto ta = strb();
    SUBCASE("round trip") {
        for (const char* text : {"(eq0 l0 l2 l3)", "(G (eq0 l3))", "(F (ne0 l3))",
                                 "(and (eq0 l0) (F (and (ne0 l1) (G (F (eq0 l2))))))",
                                 "(G (imp (or (ge x (+ t 1)) (lt x (* 1/2 n))) (and (eq0 l0) (ne0 l1 l2))))"}) {
            auto f = parse_eltl(text, ta);
            CHECK(parse_eltl(print_eltl(f, ta), ta) == f);
        }
    }
    SUBCASE("top-level expressions form a conjunction") {
        auto f = parse_eltl("(eq0 l0) (G (eq0 l3))", ta);
        CHECK(f.kind == EltlFormula::Kind::And);
        CHECK(f.kids.size() == 2);
    }
    SUBCASE("not over eq0 is ne0") {
        CHECK(parse_eltl("(not (eq0 l1 l2))", ta) == parse_eltl("(ne0 l2 l1)", ta));
    }
    SUBCASE("guards are normalized") {
        auto f = parse_eltl("(imp (ge x (- n t)) (eq0 l2))", ta);
        const auto& g = f.prop.premise->atom;
        CHECK(g.kind == GuardKind::Rise);
        CHECK(g.coeffs == std::vector<std::int64_t>{1, -1, 0});
    }
    SUBCASE("errors carry positions") {
        try {
            parse_eltl("(and (eq0 l0)\n  (eq0 l9))", ta);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
            CHECK(e.column == 8);
        }
        CHECK_THROWS_AS(parse_eltl("(G (eq0 l0) (eq0 l1))", ta), ParseError);
        CHECK_THROWS_AS(parse_eltl("(ge x 1)", ta), ParseError);
        CHECK_THROWS_AS(parse_eltl("(imp (ge z 1) (eq0 l0))", ta), ParseError);
        CHECK_THROWS_AS(parse_eltl("(imp (ge x (* n t)) (eq0 l0))", ta), ParseError);
        CHECK_THROWS_AS(parse_eltl("", ta), ParseError);
        CHECK_THROWS_AS(parse_eltl("(eq0 l0", ta), ParseError);
    }
    SUBCASE("spec guards") {
        auto f = load_eltl(data_path("strb_unforg.eltl"), ta);
        CHECK(spec_guards(f).size() == 2);
    }
}

TEST_CASE("normal form") {
    auto ta = letters_ta();
    auto nf = [&](const char* text) { return to_normal_form(parse_eltl(text, ta)); };
    SUBCASE("propositions stay local") {
        auto n = nf("(and (eq0 a) (ne0 b))");
        CHECK(n.phi0.size() == 2);
        CHECK(n.eventualities.empty());
        CHECK_FALSE(n.always);
    }
    SUBCASE("nested F collapses") {
        auto n = nf("(F (F (ne0 a)))");
        REQUIRE(n.eventualities.size() == 1);
        CHECK(n.eventualities[0].phi0.size() == 1);
        CHECK(n.eventualities[0].eventualities.empty());
    }
    SUBCASE("nested G collapses") {
        auto n = nf("(G (and (eq0 a) (G (eq0 b))))");
        REQUIRE(n.always);
        CHECK(n.always->phi0.size() == 2);
        CHECK_FALSE(n.always->always);
    }
    SUBCASE("conjoined G merge") {
        auto n = nf("(and (G (eq0 a)) (G (F (ne0 b))))");
        REQUIRE(n.always);
        CHECK(n.always->phi0.size() == 1);
        CHECK(n.always->eventualities.size() == 1);
    }
    SUBCASE("true vanishes") {
        auto n = nf("(and true (F true) (G true))");
        CHECK(n.phi0.empty());
        CHECK(n.eventualities.empty());
        CHECK_FALSE(n.always);
    }
    SUBCASE("malformed trees are rejected") {
        EltlFormula bad;
        bad.kind = EltlFormula::Kind::F;
        CHECK_THROWS_AS(to_normal_form(bad), NormalizationFailed);
    }
}

TEST_CASE("cut graph of a five-eventuality formula") {
    auto ta = letters_ta();
    auto g = cut_graph(to_normal_form(parse_eltl(kLassoFormula, ta)));
    // a root with a true proposition in front of the six drawn nodes
    CHECK(g.nodes.size() == 7);
    CHECK(g.nodes[1].local.size() == 1);
    CHECK(g.nodes[1].global.size() == 1);
    CHECK(g.nodes[4].in_loop);
    CHECK(g.edge_count() == 10);
    std::vector<std::vector<std::string>> orders;
    for_each_topo_order(g, [&](const std::vector<std::size_t>& o) {
        orders.push_back(names(g, o));
        return true;
    });
    CHECK(orders.size() == 2);
    CHECK(orders.size() == brute_force_orders(g));
    std::vector<std::string> expected{"root", "F1", "F2", "F3", "loop_st", "F4", "loop_end"};
    CHECK(std::find(orders.begin(), orders.end(), expected) != orders.end());
    CHECK(orders[0] == expected);

    auto ob = obligations(g, {0, 1, 2, 3, 5, 4, 6});
    CHECK(ob.c == 4);
    CHECK(ob.global[0].empty());
    CHECK(ob.global[1].size() == 1);  // d from F1 onwards
    CHECK(ob.global[5].size() == 1);
    CHECK(ob.local[5].size() == 1);  // e inside the loop
}

TEST_CASE("cut graph shapes") {
    auto ta = letters_ta();
    auto graph = [&](const char* text) { return cut_graph(to_normal_form(parse_eltl(text, ta))); };
    SUBCASE("no eventualities") {
        auto g = graph("(and (eq0 a) (G (eq0 b)))");
        CHECK(g.nodes.size() == 3);
        CHECK(count_topo_orders(g) == 1);
    }
    SUBCASE("two top-level eventualities") {
        auto g = graph("(and (F (ne0 a)) (F (ne0 b)))");
        CHECK(g.nodes.size() == 5);
        CHECK(count_topo_orders(g) == 2);
        CHECK(brute_force_orders(g) == 2);
    }
    SUBCASE("eventualities under G live in the loop") {
        auto g = graph("(G (and (F (ne0 a)) (F (ne0 b)) (F (ne0 c))))");
        CHECK(count_topo_orders(g) == 6);
        CHECK(brute_force_orders(g) == 6);
    }
    SUBCASE("enumeration stops when asked") {
        auto g = graph("(G (and (F (ne0 a)) (F (ne0 b)) (F (ne0 c))))");
        std::size_t seen = 0;
        CHECK(for_each_topo_order(g, [&](const std::vector<std::size_t>&) { return ++seen < 2; }) == 2);
    }
}

TEST_CASE("phi_prop") {
    auto ta = strb();
    auto sv = solver();
    std::vector<std::int64_t> p{4, 1, 1};
    auto run = [&](const char* prop, const Configuration& from, const Configuration& to) {
        auto f = parse_eltl(prop, ta);
        VarPool pool;
        ReachEncoder enc(ta, pool, spec_guards(f));
        auto s = enc.make_config("s");
        auto t = enc.make_config("t", &s.params);
        auto e = phi_prop(enc, {f.prop}, s, t, "p");
        return solve(pool, conj({e.formula, enc.equals(s, from), enc.equals(t, to)}), sv).kind;
    };
    auto sigma0 = make_config(ta, {{"l1", 3}}, {}, p);
    SUBCASE("a path avoiding l3") {
        CHECK(run("(eq0 l3)", sigma0, make_config(ta, {{"l2", 3}}, {{"x", 3}}, p)) == Verdict::Kind::Sat);
        CHECK(run("(eq0 l3)", sigma0, make_config(ta, {{"l2", 2}, {"l3", 1}}, {{"x", 3}}, p)) == Verdict::Kind::Unsat);
    }
    SUBCASE("an endpoint violating the proposition") {
        CHECK(run("(eq0 l1)", sigma0, make_config(ta, {{"l2", 3}}, {{"x", 3}}, p)) == Verdict::Kind::Unsat);
    }
    SUBCASE("a nonempty set") {
        CHECK(run("(ne0 l1 l2)", sigma0, make_config(ta, {{"l3", 3}}, {{"x", 3}}, p)) == Verdict::Kind::Unsat);
        CHECK(run("(ne0 l1 l2)", sigma0, make_config(ta, {{"l2", 1}, {"l3", 2}}, {{"x", 3}}, p)) == Verdict::Kind::Sat);
    }
    SUBCASE("a guarded proposition") {
        // l2 must be empty once x >= n - t; two processes cannot reach l3 before the third leaves l1
        CHECK(run("(imp (ge x (- n t)) (eq0 l2))", sigma0, make_config(ta, {{"l3", 3}}, {{"x", 3}}, p)) ==
              Verdict::Kind::Unsat);
        CHECK(run("(imp (ge x (- n t)) (eq0 l2))", sigma0, make_config(ta, {{"l1", 1}, {"l2", 2}}, {{"x", 2}}, p)) ==
              Verdict::Kind::Sat);
    }
}

TEST_CASE("lasso evaluation") {
    auto ta = strb();
    Semantics sem(ta);
    auto init = make_config(ta, {{"l1", 3}}, {}, {4, 1, 1});
    auto sched = [&](std::vector<std::string> ids) { return sem.parse_schedule(ids); };
    auto f = [&](const char* text) { return parse_eltl(text, ta); };
    auto loop3 = sched({"sl3"});
    auto all = sched({"r1", "r1", "r1", "r3", "r3", "r3"});
    CHECK(eval_on_lasso(sem, f("(F (ne0 l3))"), init, all, loop3));
    CHECK(eval_on_lasso(sem, f("(F (G (eq0 l0 l1 l2)))"), init, all, loop3));
    CHECK_FALSE(eval_on_lasso(sem, f("(G (eq0 l3))"), init, all, loop3));
    CHECK_FALSE(eval_on_lasso(sem, f("(G (F (ne0 l1)))"), init, all, loop3));
    CHECK(eval_on_lasso(sem, f("(and (eq0 l0 l2 l3) (F (ne0 l2)))"), init, all, loop3));
    // a process parked in l2 forever
    auto stuck = sched({"r1", "r1", "r1", "r3", "r3"});
    CHECK(eval_on_lasso(sem, f("(G (F (ne0 l2)))"), init, stuck, sched({"sl2"})));
    CHECK_FALSE(eval_on_lasso(sem, f(R"((G (F (imp (ge x (- n t)) (eq0 l2)))))"), init, stuck, sched({"sl2"})));
    CHECK_THROWS(eval_on_lasso(sem, f("(F (ne0 l3))"), init, sched({"r1"}), sched({"r1"})));
}

TEST_CASE("lasso evaluation unrolls until guards settle") {
    auto ta = parse_ta(R"({
      "name": "pump", "parameters": ["n"], "resilience": [], "system_size": "n",
      "locations": ["a", "b"], "initial": ["a"], "shared": ["x"],
      "rules": [{"id": "inc", "from": "a", "to": "a", "guard": [], "update": {"x": 1}},
                {"id": "go", "from": "a", "to": "b", "guard": [], "update": {}}]
    })").ta;
    Semantics sem(ta);
    Configuration init{{1, 0}, {0}, {1}};
    auto f = parse_eltl("(F (G (imp (ge x 5) (ne0 b))))", ta);
    CHECK_FALSE(eval_on_lasso(sem, f, init, {}, sem.parse_schedule({"inc"})));
    auto g = parse_eltl("(F (imp (ge x 5) (eq0 b)))", ta);
    CHECK(eval_on_lasso(sem, g, init, {}, sem.parse_schedule({"inc"})));
    auto h = parse_eltl("(G (imp (ge x 5) (ne0 b)))", ta);
    CHECK_FALSE(eval_on_lasso(sem, h, init, {}, sem.parse_schedule({"inc"})));
}

TEST_CASE("fall-guard condition") {
    auto ta = parse_ta(R"({
      "name": "fall", "parameters": ["n"], "resilience": [], "system_size": "n",
      "locations": ["a"], "initial": ["a"], "shared": ["x"],
      "rules": [{"id": "inc", "from": "a", "to": "a", "guard": [], "update": {"x": 1}},
                {"id": "low", "from": "a", "to": "a", "guard": ["x < n"], "update": {}}]
    })").ta;
    CHECK(fall_guard_condition(ta, {0}));
    CHECK(fall_guard_condition(ta, {1}));
    CHECK_FALSE(fall_guard_condition(ta, {0, 1}));
}

TEST_CASE("model checking strb") {
    auto sv = solver();
    auto ta = strb();
    Semantics sem(ta);
    SUBCASE("correctness under fairness holds") {
        auto spec = load_eltl(data_path("strb_unforg.eltl"), ta);
        auto res = check_spec(ta, spec, sv);
        CHECK(res.kind == CheckResult::Kind::Holds);
        CHECK(res.orders_checked == 1);
    }
    SUBCASE("reaching l3 is possible") {
        auto spec = load_eltl(data_path("strb_reach_l3.eltl"), ta);
        auto res = check_spec(ta, spec, sv);
        REQUIRE(res.kind == CheckResult::Kind::Violated);
        REQUIRE(res.witness);
        auto g = cut_graph(to_normal_form(spec));
        CHECK(replay_lasso(sem, g, *res.witness));
        CHECK(eval_on_lasso(sem, spec, res.witness->milestones[0], res.witness->stem(), res.witness->loop()));
        auto back = lasso_from_json(sem, g, lasso_to_json(sem, g, *res.witness));
        CHECK(back.schedule == res.witness->schedule);
        CHECK(back.milestones == res.witness->milestones);
        CHECK(replay_lasso(sem, g, back));
    }
    SUBCASE("the weakened variant violates correctness") {
        auto weak = load_ta(data_path("strb_weak.ta.json"));
        Semantics wsem(weak);
        auto spec = load_eltl(data_path("strb_unforg.eltl"), weak);
        auto res = check_spec(weak, spec, sv);
        REQUIRE(res.kind == CheckResult::Kind::Violated);
        auto g = cut_graph(to_normal_form(spec));
        CHECK(replay_lasso(wsem, g, *res.witness));
        CHECK(eval_on_lasso(wsem, spec, res.witness->milestones[0], res.witness->stem(), res.witness->loop()));
        auto oracle = oracle_lasso(wsem, spec, ParamBounds{{0, 0, 0}, {3, 1, 2}}, 4, 2);
        CHECK(oracle.has_value());
    }
    SUBCASE("tampered certificates are rejected") {
        auto spec = load_eltl(data_path("strb_reach_l3.eltl"), ta);
        auto res = check_spec(ta, spec, sv);
        REQUIRE(res.witness);
        auto g = cut_graph(to_normal_form(spec));
        auto w = *res.witness;
        w.schedule.erase(w.schedule.begin());
        CHECK_THROWS_AS(replay_lasso(sem, g, w), CertificateInvalid);
        w = *res.witness;
        w.milestones[0].counters[0] += 1;
        CHECK_THROWS_AS(replay_lasso(sem, g, w), CertificateInvalid);
    }
    SUBCASE("order cap yields unknown") {
        auto letters = parse_eltl("(G (and (F (ne0 l1)) (F (ne0 l2))))", ta);
        CheckOptions opts;
        opts.max_orders = 1;
        auto res = check_spec(ta, parse_eltl("(and (eq0 l0 l2 l3) (G (eq0 l3 l2)) (G (F (eq0 l1))))", ta), sv, opts);
        CHECK(res.kind == CheckResult::Kind::Holds);  // a single order fits under the cap
        res = check_spec(ta, letters, sv, opts);
        CHECK(res.kind != CheckResult::Kind::Holds);
    }
    SUBCASE("parallel order dispatch gives the same verdict") {
        auto spec = parse_eltl("(and (eq0 l0 l2 l3) (G (and (F (ne0 l2)) (F (eq0 l1)) (F (ne0 l3)))))", ta);
        CheckOptions opts;
        opts.jobs = 4;
        auto par = check_spec(ta, spec, sv, opts);
        auto seq = check_spec(ta, spec, sv);
        CHECK(par.kind == seq.kind);
    }
}

TEST_CASE("multiplicativity is required") {
    auto ta = strb();
    ta.env.resilience.push_back(parse_constraint("n >= 1", ta.env.params));
    auto spec = parse_eltl("(F (ne0 l3))", ta);
    CHECK_THROWS_AS(check_spec(ta, spec, solver()), NotMultiplicative);
    CheckOptions opts;
    opts.assume_multiplicative = true;
    CHECK(check_spec(ta, spec, solver(), opts).kind == CheckResult::Kind::Violated);
}

TEST_CASE("strb correctness has no bounded fair counterexample") {
    auto ta = strb();
    Semantics sem(ta);
    auto spec = load_eltl(data_path("strb_unforg.eltl"), ta);
    auto hit = oracle_lasso(sem, spec, ParamBounds{{0, 0, 0}, {7, 2, 2}}, 8, 4);
    CHECK_FALSE(hit.has_value());
}

TEST_CASE("model checking agrees with the bounded lasso oracle") {
    std::mt19937_64 rng(77);
    auto sv = solver();
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto subset = [&](const ThresholdAutomaton& ta) {
        std::string s;
        for (const auto& l : ta.locations)
            if (pick(0, 1)) s += " " + l;
        return s.empty() ? " " + ta.locations[pick(0, int(ta.locations.size()) - 1)] : s;
    };
    int instances = 0, violated = 0;
    while (instances < 100) {
        auto ta = testing::random_multiplicative_ta(rng);
        REQUIRE(check_multiplicative(ta).kind == Multiplicativity::Kind::Yes);
        std::string text;
        switch (pick(0, 2)) {
            case 0: text = "(F (ne0" + subset(ta) + "))"; break;
            case 1: text = "(and (eq0" + subset(ta) + ") (G (eq0" + subset(ta) + ")))"; break;
            default: text = "(and (eq0" + subset(ta) + ") (F (ne0" + subset(ta) + ")) (F (eq0" + subset(ta) + ")))"; break;
        }
        auto spec = parse_eltl(text, ta);
        Semantics sem(ta);
        auto res = check_spec(ta, spec, sv);
        REQUIRE(res.kind != CheckResult::Kind::Unknown);
        auto oracle = oracle_lasso(sem, spec, ParamBounds::uniform(2, 0, 3), 6, 4);
        INFO(print_ta(ta));
        INFO(text);
        if (oracle) CHECK(res.kind == CheckResult::Kind::Violated);
        if (res.kind == CheckResult::Kind::Violated) {
            auto g = cut_graph(to_normal_form(spec));
            CHECK(replay_lasso(sem, g, *res.witness));
            CHECK(eval_on_lasso(sem, spec, res.witness->milestones[0], res.witness->stem(), res.witness->loop()));
            ++violated;
        }
        ++instances;
    }
    CHECK(violated > 10);
    CHECK(violated < instances);
}
