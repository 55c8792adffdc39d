#include <doctest.h>

#include "tamc/presburger.hpp"

using namespace tamc;

TEST_CASE("forced value") {
    VarPool pool;
    VarId x = pool.add("x", Sort::Integer);
    Formula f = conj(ge(LinTerm::var(x), 1), le(LinTerm::var(x), 1));
    Verdict v = solve(pool, f, SolverConfig::from_env());
    REQUIRE(v.sat());
    CHECK(v.model[x] == 1);
    CHECK(eval(f, v.model));
}

TEST_CASE("contradiction") {
    VarPool pool;
    VarId x = pool.add("x", Sort::Integer);
    Verdict v = solve(pool, conj(ge(LinTerm::var(x), 1), lt(LinTerm::var(x), 1)), SolverConfig::from_env());
    CHECK(v.unsat());
}

TEST_CASE("flow-style substitution") {
    VarPool pool;
    VarId r1 = pool.add("x_r1");
    VarId r3 = pool.add("x_r3");
    Formula f = conj(eq(LinTerm::var(r1) - LinTerm::var(r3), 2), eq(LinTerm::var(r3), 1));
    Verdict v = solve(pool, f, SolverConfig::from_env());
    REQUIRE(v.sat());
    CHECK(v.model[r1] == 3);
    CHECK(v.model[r3] == 1);
}

TEST_CASE("negative values and natural sorts") {
    VarPool pool;
    VarId a = pool.add("a", Sort::Integer);
    VarId b = pool.add("b");
    Formula f = conj(eq(LinTerm::var(a), -5), le(LinTerm::var(b), LinTerm::var(a) + 5));
    Verdict v = solve(pool, f, SolverConfig::from_env());
    REQUIRE(v.sat());
    CHECK(v.model[a] == -5);
    CHECK(v.model[b] == 0);
    CHECK(solve(pool, conj(f, ge(LinTerm::var(b), 1)), SolverConfig::from_env()).unsat());
}

TEST_CASE("script printing") {
    VarPool pool;
    VarId x = pool.add("x", Sort::Integer);
    VarId y = pool.add("y");
    std::string s = to_smtlib(pool, conj(ge(LinTerm::var(x, -3) + LinTerm::var(y), -2), gt(LinTerm::var(y), 0)), 7);
    CHECK(s ==
          "(set-option :produce-models true)\n"
          "(set-option :random-seed 7)\n"
          "(set-logic QF_LIA)\n"
          "(declare-fun x () Int)\n"
          "(declare-fun y () Int)\n"
          "(assert (>= y 0))\n"
          "(assert (>= (+ (* (- 3) x) y) (- 2)))\n"
          "(assert (> y 0))\n"
          "(check-sat)\n"
          "(get-value (x y))\n");
}

TEST_CASE("pool names are sanitized and unique") {
    VarPool pool;
    VarId a = pool.add("k l0");
    VarId b = pool.add("k_l0");
    CHECK(pool.name(a) == "k_l0");
    CHECK(pool.name(b) != pool.name(a));
    CHECK(pool.name(pool.add("1x")) == "v_1x");
}

TEST_CASE("constant folding and connectives") {
    CHECK(atom(3, Relation::Gt, 2)->kind == FormulaNode::Kind::True);
    CHECK(atom(3, Relation::Lt, 2)->kind == FormulaNode::Kind::False);
    CHECK(conj({f_true(), f_true()})->kind == FormulaNode::Kind::True);
    CHECK(disj({})->kind == FormulaNode::Kind::False);
    VarPool pool;
    VarId x = pool.add("x");
    Formula a = ge(LinTerm::var(x), 2);
    CHECK(print_formula(pool, negate(a)) == "(not (>= x 2))");
    CHECK(print_formula(pool, implies(a, f_false())) == "(not (>= x 2))");
    CHECK_THROWS(negate(conj(a, le(LinTerm::var(x), 5))));
    Model m(1);
    m.set(x, 2);
    CHECK(eval(a, m));
    CHECK_FALSE(eval(negate(a), m));
    CHECK(eval(implies(negate(a), f_false()), m));
    CHECK_THROWS_AS(eval(a, Model{}), MissingAssignment);
}

TEST_CASE("solver determinism") {
    VarPool pool;
    std::vector<VarId> vs;
    for (int i = 0; i < 6; ++i) vs.push_back(pool.add("v" + std::to_string(i)));
    Formula f = conj(ge(sum_of(vs), 17), le(LinTerm::var(vs[0]) - LinTerm::var(vs[5]), 3));
    auto cfg = SolverConfig::from_env();
    cfg.seed = 3;
    Verdict a = solve(pool, f, cfg);
    Verdict b = solve(pool, f, cfg);
    REQUIRE(a.sat());
    REQUIRE(b.sat());
    for (auto v : vs) CHECK(a.model[v] == b.model[v]);
}

TEST_CASE("missing solver") {
    VarPool pool;
    VarId x = pool.add("x");
    SolverConfig cfg;
    cfg.path = "/nonexistent/solver-binary";
    CHECK_THROWS_AS(solve(pool, ge(LinTerm::var(x), 1), cfg), SolverUnavailable);
    CHECK(solver_version(cfg) == "unavailable");
    CHECK(solver_version(SolverConfig::from_env()) != "unavailable");
}
