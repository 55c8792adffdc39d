#include <doctest.h>

#include <random>

#include "support.hpp"
#include "tamc/reach.hpp"

using namespace tamc;
using tamc::testing::make_config;
using tamc::testing::strb;

namespace {

struct Fixture {
    ThresholdAutomaton ta = strb();
    VarPool pool;
    ReachEncoder enc{ta, pool};
    SolverConfig solver = SolverConfig::from_env();

    std::size_t rule(const char* id) const { return *ta.rule_index(id); }

    Verdict check(const std::vector<Formula>& fs) { return solve(pool, conj(fs), solver); }

    Formula counts(const std::vector<VarId>& x, const std::map<std::string, std::int64_t>& values) {
        std::vector<Formula> fs;
        for (std::size_t r = 0; r < ta.rules.size(); ++r) {
            auto it = values.find(ta.rules[r].id);
            fs.push_back(eq(LinTerm::var(x[r]), it == values.end() ? 0 : it->second));
        }
        return conj(std::move(fs));
    }
};

}  // namespace

TEST_CASE("phi_base") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    CHECK(fx.check({fx.enc.phi_base(s, s)}).sat());

    auto t = fx.enc.make_config("t", &s.params);
    auto from = make_config(fx.ta, {{"l1", 3}}, {{"x", 0}}, {4, 1, 1});
    auto to = make_config(fx.ta, {{"l1", 2}, {"l2", 1}}, {{"x", 1}}, {4, 1, 1});
    CHECK(fx.check({fx.enc.phi_base(s, t), fx.enc.equals(s, from), fx.enc.equals(t, to)}).unsat());

    auto u = fx.enc.make_config("u");
    auto other = make_config(fx.ta, {{"l1", 4}}, {{"x", 0}}, {5, 1, 1});
    CHECK(fx.check({fx.enc.phi_base(s, u), fx.enc.equals(s, from), fx.enc.equals(u, other)}).unsat());
    CHECK(fx.check({fx.enc.phi_base(s, u), fx.enc.equals(s, from)}).sat());
}

TEST_CASE("phi_flow and phi_shared") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    auto t = fx.enc.make_config("t", &s.params);
    auto x = fx.enc.make_counts("x", false).counts;
    auto from = make_config(fx.ta, {{"l1", 3}}, {{"x", 0}}, {4, 1, 1});
    auto base = [&] { return std::vector<Formula>{fx.enc.phi_flow(s, t, x), fx.enc.phi_shared(s, t, x), fx.enc.equals(s, from)}; };

    SUBCASE("zero counts freeze the configuration") {
        auto fs = base();
        fs.push_back(fx.counts(x, {}));
        auto v = fx.check(fs);
        REQUIRE(v.sat());
        CHECK(fx.enc.decode(t, v.model) == from);
    }
    SUBCASE("counts shift counters and globals") {
        auto fs = base();
        fs.push_back(fx.counts(x, {{"r1", 3}, {"r3", 1}}));
        auto v = fx.check(fs);
        REQUIRE(v.sat());
        CHECK(fx.enc.decode(t, v.model) == make_config(fx.ta, {{"l2", 2}, {"l3", 1}}, {{"x", 3}}, {4, 1, 1}));
    }
    SUBCASE("self-loops cancel") {
        auto mid = make_config(fx.ta, {{"l2", 3}}, {{"x", 3}}, {4, 1, 1});
        std::vector<Formula> fs{fx.enc.phi_flow(s, t, x), fx.enc.phi_shared(s, t, x), fx.enc.equals(s, mid),
                                fx.counts(x, {{"sl2", 5}, {"sl1", 7}})};
        auto v = fx.check(fs);
        REQUIRE(v.sat());
        CHECK(fx.enc.decode(t, v.model) == mid);
    }
}

TEST_CASE("phi_enabled") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    auto x = fx.enc.make_counts("x", false).counts;
    auto at0 = make_config(fx.ta, {{"l0", 1}, {"l1", 2}}, {{"x", 0}}, {4, 1, 1});
    auto at1 = make_config(fx.ta, {{"l0", 1}, {"l1", 2}}, {{"x", 1}}, {4, 1, 1});
    CHECK(fx.check({fx.enc.phi_enabled(s, x), fx.enc.equals(s, at0), gt(LinTerm::var(x[fx.rule("r2")]), 0)}).unsat());
    CHECK(fx.check({fx.enc.phi_enabled(s, x), fx.enc.equals(s, at0), eq(LinTerm::var(x[fx.rule("r1")]), 4)}).sat());
    CHECK(fx.check({fx.enc.phi_enabled(s, x), fx.enc.equals(s, at1), eq(LinTerm::var(x[fx.rule("r2")]), 2)}).sat());
}

TEST_CASE("phi_appl") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    auto x = fx.enc.make_counts("x", true);
    auto r1 = fx.rule("r1"), r2 = fx.rule("r2"), r3 = fx.rule("r3");
    auto cfg = make_config(fx.ta, {{"l1", 3}}, {}, {4, 1, 1});

    auto v = fx.check({fx.enc.phi_appl(s, x), fx.enc.equals(s, cfg), gt(LinTerm::var(x.counts[r3]), 0),
                       gt(LinTerm::var(x.counts[r1]), 0)});
    REQUIRE(v.sat());
    CHECK(v.model[x.ranks[r1]] < v.model[x.ranks[r3]]);

    CHECK(fx.check({fx.enc.phi_appl(s, x), fx.enc.equals(s, cfg), gt(LinTerm::var(x.counts[r1]), 0)}).sat());
    CHECK(fx.check({fx.enc.phi_appl(s, x), fx.enc.equals(s, cfg), gt(LinTerm::var(x.counts[r2]), 0)}).unsat());
    CHECK(fx.check({fx.enc.phi_appl_chains(s, x.counts), fx.enc.equals(s, cfg), gt(LinTerm::var(x.counts[r2]), 0)}).unsat());
    CHECK(fx.check({fx.enc.phi_appl(s, x), fx.enc.equals(s, cfg), gt(LinTerm::var(x.counts[r3]), 0),
                    eq(LinTerm::var(x.counts[r1]), 0)})
              .unsat());
}

TEST_CASE("rule chains") {
    auto ta = strb();
    auto chains = rule_chains(ta, *ta.rule_index("r3"));
    // r3 alone, r1 r3, r2 r3, sl2 r3, sl2 preceded by r1 or r2, sl1 r2 r3, sl1 r2 sl2 r3
    CHECK(chains.size() == 8);
    for (const auto& c : chains) CHECK(c.back() == *ta.rule_index("r3"));
}

TEST_CASE("phi_steady") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    auto t = fx.enc.make_config("t");
    auto x = fx.enc.make_counts("x", true);
    auto fix = [&](const Configuration& a, const Configuration& b, std::vector<Formula> extra = {}) {
        extra.push_back(fx.enc.phi_steady(s, t, x));
        extra.push_back(fx.enc.equals(s, a));
        extra.push_back(fx.enc.equals(t, b));
        return fx.check(extra);
    };
    auto s0 = make_config(fx.ta, {{"l1", 3}}, {}, {4, 1, 1});
    CHECK(fix(s0, s0, {fx.counts(x.counts, {})}).sat());
    CHECK(fix(s0, make_config(fx.ta, {{"l2", 3}}, {{"x", 3}}, {4, 1, 1})).unsat());

    CHECK(fix(make_config(fx.ta, {{"l1", 1}, {"l2", 2}}, {{"x", 1}}, {4, 1, 1}),
              make_config(fx.ta, {{"l2", 3}}, {{"x", 2}}, {4, 1, 1}))
              .unsat());
    auto v = fix(make_config(fx.ta, {{"l1", 1}, {"l2", 4}}, {{"x", 1}}, {7, 2, 2}),
                 make_config(fx.ta, {{"l2", 5}}, {{"x", 2}}, {7, 2, 2}));
    REQUIRE(v.sat());
    CHECK(v.model[x.counts[fx.rule("r1")]] == 1);
}

TEST_CASE("phi_step") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    auto t = fx.enc.make_config("t", &s.params);
    auto y = fx.enc.make_counts("y", false).counts;
    auto s0 = make_config(fx.ta, {{"l1", 3}}, {}, {4, 1, 1});
    CHECK(fx.check({fx.enc.phi_step(s, t, y), fx.enc.equals(s, s0), fx.enc.equals(t, s0)}).sat());
    CHECK(fx.check({fx.enc.phi_step(s, t, y), fx.enc.equals(s, s0),
                    fx.enc.equals(t, make_config(fx.ta, {{"l1", 2}, {"l2", 1}}, {{"x", 1}}, {4, 1, 1}))})
              .sat());
    CHECK(fx.check({fx.enc.phi_step(s, t, y), fx.enc.equals(s, s0),
                    fx.enc.equals(t, make_config(fx.ta, {{"l1", 1}, {"l2", 2}}, {{"x", 2}}, {4, 1, 1}))})
              .unsat());
}

TEST_CASE("phi_reach") {
    Fixture fx;
    auto s = fx.enc.make_config("s");
    auto t = fx.enc.make_config("t", &s.params);
    auto e = fx.enc.phi_reach(s, t, "r");
    CHECK(e.blocks.size() == fx.enc.segments_bound() + 1);
    CHECK(e.steps.size() == fx.enc.segments_bound());
    auto s0 = make_config(fx.ta, {{"l1", 3}}, {}, {4, 1, 1});

    auto v = fx.check({e.formula, fx.enc.equals(s, s0),
                       fx.enc.equals(t, make_config(fx.ta, {{"l2", 2}, {"l3", 1}}, {{"x", 3}}, {4, 1, 1}))});
    REQUIRE(v.sat());
    CHECK(v.model[e.sums[fx.rule("r1")]] == 3);
    CHECK(v.model[e.sums[fx.rule("r3")]] == 1);
    Semantics sem(fx.ta);
    auto w = decode_witness(fx.enc, e, v.model);
    auto tau = realize_path(sem, w);
    CHECK(sem.run(s0, tau) == w.points.back());

    CHECK(fx.check({e.formula, fx.enc.equals(s, s0), fx.enc.equals(t, s0)}).sat());
    CHECK(fx.check({e.formula, fx.enc.equals(s, s0), eq(sum_of(t.counters), 4)}).unsat());
}

TEST_CASE("solve_reach on strb") {
    auto ta = strb();
    auto solver = SolverConfig::from_env();
    auto l = [&](const char* n) { return *ta.location_index(n); };
    Semantics sem(ta);
    for (auto zero : {std::vector<std::size_t>{l("l0"), l("l1")}, std::vector<std::size_t>{l("l0"), l("l1"), l("l2")}}) {
        ReachQuery q;
        q.zero = zero;
        q.pos = {l("l3")};
        auto res = solve_reach(ta, q, solver);
        REQUIRE(res.kind == Verdict::Kind::Sat);
        REQUIRE(res.witness);
        auto end = sem.run(res.witness->points.front(), res.schedule);
        CHECK(end.counters[l("l3")] > 0);
        for (auto z : zero) CHECK(end.counters[z] == 0);
        CHECK(sem.is_initial(res.witness->points.front()));
    }
    ReachQuery exact;
    exact.init = make_config(ta, {{"l1", 3}}, {}, {4, 1, 1});
    exact.zero = {l("l0"), l("l1"), l("l2")};
    exact.pos = {l("l3")};
    exact.bound = 5;
    CHECK(solve_reach(ta, exact, solver).kind == Verdict::Kind::Unsat);
    exact.bound = 6;
    CHECK(solve_reach(ta, exact, solver).kind == Verdict::Kind::Sat);
}

TEST_CASE("realize_steady") {
    Semantics sem(strb());
    const auto& ta = sem.ta();
    std::vector<std::int64_t> counts(ta.rules.size(), 0);
    auto s = make_config(ta, {{"l1", 2}, {"l2", 3}}, {{"x", 3}}, {7, 2, 2});
    CHECK(realize_steady(sem, s, counts).empty());

    counts[*ta.rule_index("r1")] = 2;
    CHECK(realize_steady(sem, s, counts) == sem.parse_schedule({"r1", "r1"}));

    std::fill(counts.begin(), counts.end(), 0);
    counts[*ta.rule_index("sl2")] = 2;
    counts[*ta.rule_index("r3")] = 1;
    auto c = make_config(ta, {{"l2", 1}, {"l3", 2}}, {{"x", 2}}, {4, 1, 1});
    auto tau = realize_steady(sem, c, counts);
    CHECK(tau.size() == 3);
    CHECK(std::count(tau.begin(), tau.end(), *ta.rule_index("sl2")) == 2);
    CHECK_NOTHROW(sem.run(c, tau));

    counts[*ta.rule_index("r2")] = 1;
    CHECK_THROWS_AS(realize_steady(sem, c, counts), InternalInvariantViolation);
}

TEST_CASE("bounded reachability agrees with the oracle on random automata") {
    std::mt19937_64 rng(99);
    auto solver = SolverConfig::from_env();
    int sat = 0;
    for (int i = 0; i < 25; ++i) {
        auto ta = tamc::testing::random_ta(rng);
        Semantics sem(ta);
        auto bounds = ParamBounds::uniform(ta.env.params.size(), 0, 4);
        ReachQuery q;
        q.pos = {static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, ta.locations.size() - 1)(rng))};
        if (ta.locations.size() > 2) q.zero = {0};
        q.bound = std::uniform_int_distribution<int>(0, 6)(rng);
        q.param_bounds = bounds;
        auto res = solve_reach(ta, q, solver);
        auto inits = initial_configurations(ta, bounds);
        auto goal = [&](const Configuration& c) {
            for (auto z : q.zero)
                if (c.counters[z] != 0) return false;
            for (auto p : q.pos)
                if (c.counters[p] == 0) return false;
            return true;
        };
        auto w = oracle_search(sem, inits, goal, static_cast<std::size_t>(*q.bound));
        REQUIRE(res.kind != Verdict::Kind::Unknown);
        CHECK((res.kind == Verdict::Kind::Sat) == w.has_value());
        if (w) ++sat;
    }
    CHECK(sat > 3);
}
