#include <doctest.h>

#include <random>

#include "support.hpp"
#include "tamc/semantics.hpp"
#include "tamc/ta.hpp"

using namespace tamc;
using tamc::testing::strb;

namespace {

const char* kSketch = R"({
  "parameters": ["n"], "indeterminates": ["v1"], "resilience": ["n >= 1"], "system_size": "n",
  "locations": ["a", "b"], "initial": ["a"], "shared": ["x"],
  "rules": [{"id": "r", "from": "a", "to": "b", "guard": ["x >= v1*n"], "update": {"x": 1}}]
})";

}  // namespace

TEST_CASE("parse strb") {
    auto ta = strb();
    CHECK(ta.locations.size() == 4);
    CHECK(ta.rules.size() == 6);
    CHECK(ta.shared.size() == 1);
    CHECK(ta.env.params == std::vector<std::string>{"n", "t", "f"});
    CHECK(ta.initial == std::vector<std::size_t>{0, 1});
    CHECK_FALSE(ta.is_sketch());
    auto g = normalize_guard(ta.rules[1].guards[0]);
    CHECK(g.scale == 1);
    CHECK(g.constant == 1);
    CHECK(g.coeffs == std::vector<std::int64_t>{0, 1, -1});
}

TEST_CASE("undeclared location is reported by name") {
    std::string doc = R"({"parameters":["n"],"resilience":[],"system_size":"n","locations":["l0"],"initial":["l0"],
      "shared":[],"rules":[{"id":"r","from":"l9","to":"l0","guard":[],"update":{}}]})";
    try {
        parse_ta(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("l9") != std::string::npos);
        CHECK(e.line == 0);
    }
}

TEST_CASE("syntax errors carry a position") {
    try {
        parse_ta("{\n  \"parameters\": [\"n\",\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.column >= 1);
    }
}

TEST_CASE("other semantic errors") {
    auto base = [](const std::string& initial, const std::string& guard) {
        return R"({"parameters":["n"],"resilience":[],"system_size":"n","locations":["l0","l1"],"initial":)" + initial +
               R"(,"shared":["x"],"rules":[{"id":"r","from":"l0","to":"l1","guard":[)" + guard + R"(],"update":{}}]})";
    };
    CHECK_THROWS_WITH_AS(parse_ta(base("[]", "")), doctest::Contains("empty"), ParseError);
    CHECK_THROWS_WITH_AS(parse_ta(base("[\"l0\"]", "\"z >= 1\"")), doctest::Contains("z"), ParseError);
    CHECK_THROWS_WITH_AS(parse_ta(base("[\"l0\"]", "\"x >= m\"")), doctest::Contains("m"), ParseError);
    CHECK_THROWS_WITH_AS(parse_ta(base("[\"l0\"]", "\"x >= 1.5\"")), doctest::Contains("decimal"), ParseError);
}

TEST_CASE("strict mode rejects updates above one") {
    std::string doc = R"({"parameters":["n"],"resilience":[],"system_size":"n","locations":["l0"],"initial":["l0"],
      "shared":["x"],"rules":[{"id":"r","from":"l0","to":"l0","guard":[],"update":{"x":2}}]})";
    auto lenient = parse_ta(doc);
    CHECK(lenient.warnings.size() == 1);
    CHECK(lenient.ta.rules[0].update[0] == 2);
    ParseOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(parse_ta(doc, strict), ParseError);
}

TEST_CASE("sketch automata expose their indeterminates") {
    auto ta = parse_ta(kSketch).ta;
    CHECK(ta.is_sketch());
    CHECK(ta.indeterminates == std::vector<std::string>{"v1"});
    CHECK(ta.rules[0].guards[0].rhs.coeffs[0] == Coefficient::unknown("v1"));
    CHECK(print_ta(ta).find("v1*n") != std::string::npos);
}

TEST_CASE("normalize_guard clears denominators") {
    ThresholdAutomaton ta;
    ta.env.params = {"n", "t", "f"};
    ta.shared = {"x"};
    SUBCASE("one half") {
        auto g = normalize_guard(parse_guard("x >= 1/2*n", ta));
        CHECK(g.scale == 2);
        CHECK(g.coeffs == std::vector<std::int64_t>{1, 0, 0});
        CHECK(g.constant == 0);
    }
    SUBCASE("already integral") {
        auto g = normalize_guard(parse_guard("x >= t + 1 - f", ta));
        CHECK(g.scale == 1);
        CHECK(g.coeffs == std::vector<std::int64_t>{0, 1, -1});
        CHECK(g.constant == 1);
    }
    SUBCASE("mixed denominators") {
        auto guard = parse_guard("x < 2/3*n + 1/2*t", ta);
        auto g = normalize_guard(guard);
        CHECK(g.scale == 6);
        CHECK(g.coeffs == std::vector<std::int64_t>{4, 3, 0});
        CHECK(g.kind == GuardKind::Fall);
        for (std::int64_t x = 0; x <= 20; ++x)
            for (std::int64_t n = 0; n <= 20; ++n)
                for (std::int64_t t = 0; t <= 20; ++t) {
                    bool rational = Rational(x) < guard.rhs.eval(std::vector<std::int64_t>{n, t, 0});
                    REQUIRE(rational == g.holds(x, {n, t, 0}));
                }
    }
}

TEST_CASE("normalize_guard preserves satisfaction on a grid up to 100") {
    ThresholdAutomaton ta;
    ta.env.params = {"n", "t"};
    ta.shared = {"x"};
    for (const char* text : {"x >= 1/3*n - 2/5*t + 1/2", "x < 3/4*n + 1/7", "x >= n - 3*t"}) {
        auto guard = parse_guard(text, ta);
        auto g = normalize_guard(guard);
        for (std::int64_t x = 0; x <= 100; ++x)
            for (std::int64_t n = 0; n <= 100; ++n)
                for (std::int64_t t = 0; t <= 100; t += 3) {
                    Rational rhs = guard.rhs.eval(std::vector<std::int64_t>{n, t});
                    bool expected = guard.kind == GuardKind::Rise ? Rational(x) >= rhs : Rational(x) < rhs;
                    REQUIRE(expected == g.holds(x, {n, t}));
                }
    }
}

TEST_CASE("printing round-trips") {
    auto ta = strb();
    CHECK(parse_ta(print_ta(ta)).ta == ta);
    auto sk = parse_ta(kSketch).ta;
    CHECK(parse_ta(print_ta(sk)).ta == sk);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        auto r = tamc::testing::random_ta(rng);
        REQUIRE(parse_ta(print_ta(r)).ta == r);
    }
}

TEST_CASE("check_multiplicative") {
    using K = Multiplicativity::Kind;
    CHECK(check_multiplicative(strb()).kind == K::Yes);

    auto env_doc = [](const std::string& rc, const std::string& guard) {
        return R"({"parameters":["n"],"resilience":[)" + rc + R"(],"system_size":"n","locations":["a","b"],"initial":["a"],
          "shared":["y"],"rules":[{"id":"r","from":"a","to":"b","guard":[)" + guard + R"(],"update":{"y":1}}]})";
    };
    auto with_fall = check_multiplicative(parse_ta(env_doc("\"n >= 5\"", "\"y < 1\"")).ta);
    CHECK(with_fall.kind == K::No);
    CHECK(with_fall.reason.find("scaling") != std::string::npos);
    CHECK(check_multiplicative(parse_ta(env_doc("\"n >= 5\"", "")).ta).kind == K::Unknown);
    CHECK(check_multiplicative(parse_ta(env_doc("", "\"y >= 2\"")).ta).kind == K::Yes);
    CHECK(check_multiplicative(parse_ta(env_doc("\"n <= 5\"", "")).ta).kind == K::No);
}

TEST_CASE("multiplicative environments scale") {
    std::mt19937_64 rng(5);
    int yes = 0;
    for (int i = 0; i < 300; ++i) {
        auto ta = tamc::testing::random_ta(rng);
        if (check_multiplicative(ta).kind != Multiplicativity::Kind::Yes) continue;
        ++yes;
        const auto& env = ta.env;
        for (const auto& p : admissible_params(env, ParamBounds::uniform(env.params.size(), 0, 10))) {
            for (std::int64_t mu : {2, 3}) {
                std::vector<std::int64_t> q(p);
                for (auto& v : q) v *= mu;
                REQUIRE(env.admissible(q));
                REQUIRE(env.size_fn.eval(q) == env.size_fn.eval(p) * Rational(mu));
            }
        }
    }
    CHECK(yes > 20);
}
