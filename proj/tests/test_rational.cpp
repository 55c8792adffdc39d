#include <doctest.h>

#include <stdexcept>

#include "tamc/rational.hpp"

using tamc::Rational;

TEST_CASE("rationals are kept in lowest terms") {
    Rational r(6, -4);
    CHECK(r.num() == -3);
    CHECK(r.den() == 2);
    CHECK(Rational(0, 5) == Rational(0));
    CHECK(Rational(0, 5).den() == 1);
}

TEST_CASE("rational arithmetic and ordering are exact") {
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
    CHECK(Rational(1, 2) / Rational(1, 4) == Rational(2));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(-1, 2) < Rational(0));
    CHECK(Rational(7, 2).floor() == 3);
    CHECK(Rational(-7, 2).floor() == -4);
    CHECK(Rational(7, 2).ceil() == 4);
    CHECK(Rational(-7, 2).ceil() == -3);
}

TEST_CASE("rational parsing and printing") {
    CHECK(Rational::parse("3") == Rational(3));
    CHECK(Rational::parse("-1/2") == Rational(-1, 2));
    CHECK(Rational::parse("4/6").str() == "2/3");
    CHECK_THROWS(Rational::parse("1.5"));
    CHECK_THROWS(Rational::parse("x"));
    CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("rational overflow is detected") {
    Rational big(std::int64_t{1} << 62);
    CHECK_THROWS_AS(big * Rational(4), std::overflow_error);
}
