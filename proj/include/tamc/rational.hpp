#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace tamc {

// Exact rational with 64-bit numerator/denominator, always in lowest terms.
// Arithmetic goes through 128-bit intermediates and throws on overflow.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
    Rational(std::int64_t n, std::int64_t d);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_integer() const { return den_ == 1; }
    bool is_zero() const { return num_ == 0; }
    int sign() const { return (num_ > 0) - (num_ < 0); }

    std::int64_t floor() const;
    std::int64_t ceil() const;

    Rational operator-() const;
    Rational& operator+=(const Rational& o);
    Rational& operator-=(const Rational& o);
    Rational& operator*=(const Rational& o);
    Rational& operator/=(const Rational& o);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

    // "3", "-1/2"
    std::string str() const;
    // Accepts "3", "-7", "1/2"; throws std::invalid_argument otherwise.
    static Rational parse(const std::string& text);

private:
    static Rational from_wide(__int128 n, __int128 d);

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::int64_t checked_lcm(std::int64_t a, std::int64_t b);

}  // namespace tamc
