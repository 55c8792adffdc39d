#include "tamc/rational.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace tamc {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::int64_t narrow(__int128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw std::overflow_error("rational overflow");
    return static_cast<std::int64_t>(v);
}

}  // namespace

Rational Rational::from_wide(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    Rational r;
    r.num_ = narrow(n);
    r.den_ = narrow(d);
    return r;
}

Rational::Rational(std::int64_t n, std::int64_t d) { *this = from_wide(n, d); }

std::int64_t Rational::floor() const {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
}

std::int64_t Rational::ceil() const {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) ++q;
    return q;
}

Rational Rational::operator-() const { return from_wide(-static_cast<__int128>(num_), den_); }

Rational& Rational::operator+=(const Rational& o) {
    *this = from_wide(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_,
                      static_cast<__int128>(den_) * o.den_);
    return *this;
}

Rational& Rational::operator-=(const Rational& o) { return *this += -o; }

Rational& Rational::operator*=(const Rational& o) {
    *this = from_wide(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
    return *this;
}

Rational& Rational::operator/=(const Rational& o) {
    if (o.num_ == 0) throw std::domain_error("division by zero");
    *this = from_wide(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
    return *this;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 l = static_cast<__int128>(a.num_) * b.den_;
    __int128 r = static_cast<__int128>(b.num_) * a.den_;
    if (l < r) return std::strong_ordering::less;
    if (l > r) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(const std::string& text) {
    auto parse_int = [&](const std::string& s) -> std::int64_t {
        if (s.empty()) throw std::invalid_argument("bad rational literal '" + text + "'");
        std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (i == s.size()) throw std::invalid_argument("bad rational literal '" + text + "'");
        for (std::size_t k = i; k < s.size(); ++k)
            if (s[k] < '0' || s[k] > '9') throw std::invalid_argument("bad rational literal '" + text + "'");
        return std::stoll(s);
    };
    auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(parse_int(text));
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

std::int64_t checked_lcm(std::int64_t a, std::int64_t b) {
    __int128 g = gcd128(a, b);
    if (g == 0) return 0;
    __int128 l = static_cast<__int128>(a) / g * b;
    if (l < 0) l = -l;
    return narrow(l);
}

}  // namespace tamc
