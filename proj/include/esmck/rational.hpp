#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace esmck {

using Int = boost::multiprecision::cpp_int;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Exact rational number. Always normalized: gcd(num, den) == 1, den > 0,
/// zero is 0/1. Closed under +, -, *, / and nonnegative integer powers;
/// nothing here ever rounds.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}  // NOLINT(google-explicit-constructor)
    Rational(Int n) : num_(std::move(n)), den_(1) {}
    Rational(Int n, Int d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }

    const Int& num() const { return num_; }
    const Int& den() const { return den_; }

    bool isZero() const { return num_ == 0; }
    bool isInteger() const { return den_ == 1; }
    int sign() const { return num_ == 0 ? 0 : (num_ < 0 ? -1 : 1); }

    Rational operator-() const { return Rational(unchecked{}, -num_, den_); }

    Rational operator+(const Rational& o) const {
        return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
    }
    Rational operator-(const Rational& o) const {
        return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
    }
    Rational operator*(const Rational& o) const {
        return Rational(num_ * o.num_, den_ * o.den_);
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw Error("rational division by zero");
        return Rational(num_ * o.den_, den_ * o.num_);
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    /// Exact nonnegative integer power; pow(0, 0) == 1.
    Rational pow(unsigned k) const {
        Rational acc(1);
        Rational base = *this;
        while (k > 0) {
            if (k & 1u) acc *= base;
            base *= base;
            k >>= 1u;
        }
        return acc;
    }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }
    bool operator<=(const Rational& o) const { return num_ * o.den_ <= o.num_ * den_; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    /// "n" for integers, "n/d" otherwise.
    std::string str() const {
        std::string s = num_.str();
        if (den_ != 1) s += "/" + den_.str();
        return s;
    }

    double toDouble() const {
        return num_.convert_to<double>() / den_.convert_to<double>();
    }

    /// Parses "123", "0.5", "12.", ".25". No sign, no exponent; unary minus
    /// lives in the expression layer.
    static Rational fromDecimal(std::string_view text) {
        Int n = 0;
        Int d = 1;
        bool seenDot = false;
        bool seenDigit = false;
        for (char c : text) {
            if (c == '.') {
                if (seenDot) throw Error("malformed number: " + std::string(text));
                seenDot = true;
            } else if (c >= '0' && c <= '9') {
                n = n * 10 + (c - '0');
                if (seenDot) d *= 10;
                seenDigit = true;
            } else {
                throw Error("malformed number: " + std::string(text));
            }
        }
        if (!seenDigit) throw Error("malformed number: " + std::string(text));
        return Rational(n, d);
    }

    /// Parses the str() format back ("-3", "5/6", "-1/2").
    static Rational fromString(std::string_view text) {
        auto slash = text.find('/');
        if (slash == std::string_view::npos) return Rational(Int(std::string(text)));
        Int n{std::string(text.substr(0, slash))};
        Int d{std::string(text.substr(slash + 1))};
        return Rational(n, d);
    }

private:
    struct unchecked {};
    Rational(unchecked, Int n, Int d) : num_(std::move(n)), den_(std::move(d)) {}

    void normalize() {
        if (den_ == 0) throw Error("rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        if (num_ == 0) {
            den_ = 1;
            return;
        }
        Int g = boost::multiprecision::gcd(num_ < 0 ? Int(-num_) : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    Int num_;
    Int den_;
};

/// Best rational approximation of x with denominator <= maxDen, via the
/// continued-fraction convergent sequence. Used to snap floating-point
/// falsifier candidates to exact witnesses.
inline Rational snapToRational(double x, std::uint64_t maxDen = 1000000) {
    if (!std::isfinite(x)) throw Error("cannot rationalize non-finite value");
    bool negative = x < 0;
    double v = negative ? -x : x;

    // Convergents p/q of the continued fraction of v.
    std::uint64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = v;
    for (int iter = 0; iter < 64; ++iter) {
        double fl = std::floor(frac);
        if (fl > 9e18) break;
        auto a = static_cast<std::uint64_t>(fl);
        if (q1 != 0 && a > (maxDen - q0) / q1) break;
        if (p1 != 0 && a > (UINT64_MAX - p0) / p1) break;
        std::uint64_t p2 = a * p1 + p0;
        std::uint64_t q2 = a * q1 + q0;
        if (q2 > maxDen || q2 == 0) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double rem = frac - fl;
        if (rem < 1e-15) break;
        frac = 1.0 / rem;
    }
    if (q1 == 0) return Rational(0);
    Rational r{Int(p1), Int(q1)};
    return negative ? -r : r;
}

}  // namespace esmck
