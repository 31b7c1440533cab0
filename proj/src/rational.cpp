#include "uryforge/rational.hpp"

#include <charconv>

namespace uryforge {

namespace {

long long narrow(__int128 v, const char* op) {
  if (v > INT64_MAX || v < INT64_MIN) {
    throw ArithmeticOverflow(std::string("rational overflow in ") + op);
  }
  return (long long)v;
}

}  // namespace

void Rational::assign(long long num, long long den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    if (num == INT64_MIN || den == INT64_MIN) throw ArithmeticOverflow("rational normalize");
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

// Reduce in 128 bits first so legitimate values with large intermediate
// terms still fit after cancellation.
static __int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational Rational::combine(const Rational& a, const Rational& b, int sign) {
  __int128 num = (__int128)a.num_ * b.den_ + (__int128)sign * b.num_ * a.den_;
  __int128 den = (__int128)a.den_ * b.den_;
  __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  Rational r;
  r.num_ = narrow(num, "+/-");
  r.den_ = narrow(den, "+/-");
  return r;
}

Rational operator*(const Rational& a, const Rational& b) {
  __int128 num = (__int128)a.num_ * b.num_;
  __int128 den = (__int128)a.den_ * b.den_;
  __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  Rational r;
  r.num_ = narrow(num, "*");
  r.den_ = narrow(den, "*");
  return r;
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::invalid_argument("rational division by zero");
  return a * Rational(b.den_, b.num_);
}

Rational Rational::parse(std::string_view s) {
  auto slash = s.find('/');
  auto parse_ll = [](std::string_view part) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw std::invalid_argument("bad rational literal: " + std::string(part));
    }
    return v;
  };
  if (slash == std::string_view::npos) return Rational(parse_ll(s));
  return Rational(parse_ll(s.substr(0, slash)), parse_ll(s.substr(slash + 1)));
}

}  // namespace uryforge
