#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace uryforge {

class ArithmeticOverflow : public std::runtime_error {
 public:
  explicit ArithmeticOverflow(const std::string& what) : std::runtime_error(what) {}
};

// Exact rational on 64-bit numerator/denominator, always reduced, denominator
// positive. Intermediate products go through 128 bits and overflow throws
// instead of wrapping.
class Rational {
 public:
  Rational() = default;
  Rational(long long num, long long den = 1) { assign(num, den); }

  static Rational parse(std::string_view s);

  long long num() const { return num_; }
  long long den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }
  bool is_integer() const { return den_ == 1; }

  Rational operator-() const { return Rational(-num_, den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return combine(a, b, +1);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return combine(a, b, -1);
  }
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 lhs = (__int128)a.num_ * b.den_;
    __int128 rhs = (__int128)b.num_ * a.den_;
    return lhs < rhs ? std::strong_ordering::less
         : lhs > rhs ? std::strong_ordering::greater
                     : std::strong_ordering::equal;
  }

  Rational abs() const { return num_ < 0 ? -*this : *this; }
  Rational half() const { return *this / Rational(2); }

  // Canonical form "num/den", always with the slash; this is the wire format.
  std::string str() const {
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  long long num_ = 0;
  long long den_ = 1;

  void assign(long long num, long long den);
  static Rational combine(const Rational& a, const Rational& b, int sign);
};

inline Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

}  // namespace uryforge
