#pragma once

// Exact rational arithmetic on 128-bit integers.  Every operation that could
// overflow is checked and throws std::overflow_error; results are always kept
// in lowest terms with a positive denominator.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace traceform {

using int128 = __int128;

namespace detail {

inline int128 checked_add(int128 a, int128 b) {
  int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational: add overflow");
  return r;
}

inline int128 checked_sub(int128 a, int128 b) {
  int128 r;
  if (__builtin_sub_overflow(a, b, &r)) throw std::overflow_error("rational: sub overflow");
  return r;
}

inline int128 checked_mul(int128 a, int128 b) {
  int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational: mul overflow");
  return r;
}

inline int128 int128_abs(int128 a) { return a < 0 ? -a : a; }

inline int128 int128_gcd(int128 a, int128 b) {
  a = int128_abs(a);
  b = int128_abs(b);
  while (b != 0) {
    int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline std::string int128_to_string(int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
  std::string s;
  while (u != 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.insert(s.begin(), '-');
  return s;
}

}  // namespace detail

class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }
  static Rational from_int128(int128 n, int128 d) {
    Rational r;
    r.num_ = n;
    r.den_ = d;
    r.normalize();
    return r;
  }

  int128 num() const { return num_; }
  int128 den() const { return den_; }

  Rational operator+(const Rational& o) const {
    using namespace detail;
    int128 g = int128_gcd(den_, o.den_);
    int128 dl = den_ / g;
    int128 dr = o.den_ / g;
    int128 n = checked_add(checked_mul(num_, dr), checked_mul(o.num_, dl));
    int128 d = checked_mul(checked_mul(dl, dr), g);
    return from_int128(n, d);
  }
  Rational operator-(const Rational& o) const { return *this + Rational::from_int128(-o.num_, o.den_); }
  Rational operator*(const Rational& o) const {
    using namespace detail;
    // Cross-reduce before multiplying to keep intermediates small.
    int128 g1 = int128_gcd(num_, o.den_);
    int128 g2 = int128_gcd(o.num_, den_);
    int128 n = checked_mul(num_ / g1, o.num_ / g2);
    int128 d = checked_mul(den_ / g2, o.den_ / g1);
    return from_int128(n, d);
  }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("rational: division by zero");
    return *this * Rational::from_int128(o.den_, o.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }
  Rational operator-() const { return from_int128(-num_, den_); }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const {
    return detail::checked_mul(num_, o.den_) < detail::checked_mul(o.num_, den_);
  }
  bool operator<=(const Rational& o) const { return *this < o || *this == o; }
  bool operator>(const Rational& o) const { return o < *this; }
  bool operator>=(const Rational& o) const { return o <= *this; }

  double to_double() const {
    return static_cast<double>(static_cast<long double>(num_) / static_cast<long double>(den_));
  }

  std::string to_string() const {
    if (den_ == 1) return detail::int128_to_string(num_);
    return detail::int128_to_string(num_) + "/" + detail::int128_to_string(den_);
  }

 private:
  void normalize() {
    if (den_ == 0) throw std::domain_error("rational: zero denominator");
    if (den_ < 0) {
      num_ = detail::checked_sub(0, num_);
      den_ = detail::checked_sub(0, den_);
    }
    int128 g = detail::int128_gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  int128 num_;
  int128 den_;  // > 0
};

}  // namespace traceform
