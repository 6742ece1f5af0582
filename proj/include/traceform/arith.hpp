#pragma once

// Elementary multiplicative arithmetic over 64-bit integers: factorization
// (trial division + deterministic Miller-Rabin + Pollard rho), the classical
// multiplicative functions, and the exact-rational twisted divisor sums used
// by the spectral weights.  Everything downstream assumes factorizations are
// exact, so primality checking is deterministic, never probabilistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "traceform/rational.hpp"

namespace traceform::arith {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

struct PrimePower {
  u64 p;
  int e;
  bool operator==(const PrimePower&) const = default;
};

namespace detail {

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(u128(a) * b % m); }

inline u64 powmod(u64 a, u64 e, u64 m) {
  u64 r = 1 % m;
  a %= m;
  while (e > 0) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

// Deterministic for all 64-bit inputs with this witness set.
inline bool miller_rabin(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 0; i < s - 1; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// Brent's cycle variant of Pollard rho; n must be odd, composite, not a prime power hit by trial division.
inline u64 pollard_rho(u64 n) {
  if (n % 2 == 0) return 2;
  u64 c = 1;
  while (true) {
    u64 x = 2, d = 1;
    u64 saved_x = x;
    int power = 1, lam = 1;
    auto f = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
    while (d == 1) {
      if (power == lam) {
        saved_x = x;
        power *= 2;
        lam = 0;
      }
      // Batch gcds for speed.
      u64 q = 1;
      int batch = std::min(64, power - lam);
      u64 x0 = x;
      for (int i = 0; i < batch; ++i) {
        x = f(x);
        u64 diff = x > saved_x ? x - saved_x : saved_x - x;
        if (diff == 0) diff = 1;
        q = mulmod(q, diff, n);
      }
      d = std::gcd(q, n);
      lam += batch;
      if (d == n) {
        // Re-walk one step at a time to isolate the factor.
        x = x0;
        d = 1;
        while (d == 1) {
          x = f(x);
          u64 diff = x > saved_x ? x - saved_x : saved_x - x;
          if (diff == 0) break;
          d = std::gcd(diff, n);
        }
        break;
      }
    }
    if (d > 1 && d < n) return d;
    ++c;
  }
}

inline void factor_into(u64 n, std::vector<PrimePower>& out) {
  if (n == 1) return;
  if (miller_rabin(n)) {
    out.push_back({n, 1});
    return;
  }
  u64 d = pollard_rho(n);
  factor_into(d, out);
  factor_into(n / d, out);
}

inline u64 checked_mul_u64(u64 a, u64 b) {
  u64 r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("arith: u64 overflow");
  return r;
}

}  // namespace detail

inline bool is_prime(u64 n) { return detail::miller_rabin(n); }

class FactoredInteger {
 public:
  FactoredInteger() : value_(1) {}

  static FactoredInteger factor(u64 n) {
    if (n == 0) throw std::invalid_argument("FactoredInteger: n must be positive");
    FactoredInteger f;
    f.value_ = n;
    for (u64 p : {2ull, 3ull, 5ull}) {
      if (n % p == 0) {
        int e = 0;
        while (n % p == 0) {
          n /= p;
          ++e;
        }
        f.factors_.push_back({p, e});
      }
    }
    for (u64 p = 7; p <= 10000 && p * p <= n; p += 2) {
      if (n % p == 0) {
        int e = 0;
        while (n % p == 0) {
          n /= p;
          ++e;
        }
        f.factors_.push_back({p, e});
      }
    }
    if (n > 1) {
      std::vector<PrimePower> rest;
      detail::factor_into(n, rest);
      std::sort(rest.begin(), rest.end(), [](const PrimePower& a, const PrimePower& b) { return a.p < b.p; });
      // Merge equal primes produced by recursive splitting.
      for (const auto& pp : rest) {
        if (!f.factors_.empty() && f.factors_.back().p == pp.p) {
          f.factors_.back().e += pp.e;
        } else {
          f.factors_.push_back(pp);
        }
      }
    }
    return f;
  }

  static FactoredInteger from_prime_powers(std::vector<PrimePower> pps) {
    std::sort(pps.begin(), pps.end(), [](const PrimePower& a, const PrimePower& b) { return a.p < b.p; });
    FactoredInteger f;
    u64 v = 1;
    for (const auto& pp : pps) {
      if (pp.e <= 0 || !is_prime(pp.p)) throw std::invalid_argument("FactoredInteger: bad prime power");
      if (!f.factors_.empty() && f.factors_.back().p == pp.p) throw std::invalid_argument("FactoredInteger: duplicate prime");
      for (int i = 0; i < pp.e; ++i) v = detail::checked_mul_u64(v, pp.p);
      f.factors_.push_back(pp);
    }
    f.value_ = v;
    return f;
  }

  u64 value() const { return value_; }
  const std::vector<PrimePower>& factors() const { return factors_; }

  int exponent_of(u64 p) const {
    for (const auto& pp : factors_)
      if (pp.p == p) return pp.e;
    return 0;
  }

  bool divides(const FactoredInteger& other) const {
    for (const auto& pp : factors_)
      if (other.exponent_of(pp.p) < pp.e) return false;
    return true;
  }

  // this / d, requiring d | this.
  FactoredInteger divide_by(const FactoredInteger& d) const {
    if (!d.divides(*this)) throw std::invalid_argument("FactoredInteger: not a divisor");
    FactoredInteger q;
    q.value_ = value_ / d.value();
    for (const auto& pp : factors_) {
      int e = pp.e - d.exponent_of(pp.p);
      if (e > 0) q.factors_.push_back({pp.p, e});
    }
    return q;
  }

  bool coprime_to(u64 x) const {
    for (const auto& pp : factors_)
      if (x % pp.p == 0) return false;
    return true;
  }

  std::vector<u64> divisors() const {
    std::vector<u64> ds{1};
    for (const auto& pp : factors_) {
      std::size_t sz = ds.size();
      u64 q = 1;
      for (int i = 0; i < pp.e; ++i) {
        q *= pp.p;
        for (std::size_t j = 0; j < sz; ++j) ds.push_back(ds[j] * q);
      }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
  }

  std::vector<FactoredInteger> divisor_factorizations() const {
    std::vector<FactoredInteger> ds(1);
    for (const auto& pp : factors_) {
      std::size_t sz = ds.size();
      for (int i = 1; i <= pp.e; ++i) {
        u64 q = 1;
        for (int j = 0; j < i; ++j) q *= pp.p;
        for (std::size_t j = 0; j < sz; ++j) {
          FactoredInteger d = ds[j];
          d.factors_.push_back({pp.p, i});
          d.value_ *= q;
          ds.push_back(std::move(d));
        }
      }
    }
    std::sort(ds.begin(), ds.end(),
              [](const FactoredInteger& a, const FactoredInteger& b) { return a.value_ < b.value_; });
    return ds;
  }

 private:
  u64 value_;
  std::vector<PrimePower> factors_;  // sorted by p
};

inline int moebius(const FactoredInteger& n) {
  int sign = 1;
  for (const auto& pp : n.factors()) {
    if (pp.e >= 2) return 0;
    sign = -sign;
  }
  return sign;
}

inline u64 euler_phi(const FactoredInteger& n) {
  u64 r = 1;
  for (const auto& pp : n.factors()) {
    u64 q = 1;
    for (int i = 0; i < pp.e - 1; ++i) q *= pp.p;
    r = detail::checked_mul_u64(r, q * (pp.p - 1));
  }
  return r;
}

inline u64 divisor_count_tau(const FactoredInteger& n) {
  u64 r = 1;
  for (const auto& pp : n.factors()) r = detail::checked_mul_u64(r, static_cast<u64>(pp.e) + 1);
  return r;
}

// Number of ordered triples (a,b,c) with abc = n.
inline u64 tau3(const FactoredInteger& n) {
  u64 r = 1;
  for (const auto& pp : n.factors()) {
    u64 e = pp.e;
    r = detail::checked_mul_u64(r, (e + 1) * (e + 2) / 2);
  }
  return r;
}

// Index of the Hecke congruence subgroup of level N in the full modular group.
inline u64 nu(const FactoredInteger& n) {
  u64 r = 1;
  for (const auto& pp : n.factors()) {
    u64 q = 1;
    for (int i = 0; i < pp.e - 1; ++i) q = detail::checked_mul_u64(q, pp.p);
    r = detail::checked_mul_u64(r, detail::checked_mul_u64(q, pp.p + 1));
  }
  return r;
}

// n = d1 * d2 with d1 squarefree, d2 squarefull, (d1, d2) = 1.
inline std::pair<FactoredInteger, FactoredInteger> squarefull_split(const FactoredInteger& n) {
  std::vector<PrimePower> a, b;
  for (const auto& pp : n.factors()) (pp.e == 1 ? a : b).push_back(pp);
  return {FactoredInteger::from_prime_powers(a), FactoredInteger::from_prime_powers(b)};
}

// Product of p^b over p^b || L restricted to primes dividing M.
inline u64 frak_p(const FactoredInteger& L, const FactoredInteger& M) {
  u64 r = 1;
  for (const auto& pp : L.factors()) {
    if (M.exponent_of(pp.p) > 0) {
      for (int i = 0; i < pp.e; ++i) r = detail::checked_mul_u64(r, pp.p);
    }
  }
  return r;
}

// Principal character mod M, with gcd(0, M) = M so chi0(0) = 1 iff M = 1.
inline int chi0(const FactoredInteger& M, i64 n) {
  if (M.value() == 1) return 1;
  u64 a = n < 0 ? static_cast<u64>(-(n + 1)) + 1 : static_cast<u64>(n);
  return std::gcd(a, M.value()) == 1 ? 1 : 0;
}

// Sum over r | b of chi0_M(r) / r, as an exact rational.
inline Rational sigma_twisted(const FactoredInteger& b, const FactoredInteger& M) {
  Rational r(1);
  for (const auto& pp : b.factors()) {
    if (M.exponent_of(pp.p) > 0) continue;
    u64 pe = 1, geo = 1;
    for (int i = 0; i < pp.e; ++i) {
      pe = detail::checked_mul_u64(pe, pp.p);
      geo = detail::checked_mul_u64(geo, pp.p) + 1;  // 1 + p + ... + p^e, Horner from the top
    }
    r *= Rational::from_int128(static_cast<int128>(geo), static_cast<int128>(pe));
  }
  return r;
}

// Sum over b | c of chi0_M(b) mu(b) / b^2 = prod_{p | c, p coprime M} (1 - 1/p^2).
inline Rational alpha(const FactoredInteger& c, const FactoredInteger& M) {
  Rational r(1);
  for (const auto& pp : c.factors()) {
    if (M.exponent_of(pp.p) > 0) continue;
    int128 p2 = static_cast<int128>(pp.p) * pp.p;
    r *= Rational::from_int128(p2 - 1, p2);
  }
  return r;
}

// Sum over b | c of chi0_M(b) mu(b)^2 / b = prod_{p | c, p coprime M} (1 + 1/p).
inline Rational beta(const FactoredInteger& c, const FactoredInteger& M) {
  Rational r(1);
  for (const auto& pp : c.factors()) {
    if (M.exponent_of(pp.p) > 0) continue;
    r *= Rational::from_int128(static_cast<int128>(pp.p) + 1, static_cast<int128>(pp.p));
  }
  return r;
}

// Multiplicative main-term weight for counting newforms of level N:
// eta(p) = p - 1, eta(p^2) = p^2 - p - 1, eta(p^v) = p^(v-3) (p^2 - 1)(p - 1) for v >= 3.
inline u64 eta(const FactoredInteger& n) {
  u64 r = 1;
  for (const auto& pp : n.factors()) {
    u64 t;
    if (pp.e == 1) {
      t = pp.p - 1;
    } else if (pp.e == 2) {
      t = detail::checked_mul_u64(pp.p, pp.p) - pp.p - 1;
    } else {
      t = 1;
      for (int i = 0; i < pp.e - 3; ++i) t = detail::checked_mul_u64(t, pp.p);
      t = detail::checked_mul_u64(t, detail::checked_mul_u64(pp.p, pp.p) - 1);
      t = detail::checked_mul_u64(t, pp.p - 1);
    }
    r = detail::checked_mul_u64(r, t);
  }
  return r;
}

// Reference evaluation of eta as the Dirichlet convolution
// sum over LM = N of mu(L) * M * prod_{p^2 | M} (1 - 1/p^2), in exact rationals.
inline Rational eta_convolution(const FactoredInteger& n) {
  Rational total(0);
  auto divs = n.divisor_factorizations();
  for (const auto& L : divs) {
    int mu = moebius(L);
    if (mu == 0) continue;
    FactoredInteger M = n.divide_by(L);
    Rational term(static_cast<i64>(M.value()));
    for (const auto& pp : M.factors()) {
      if (pp.e >= 2) {
        int128 p2 = static_cast<int128>(pp.p) * pp.p;
        term *= Rational::from_int128(p2 - 1, p2);
      }
    }
    total += (mu > 0) ? term : -term;
  }
  return total;
}

inline std::vector<u64> primes_up_to(u64 limit) {
  if (limit > 200000000ull) throw std::invalid_argument("primes_up_to: limit too large");
  std::vector<u64> primes;
  if (limit < 2) return primes;
  std::vector<bool> comp(limit + 1, false);
  for (u64 i = 2; i * i <= limit; ++i) {
    if (!comp[i]) {
      for (u64 j = i * i; j <= limit; j += i) comp[j] = true;
    }
  }
  for (u64 i = 2; i <= limit; ++i) {
    if (!comp[i]) primes.push_back(i);
  }
  return primes;
}

// Prime zeta P(s) = sum over p of p^-s for integer s >= 2, via
// P(s) = sum_{k >= 1} mu(k)/k * log zeta(ks).
inline double prime_zeta(int s) {
  if (s < 2) throw std::invalid_argument("prime_zeta: s must be >= 2");
  long double total = 0.0L;
  for (int k = 1; k * s <= 1000; ++k) {
    int mu = moebius(FactoredInteger::factor(static_cast<u64>(k)));
    if (mu == 0) continue;
    long double x = static_cast<long double>(k) * s;
    long double lz;
    if (x >= 55.0L) {
      // zeta(x) - 1 is below long double granularity of zeta itself here;
      // the four leading terms of the Dirichlet series carry full precision.
      lz = std::log1p(std::pow(2.0L, -x) + std::pow(3.0L, -x) + std::pow(4.0L, -x) + std::pow(5.0L, -x));
    } else {
      lz = std::log(std::riemann_zeta(x));
    }
    total += static_cast<long double>(mu) / k * lz;
  }
  return static_cast<double>(total);
}

// prod over all primes of (1 - 1/(p^2 - p)), evaluated to absolute error well
// below 1e-10 via log expansion: log(1 - u^2/(1-u)) = -sum_{n>=2} (Lucas_n - 1)/n * u^n
// at u = 1/p, summed over p by prime zeta values.
inline double artin_type_constant() {
  static const double value = [] {
    long double lucas_prev = 1.0L, lucas = 3.0L;  // L_1, L_2
    long double sum = 0.0L;
    for (int n = 2; n <= 300; ++n) {
      long double term = (lucas - 1.0L) / n * static_cast<long double>(prime_zeta(n));
      sum += term;
      if (n > 10 && term < 1e-20L) break;
      long double next = lucas + lucas_prev;
      lucas_prev = lucas;
      lucas = next;
    }
    return static_cast<double>(std::exp(-sum));
  }();
  return value;
}

}  // namespace traceform::arith
