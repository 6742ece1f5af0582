#pragma once

// Exact reference data the floating-point machinery is tested against:
// the discriminant-form coefficient table computed from the cube of the
// Dedekind eta series, and classical dimension formulas for cusp form
// spaces on Hecke congruence groups of even weight at least 4.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "traceform/arith.hpp"
#include "traceform/rational.hpp"

namespace traceform::oracles {

using bigint = boost::multiprecision::cpp_int;
using u64 = std::uint64_t;
using i64 = std::int64_t;

// tau(1..count), where tau(n) is the n-th coefficient of q prod (1 - q^m)^24.
// The 24th power is assembled as the 8th power of the cube, whose series
// q^(1/24)-normalized form is sparse: sum over j >= 0 of (-1)^j (2j+1) q^(j(j+1)/2).
inline std::vector<bigint> ramanujan_tau_table(std::size_t count) {
  if (count == 0) return {};
  std::size_t deg = count;  // track exponents 0..count-1 of the weight-12 form divided by q
  std::vector<std::pair<std::size_t, i64>> cube;
  for (u64 j = 0;; ++j) {
    u64 d = j * (j + 1) / 2;
    if (d >= deg) break;
    cube.push_back({static_cast<std::size_t>(d), (j % 2 == 0 ? 1 : -1) * static_cast<i64>(2 * j + 1)});
  }
  std::vector<bigint> acc(deg, 0);
  for (const auto& [d, c] : cube) acc[d] = c;
  for (int rep = 1; rep < 8; ++rep) {
    std::vector<bigint> next(deg, 0);
    for (std::size_t i = 0; i < deg; ++i) {
      if (acc[i] == 0) continue;
      for (const auto& [d, c] : cube) {
        std::size_t e = i + d;
        if (e >= deg) break;
        next[e] += acc[i] * c;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

// Number of inequivalent order-2 elliptic points on the level-N curve.
inline u64 elliptic2(const arith::FactoredInteger& N) {
  if (N.value() % 4 == 0) return 0;
  u64 r = 1;
  for (const auto& pp : N.factors()) {
    if (pp.p == 2) continue;
    r *= pp.p % 4 == 1 ? 2 : 0;
  }
  return r;
}

// Number of inequivalent order-3 elliptic points on the level-N curve.
inline u64 elliptic3(const arith::FactoredInteger& N) {
  if (N.value() % 9 == 0) return 0;
  u64 r = 1;
  for (const auto& pp : N.factors()) {
    if (pp.p == 3) continue;
    r *= pp.p % 3 == 1 ? 2 : 0;
  }
  return r;
}

// Number of cusps of the level-N curve.
inline u64 cusp_count(const arith::FactoredInteger& N) {
  u64 r = 0;
  for (u64 d : N.divisors()) r += arith::euler_phi(arith::FactoredInteger::factor(std::gcd(d, N.value() / d)));
  return r;
}

inline void require_weight(int k) {
  if (k < 4 || k % 2 != 0) throw std::invalid_argument("weight must be even and at least 4");
}

// Dimension of the full cusp form space of even weight k >= 4 and level N.
inline i64 dim_cusp(int k, const arith::FactoredInteger& N) {
  require_weight(k);
  Rational c2 = Rational(k / 4) - Rational(k - 1, 4);
  Rational c3 = Rational(k / 3) - Rational(k - 1, 3);
  Rational dim = Rational(k - 1, 12) * Rational(static_cast<i64>(arith::nu(N)));
  dim -= Rational(static_cast<i64>(cusp_count(N)), 2);
  dim += c2 * Rational(static_cast<i64>(elliptic2(N)));
  dim += c3 * Rational(static_cast<i64>(elliptic3(N)));
  if (dim.den() != 1) throw std::logic_error("dim_cusp: non-integral dimension");
  if (dim.num() < 0) throw std::logic_error("dim_cusp: negative dimension");
  return static_cast<i64>(dim.num());
}

// Dimension of the new subspace at level N, by double Moebius inversion
// across divisors: the weighting is multiplicative with value -2 at p,
// 1 at p^2, and 0 at higher prime powers.
inline i64 newform_dim(int k, const arith::FactoredInteger& N) {
  require_weight(k);
  i64 total = 0;
  for (const auto& d : N.divisor_factorizations()) {
    auto q = N.divide_by(d);
    i64 w = 1;
    for (const auto& pp : q.factors()) {
      if (pp.e == 1) {
        w *= -2;
      } else if (pp.e == 2) {
        w *= 1;
      } else {
        w = 0;
        break;
      }
    }
    if (w != 0) total += w * dim_cusp(k, d);
  }
  return total;
}

}  // namespace traceform::oracles
