#pragma once

// Kloosterman sums S(m, n; c) = sum over units x mod c of e((m x + n xbar)/c),
// evaluated directly in O(c log c).  The sum is real by the x -> -x symmetry;
// the sine component is accumulated anyway and checked against zero, which
// catches any defect in the inverse computation or angle reduction.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "traceform/summation.hpp"

namespace traceform::kloosterman {

using u64 = std::uint64_t;
using i64 = std::int64_t;

// Inverse of a mod c for c >= 1; throws if gcd(a, c) != 1.
inline u64 mod_inverse(u64 a, u64 c) {
  if (c == 0) throw std::invalid_argument("mod_inverse: zero modulus");
  if (c == 1) return 0;
  i64 r0 = static_cast<i64>(c), r1 = static_cast<i64>(a % c);
  i64 s0 = 0, s1 = 1;
  while (r1 != 0) {
    i64 q = r0 / r1;
    i64 r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    i64 s2 = s0 - q * s1;
    s0 = s1;
    s1 = s2;
  }
  if (r0 != 1) throw std::invalid_argument("mod_inverse: not a unit");
  i64 inv = s0 % static_cast<i64>(c);
  if (inv < 0) inv += static_cast<i64>(c);
  return static_cast<u64>(inv);
}

struct KloostermanEval {
  double value;
  double imag;  // raw sine-component residual, bounded in tests and asserted below
  u64 units;    // number of unit residues encountered, equals phi(c)
};

inline KloostermanEval kloosterman_full(i64 m, i64 n, u64 c) {
  if (c == 0) throw std::invalid_argument("kloosterman: zero modulus");
  if (c > (u64(1) << 31)) throw std::invalid_argument("kloosterman: modulus above 2^31");
  if (c == 1) return {1.0, 0.0, 1};

  i64 ci = static_cast<i64>(c);
  u64 mr = static_cast<u64>(((m % ci) + ci) % ci);
  u64 nr = static_cast<u64>(((n % ci) + ci) % ci);

  KahanAccumulator re, im;
  u64 units = 0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (u64 x = 1; x < c; ++x) {
    // Extended Euclid inlined: rejects non-units and yields the inverse.
    i64 r0 = ci, r1 = static_cast<i64>(x), s0 = 0, s1 = 1;
    while (r1 != 0) {
      i64 q = r0 / r1;
      i64 r2 = r0 - q * r1;
      r0 = r1;
      r1 = r2;
      i64 s2 = s0 - q * s1;
      s0 = s1;
      s1 = s2;
    }
    if (r0 != 1) continue;
    i64 inv = s0 % ci;
    if (inv < 0) inv += ci;
    ++units;
    u64 a = (mr * x + nr * static_cast<u64>(inv)) % c;
    double theta = two_pi * static_cast<double>(a) / static_cast<double>(c);
    re.add(std::cos(theta));
    im.add(std::sin(theta));
  }

  KloostermanEval out{re.value(), im.value(), units};
  if (std::abs(out.imag) > 1e-9 * static_cast<double>(units)) {
    throw std::runtime_error("kloosterman: imaginary residual exceeds tolerance");
  }
  return out;
}

inline double kloosterman(i64 m, i64 n, u64 c) { return kloosterman_full(m, n, c).value; }

}  // namespace traceform::kloosterman
