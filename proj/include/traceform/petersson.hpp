#pragma once

// Harmonically weighted spectral average over the full cusp form basis of
// weight k and level N, evaluated from the dual side: identity term plus a
// sum of Kloosterman sums against Bessel factors over moduli divisible by N.
//
// Truncation is certified: the dropped mass is bounded using |S(m,n;c)| <= c
// and the envelope |J_(k-1)(x)| <= (x/2)^(k-1)/(k-1)!, giving
//   tail(after j_max) <= 2 pi (2 pi sqrt(mn)/N)^(k-1)/(k-1)!
//                        * J1^(1-k) (1 + J1/(k-2)),   J1 = j_max + 1,
// evaluated in log space so large weights cannot overflow or underflow.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "traceform/arith.hpp"
#include "traceform/bessel.hpp"
#include "traceform/kloosterman.hpp"
#include "traceform/summation.hpp"

namespace traceform::petersson {

using u64 = std::uint64_t;
using i64 = std::int64_t;

struct WeightLevel {
  int k;
  arith::FactoredInteger N;

  WeightLevel(int weight, arith::FactoredInteger level) : k(weight), N(std::move(level)) {
    if (k < 4 || k % 2 != 0) throw std::invalid_argument("weight must be even and at least 4");
  }
  WeightLevel(int weight, u64 level) : WeightLevel(weight, arith::FactoredInteger::factor(level)) {}
};

enum class TruncationMode { target_tolerance, fixed_cmax };

struct TruncationPolicy {
  TruncationMode mode = TruncationMode::target_tolerance;
  double tol = 1e-8;        // ceiling for the certified tail bound
  u64 c_max = 0;            // largest modulus when mode == fixed_cmax
  u64 hard_cap = 50000000;  // largest modulus tolerance mode may reach
  unsigned threads = 1;
};

struct TruncatedSum {
  double value = 0.0;
  double tail_bound = 0.0;
  u64 terms_used = 0;  // moduli summed, i.e. multiples of N reached
  bool converged = true;
};

namespace detail {

inline void require_weight(int k) {
  if (k < 4 || k % 2 != 0) throw std::invalid_argument("weight must be even and at least 4");
}

// log of the certified bound on the mass dropped after summing j <= j_max.
inline double log_tail_after(int k, u64 N, u64 m, u64 n, u64 j_max) {
  double log_a = std::log(2.0 * std::numbers::pi) +
                 0.5 * (std::log(static_cast<double>(m)) + std::log(static_cast<double>(n))) -
                 std::log(static_cast<double>(N));
  double j1 = static_cast<double>(j_max) + 1.0;
  return std::log(2.0 * std::numbers::pi) + (k - 1) * (log_a - std::log(j1)) -
         std::lgamma(static_cast<double>(k)) + std::log1p(j1 / (k - 2));
}

inline double tail_after(int k, u64 N, u64 m, u64 n, u64 j_max) {
  double lt = log_tail_after(k, N, m, n, j_max);
  if (lt > 700.0) return std::numeric_limits<double>::infinity();
  return std::exp(lt);
}

inline TruncatedSum delta_impl(int k, u64 N, u64 m, u64 n, const TruncationPolicy& pol) {
  require_weight(k);
  if (N == 0) throw std::invalid_argument("delta_full: level must be positive");
  if (m == 0 || n == 0) throw std::invalid_argument("delta_full: indices must be positive");

  u64 modulus_cap = u64(1) << 31;
  u64 j_cap = modulus_cap / N;

  u64 j_max = 0;
  bool converged = true;
  if (pol.mode == TruncationMode::fixed_cmax) {
    j_max = pol.c_max / N;
    if (j_max > j_cap) throw std::invalid_argument("delta_full: c_max above supported modulus range");
  } else {
    if (pol.tol <= 0.0) throw std::invalid_argument("delta_full: tol must be positive");
    u64 cap = std::min(pol.hard_cap / N, j_cap);
    double log_tol = std::log(pol.tol);
    if (log_tail_after(k, N, m, n, 0) <= log_tol) {
      j_max = 0;
    } else if (log_tail_after(k, N, m, n, cap) > log_tol) {
      j_max = cap;
      converged = false;
    } else {
      u64 lo = 0, hi = 1;  // tail(lo) > tol, tail(hi) <= tol once found
      while (log_tail_after(k, N, m, n, hi) > log_tol) {
        lo = hi;
        hi = std::min(hi * 2, cap);
      }
      while (hi - lo > 1) {
        u64 mid = lo + (hi - lo) / 2;
        (log_tail_after(k, N, m, n, mid) > log_tol ? lo : hi) = mid;
      }
      j_max = hi;
    }
  }

  long double sqrt_mn = std::sqrt(static_cast<long double>(m) * static_cast<long double>(n));
  double x_num = static_cast<double>(4.0L * std::numbers::pi_v<long double> * sqrt_mn);

  double series = chunked_sum(j_max, pol.threads, 8, [&](u64 idx) {
    u64 c = (idx + 1) * N;
    double x = x_num / static_cast<double>(c);
    double s = kloosterman::kloosterman(static_cast<i64>(m), static_cast<i64>(n), c);
    return s / static_cast<double>(c) * bessel::bessel_j(k - 1, x);
  });

  double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
  TruncatedSum out;
  out.value = (m == n ? 1.0 : 0.0) + 2.0 * std::numbers::pi * sign * series;
  out.tail_bound = tail_after(k, N, m, n, j_max);
  out.terms_used = j_max;
  out.converged = converged;
  return out;
}

}  // namespace detail

inline TruncatedSum delta_full(const WeightLevel& wl, u64 m, u64 n, const TruncationPolicy& pol = {}) {
  return detail::delta_impl(wl.k, wl.N.value(), m, n, pol);
}

inline TruncatedSum delta_full(int k, u64 N, u64 m, u64 n, const TruncationPolicy& pol = {}) {
  return detail::delta_impl(k, N, m, n, pol);
}

}  // namespace traceform::petersson
