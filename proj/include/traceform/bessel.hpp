#pragma once

// Bessel functions of the first kind at integer order, for positive real
// argument.  Small arguments use the ascending series in long double; large
// arguments use Miller's backward recurrence normalized by
// J_0 + 2 J_2 + 2 J_4 + ... = 1.  The crossover keeps the series out of its
// cancellation regime and the recurrence out of its short-range regime.
//
// bessel_j_bound gives a rigorous pointwise bound (x/2)^nu / nu!, from the
// Poisson integral representation, capped at 1; bessel_j_bound_log is the
// same bound in log space for regimes where the direct form underflows.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace traceform::bessel {

namespace detail {

inline double bessel_j_series(int nu, double x) {
  long double half = static_cast<long double>(x) / 2.0L;
  long double t0 = std::exp(nu * std::log(half) - std::lgamma(static_cast<long double>(nu) + 1.0L));
  long double term = t0, sum = t0;
  long double q = half * half;
  for (int t = 1; t <= 600; ++t) {
    term *= -q / (static_cast<long double>(t) * (static_cast<long double>(nu) + t));
    sum += term;
    if (std::abs(term) < 1e-25L * std::abs(sum) + 1e-320L) break;
  }
  return static_cast<double>(sum);
}

inline double bessel_j_miller(int nu, double x) {
  double mx = std::max(static_cast<double>(nu), x);
  int start = static_cast<int>(mx) + 15 * static_cast<int>(std::sqrt(mx) + 1.0) + 30;
  if (start % 2 != 0) ++start;

  long double jp1 = 0.0L, j = 1e-30L;
  long double norm = 0.0L, target = 0.0L;
  for (int i = start; i >= 1; --i) {
    long double jm1 = (2.0L * i / x) * j - jp1;
    jp1 = j;
    j = jm1;
    // i - 1 is the order jm1 now approximates.
    if ((i - 1) % 2 == 0) norm += (i - 1 == 0) ? j : 2.0L * j;
    if (i - 1 == nu) target = j;
    if (std::abs(j) > 1e280L) {
      j *= 1e-280L;
      jp1 *= 1e-280L;
      norm *= 1e-280L;
      target *= 1e-280L;
    }
  }
  return static_cast<double>(target / norm);
}

}  // namespace detail

inline double bessel_j(int nu, double x) {
  if (nu < 0 || nu > 10000) throw std::invalid_argument("bessel_j: order must be in [0, 10^4]");
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("bessel_j: argument must be finite and nonnegative");
  if (x == 0.0) return nu == 0 ? 1.0 : 0.0;
  double crossover = std::max(12.0, static_cast<double>(nu) / 2.0);
  if (x <= crossover) return detail::bessel_j_series(nu, x);
  return detail::bessel_j_miller(nu, x);
}

inline double bessel_j_bound_log(int nu, double x) {
  if (nu < 0 || x <= 0.0) throw std::invalid_argument("bessel_j_bound_log: bad domain");
  double b = nu * std::log(x / 2.0) - std::lgamma(static_cast<double>(nu) + 1.0);
  return std::min(b, 0.0);
}

inline double bessel_j_bound(int nu, double x) {
  if (x == 0.0) return nu == 0 ? 1.0 : 0.0;
  return std::exp(bessel_j_bound_log(nu, x));
}

}  // namespace traceform::bessel
