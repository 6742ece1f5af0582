#pragma once

// Per-newform multiplicative data: Hecke eigenvalues at prime powers, the
// basis coefficients xi_d(ell) that orthonormalize the oldform span of a
// fixed newform, and the local zeta factors Z_p(1,f).
//
// Eigenvalue data is an input, never a computation: level-one data comes from
// the q-expansion oracle, ramified primes carry the forced value +-p^(-1/2)
// (sign supplied externally) or 0, and synthetic data drives identity tests.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "traceform/arith.hpp"

namespace traceform::basis {

using u64 = std::uint64_t;
using arith::FactoredInteger;

struct NewformLocalData {
  int k = 12;
  FactoredInteger M;
  std::map<u64, double> lambda_p;

  // Enforces the admissibility box: |lambda(p)| <= 2 off the level, forced
  // values on it. ramified_signs must name exactly the primes p || M.
  static NewformLocalData validated(int k, FactoredInteger M, std::map<u64, double> unramified,
                                    const std::map<u64, int>& ramified_signs = {}) {
    if (k < 4 || k % 2 != 0) throw std::invalid_argument("NewformLocalData: weight must be even and at least 4");
    NewformLocalData f;
    f.k = k;
    f.M = std::move(M);
    for (const auto& [p, v] : unramified) {
      if (!arith::is_prime(p)) throw std::invalid_argument("NewformLocalData: non-prime key " + std::to_string(p));
      if (f.M.exponent_of(p) != 0)
        throw std::invalid_argument("NewformLocalData: eigenvalue at a level prime must come from its sign");
      if (!(std::abs(v) <= 2.0))
        throw std::invalid_argument("NewformLocalData: unramified eigenvalue outside [-2, 2]");
    }
    f.lambda_p = std::move(unramified);
    for (const auto& pp : f.M.factors()) {
      if (pp.e == 1) {
        auto it = ramified_signs.find(pp.p);
        if (it == ramified_signs.end())
          throw std::invalid_argument("NewformLocalData: missing sign for prime " + std::to_string(pp.p));
        if (it->second != 1 && it->second != -1)
          throw std::invalid_argument("NewformLocalData: sign must be +1 or -1");
        f.lambda_p[pp.p] = it->second / std::sqrt(static_cast<double>(pp.p));
      } else {
        f.lambda_p[pp.p] = 0.0;
      }
    }
    for (const auto& [p, s] : ramified_signs) {
      (void)s;
      if (f.M.exponent_of(p) != 1)
        throw std::invalid_argument("NewformLocalData: sign given for a prime not exactly dividing the level");
    }
    return f;
  }

  // No admissibility checks; used for synthetic spectra in identity tests.
  static NewformLocalData unchecked(int k, FactoredInteger M, std::map<u64, double> lambda) {
    NewformLocalData f;
    f.k = k;
    f.M = std::move(M);
    f.lambda_p = std::move(lambda);
    return f;
  }
};

namespace detail {

inline double lambda_at(const NewformLocalData& f, u64 p) {
  auto it = f.lambda_p.find(p);
  if (it == f.lambda_p.end())
    throw std::invalid_argument("basis: no eigenvalue stored for prime " + std::to_string(p));
  return it->second;
}

inline FactoredInteger gcd_factored(const FactoredInteger& a, const FactoredInteger& b) {
  std::vector<arith::PrimePower> pps;
  for (const auto& pp : a.factors()) {
    int e = std::min(pp.e, b.exponent_of(pp.p));
    if (e > 0) pps.push_back({pp.p, e});
  }
  return FactoredInteger::from_prime_powers(std::move(pps));
}

inline double ipow(double b, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace detail

inline double hecke_lambda(const NewformLocalData& f, const FactoredInteger& n) {
  double out = 1.0;
  for (const auto& pp : n.factors()) {
    double lp = detail::lambda_at(f, pp.p);
    double chi = arith::chi0(f.M, static_cast<std::int64_t>(pp.p));
    double prev = 1.0, cur = lp;
    for (int j = 1; j < pp.e; ++j) {
      double next = lp * cur - chi * prev;
      prev = cur;
      cur = next;
    }
    out *= cur;
  }
  return out;
}

inline double mu_f(const NewformLocalData& f, const FactoredInteger& c) {
  double out = 1.0;
  for (const auto& pp : c.factors()) {
    if (pp.e == 1)
      out *= -detail::lambda_at(f, pp.p);
    else if (pp.e == 2)
      out *= arith::chi0(f.M, static_cast<std::int64_t>(pp.p));
    else
      return 0.0;
  }
  return out;
}

inline double rho_f(const NewformLocalData& f, const FactoredInteger& c) {
  double out = 1.0;
  for (const auto& pp : c.factors()) {
    double lp = detail::lambda_at(f, pp.p);
    double ratio = lp / (static_cast<double>(pp.p) + 1.0);
    out *= 1.0 - static_cast<double>(pp.p) * ratio * ratio;
  }
  return out;
}

inline double r_f(const NewformLocalData& f, const FactoredInteger& c) {
  double out = 1.0;
  for (const auto& pp : c.factors()) {
    double p = static_cast<double>(pp.p);
    double lp = detail::lambda_at(f, pp.p);
    double s = 1.0 + arith::chi0(f.M, static_cast<std::int64_t>(pp.p)) / p;
    double factor = 1.0 - lp * lp / (p * s * s);
    // The two case simplifications are algebraic identities; enforce them so
    // a drifting rewrite cannot silently change the function.
    double expected = f.M.exponent_of(pp.p) == 0
                          ? 1.0 - p * (lp / (p + 1.0)) * (lp / (p + 1.0))
                          : 1.0 - lp * lp / p;
    if (std::abs(factor - expected) > 1e-12 * (1.0 + std::abs(expected)))
      throw std::logic_error("r_f: case simplification violated");
    out *= factor;
  }
  return out;
}

namespace detail {

// xi' for square-free d, xi'' for square-full d; ell | d in both.
inline double xi_squarefree(const NewformLocalData& f, const FactoredInteger& d,
                            const FactoredInteger& ell) {
  double r = r_f(f, d);
  if (r <= 0.0) throw std::invalid_argument("xi: r_f(d) <= 0, degenerate eigenvalue data");
  FactoredInteger q = d.divide_by(ell);
  double num = arith::moebius(q) * hecke_lambda(f, q);
  double den = std::sqrt(r) * std::sqrt(static_cast<double>(q.value())) * arith::beta(q, f.M).to_double();
  return num / den;
}

inline double xi_squarefull(const NewformLocalData& f, const FactoredInteger& d,
                            const FactoredInteger& ell) {
  double r = r_f(f, d);
  if (r <= 0.0) throw std::invalid_argument("xi: r_f(d) <= 0, degenerate eigenvalue data");
  FactoredInteger q = d.divide_by(ell);
  double ra = r * arith::alpha(d, f.M).to_double();
  return mu_f(f, q) / (std::sqrt(static_cast<double>(q.value())) * std::sqrt(ra));
}

}  // namespace detail

inline double xi(const NewformLocalData& f, const FactoredInteger& d, const FactoredInteger& ell) {
  if (!ell.divides(d)) throw std::invalid_argument("xi: ell must divide d");
  auto [d1, d2] = arith::squarefull_split(d);
  double a = detail::xi_squarefree(f, d1, detail::gcd_factored(d1, ell));
  double b = detail::xi_squarefull(f, d2, detail::gcd_factored(d2, ell));
  return a * b;
}

inline double xi_one_sum_direct(const NewformLocalData& f, const FactoredInteger& L) {
  if (arith::divisor_count_tau(L) > 1000000)
    throw std::invalid_argument("xi_one_sum_direct: divisor count too large");
  FactoredInteger one;
  double sum = 0.0;
  for (const auto& d : L.divisor_factorizations()) {
    double x = xi(f, d, one);
    sum += x * x;
  }
  return sum;
}

inline double xi_one_sum_closed(const NewformLocalData& f, const FactoredInteger& L,
                                const FactoredInteger& N) {
  if (N.value() != arith::detail::checked_mul_u64(L.value(), f.M.value()))
    throw std::invalid_argument("xi_one_sum_closed: N must equal L times the level");
  double out = 1.0;
  for (const auto& pp : L.factors()) {
    if (f.M.exponent_of(pp.p) != 0) continue;
    double rho = rho_f(f, FactoredInteger::factor(pp.p));
    if (rho <= 0.0) throw std::invalid_argument("xi_one_sum_closed: rho_f(p) <= 0");
    out /= rho;
  }
  for (const auto& pp : N.factors()) {
    if (pp.e < 2 || f.M.exponent_of(pp.p) >= 2) continue;
    double p2 = static_cast<double>(pp.p) * static_cast<double>(pp.p);
    out *= p2 / (p2 - 1.0);
  }
  return out;
}

// Z_p(1,f) = sum_j lambda_f(p^(2j)) p^(-j), by its closed local form.
inline double z_local(const NewformLocalData& f, u64 p) {
  double pd = static_cast<double>(p);
  int e = f.M.exponent_of(p);
  if (e >= 2) return 1.0;
  if (e == 1) return pd * pd / (pd * pd - 1.0);
  double rho = rho_f(f, FactoredInteger::factor(p));
  if (rho <= 0.0)
    throw std::invalid_argument("z_local: eigenvalue outside the geometric convergence region");
  return 1.0 / ((1.0 + 1.0 / pd) * rho);
}

inline double z_N(const NewformLocalData& f, const FactoredInteger& N) {
  double out = 1.0;
  for (const auto& pp : N.factors()) out *= z_local(f, pp.p);
  return out;
}

// Fourier coefficient of the basis vector f_d, with a_f(n) = lambda_f(n) n^((k-1)/2).
inline double fd_coefficient(const NewformLocalData& f, const FactoredInteger& d,
                             const FactoredInteger& n) {
  double sum = 0.0;
  for (const auto& ell : detail::gcd_factored(d, n).divisor_factorizations()) {
    FactoredInteger rest = n.divide_by(ell);
    double a_f = hecke_lambda(f, rest) * std::pow(static_cast<double>(rest.value()), 0.5 * (f.k - 1));
    sum += xi(f, d, ell) * detail::ipow(std::sqrt(static_cast<double>(ell.value())), f.k) * a_f;
  }
  return sum;
}

}  // namespace traceform::basis
