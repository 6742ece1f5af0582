#pragma once

// Spectral sums over newforms of arbitrary level, computed purely from the
// geometric (Kloosterman) side: the pure sum Delta*_{k,N}(n) as a
// Moebius-weighted combination of full-space averages Delta_{k,M}(m^2, n),
// newform cardinality estimates, the weighted spectral sum evaluated from
// eigenvalue data, and a round-trip check of the two inversion identities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "traceform/arith.hpp"
#include "traceform/basis.hpp"
#include "traceform/oracles.hpp"
#include "traceform/petersson.hpp"

namespace traceform::newform_sums {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using arith::FactoredInteger;

// Memoizes inner Delta_{k,M}(m^2, n) evaluations across pure_sum calls; the
// key includes the truncation request so cached values are bit-identical to
// fresh ones. Not internally synchronized.
class DeltaCache {
 public:
  using Key = std::tuple<int, u64, u64, u64, int, double>;

  petersson::TruncatedSum get(int k, const FactoredInteger& M, u64 m, u64 n,
                              const petersson::TruncationPolicy& pol) {
    double knob = pol.mode == petersson::TruncationMode::target_tolerance
                      ? pol.tol
                      : static_cast<double>(pol.c_max);
    Key key{k, M.value(), m, n, static_cast<int>(pol.mode), knob};
    auto it = map_.find(key);
    if (it != map_.end()) {
      ++hits_;
      return it->second;
    }
    auto r = petersson::delta_full(petersson::WeightLevel(k, M), m, n, pol);
    map_.emplace(key, r);
    return r;
  }

  std::size_t size() const { return map_.size(); }
  std::size_t hits() const { return hits_; }

 private:
  std::map<Key, petersson::TruncatedSum> map_;
  std::size_t hits_ = 0;
};

struct PureSumResult {
  double value = 0.0;
  // Rigorous: aggregated truncation tails of the inner modulus sums.
  double tail_bound = 0.0;
  // The conditional remainder guideline kN(X^-1 + Y^-1/2)(nkNXY)^0.1;
  // diagnostic only, never folded into tail_bound.
  double heuristic_bound = 0.0;
  // max - min of the running total over the last decade of the m-sum,
  // an empirical stability surrogate for its conditional convergence.
  double oscillation = 0.0;
  u64 terms_used = 0;
  u64 y_used = 0;
  bool converged = true;
};

struct PureSumOptions {
  u64 X = 0;  // L-cut; 0 means include every divisor of N
  u64 Y = 0;  // m-cut; 0 picks the smallness-regime default below
  petersson::TruncationPolicy policy{};
  DeltaCache* cache = nullptr;
};

namespace detail {

struct Branch {
  FactoredInteger L, M;
  int mu;        // moebius(L), nonzero
  double coeff;  // (k-1)/12 * M * prod_{p^2 | M} (p^2 - 1)/p^2, positive
};

inline std::vector<Branch> branches(int k, const FactoredInteger& N, u64 X) {
  std::vector<Branch> out;
  for (const auto& L : N.divisor_factorizations()) {
    if (L.value() > X) continue;
    int mu = arith::moebius(L);
    if (mu == 0) continue;
    FactoredInteger M = N.divide_by(L);
    double coeff = (k - 1) / 12.0 * static_cast<double>(M.value());
    for (const auto& pp : M.factors()) {
      if (pp.e < 2) continue;
      double p2 = static_cast<double>(pp.p) * static_cast<double>(pp.p);
      coeff *= (p2 - 1.0) / p2;
    }
    out.push_back({L, std::move(M), mu, coeff});
  }
  return out;
}

// Smallness-regime guideline Y ~ guard * k * M_min / (12 pi sqrt(n)) with
// guard = 3, floored at 16 so small weights still get a usable default.
inline u64 default_Y(int k, const std::vector<Branch>& br, u64 n) {
  u64 m_min = br.empty() ? 1 : br.front().M.value();
  for (const auto& b : br) m_min = std::min(m_min, b.M.value());
  double y = 3.0 * k * static_cast<double>(m_min) /
             (12.0 * std::acos(-1.0) * std::sqrt(static_cast<double>(n)));
  return std::max<u64>(16, static_cast<u64>(y));
}

}  // namespace detail

// Delta*_{k,N}(n) = (k-1)/12 sum_{LM=N} mu(L) M prod_{p^2|M}(p^2/(p^2-1))^-1
//                   sum_{(m,M)=1} m^-1 Delta_{k,M}(m^2, n),
// truncated at L <= X, m <= Y. Each inner average carries its own diagonal
// delta(m^2, n), so the perfect-square diagonal term appears automatically
// exactly when n = m^2 with m <= Y and (m, M) = 1.
inline PureSumResult pure_sum(int k, const FactoredInteger& N, u64 n,
                              const PureSumOptions& opt = {}) {
  if (k < 4 || k % 2 != 0)
    throw std::invalid_argument("pure_sum: weight must be even and at least 4");
  if (n == 0 || !N.coprime_to(n)) throw std::invalid_argument("pure_sum: n must be coprime to N");
  u64 X = opt.X ? opt.X : N.value();
  auto br = detail::branches(k, N, X);
  u64 Y = opt.Y ? opt.Y : detail::default_Y(k, br, n);

  DeltaCache local;
  DeltaCache& cache = opt.cache ? *opt.cache : local;

  PureSumResult out;
  out.y_used = Y;
  double run_min = 0.0, run_max = 0.0;
  bool window_open = false;
  u64 window_start = std::max<u64>(1, Y / 10);
  for (u64 m = 1; m <= Y; ++m) {
    for (const auto& b : br) {
      if (std::gcd(m, b.M.value()) != 1) continue;
      // The policy applies to each inner modulus sum unchanged; sizing tol
      // against sum_branches coeff * ln Y keeps the aggregate below a target
      // while letting a shared cache reuse entries across N, X and Y.
      auto d = cache.get(k, b.M, m * m, n, opt.policy);
      double w = b.coeff / static_cast<double>(m);
      out.value += b.mu * w * d.value;
      out.tail_bound += w * d.tail_bound;
      out.terms_used += d.terms_used;
      out.converged = out.converged && d.converged;
    }
    if (m >= window_start) {
      if (!window_open) {
        run_min = run_max = out.value;
        window_open = true;
      } else {
        run_min = std::min(run_min, out.value);
        run_max = std::max(run_max, out.value);
      }
    }
  }
  out.oscillation = window_open ? run_max - run_min : 0.0;

  double kN = static_cast<double>(k) * static_cast<double>(N.value());
  double Xd = static_cast<double>(X), Yd = static_cast<double>(Y);
  out.heuristic_bound =
      kN * (1.0 / Xd + 1.0 / std::sqrt(Yd)) * std::pow(static_cast<double>(n) * kN * Xd * Yd, 0.1);
  return out;
}

inline PureSumResult pure_sum(int k, u64 N, u64 n, const PureSumOptions& opt = {}) {
  return pure_sum(k, FactoredInteger::factor(N), n, opt);
}

struct CardinalityEstimate {
  PureSumResult sum;
  double main_term = 0.0;    // (k-1) eta(N) / 12
  double sandwich_lo = 0.0;  // (k-1) phi(N) A / 12
  double sandwich_hi = 0.0;  // (k-1) phi(N) / 12
  i64 rounded = 0;
  i64 oracle_dim = 0;
};

inline CardinalityEstimate cardinality_estimate(int k, const FactoredInteger& N,
                                                const PureSumOptions& opt = {}) {
  CardinalityEstimate out;
  out.sum = pure_sum(k, N, 1, opt);
  double scale = (k - 1) / 12.0;
  out.main_term = scale * static_cast<double>(arith::eta(N));
  double phi = static_cast<double>(arith::euler_phi(N));
  out.sandwich_lo = scale * phi * arith::artin_type_constant();
  out.sandwich_hi = scale * phi;
  out.rounded = static_cast<i64>(std::llround(out.sum.value));
  out.oracle_dim = oracles::newform_dim(k, N);
  return out;
}

// A newform's local data plus its externally supplied global weight Z(1,f);
// global weights are inputs, never computed here.
struct WeightedForm {
  basis::NewformLocalData f;
  double z_global = 1.0;
};

// Spectral side of the coprime trace identity
//   Delta_{k,N}(m,n) = 12/((k-1)N) prod_{p^2|N} p^2/(p^2-1)
//                      sum_{M|N} sum_{f of level M} (Z_N(1,f)/Z(1,f)) lambda_f(m) lambda_f(n),
// evaluated from supplied eigen-data. The data must cover every divisor of N.
inline double delta_star_weighted_via_eigendata(int k, const FactoredInteger& N, u64 m, u64 n,
                                                const std::vector<WeightedForm>& forms) {
  if (m == 0 || n == 0 || !N.coprime_to(m) || !N.coprime_to(n))
    throw std::invalid_argument("delta_star_weighted_via_eigendata: m, n must be coprime to N");
  for (const auto& wf : forms) {
    if (wf.f.k != k)
      throw std::invalid_argument("delta_star_weighted_via_eigendata: mixed weights in data");
    if (!wf.f.M.divides(N))
      throw std::invalid_argument("delta_star_weighted_via_eigendata: form level does not divide N");
    if (wf.z_global <= 0.0)
      throw std::invalid_argument("delta_star_weighted_via_eigendata: Z(1,f) must be positive");
  }
  for (u64 M : N.divisors()) {
    bool covered = false;
    for (const auto& wf : forms) covered = covered || wf.f.M.value() == M;
    if (!covered)
      throw std::invalid_argument("delta_star_weighted_via_eigendata: no data for level " +
                                  std::to_string(M));
  }
  FactoredInteger mf = FactoredInteger::factor(m), nf = FactoredInteger::factor(n);
  double sum = 0.0;
  for (const auto& wf : forms)
    sum += basis::z_N(wf.f, N) / wf.z_global * basis::hecke_lambda(wf.f, mf) *
           basis::hecke_lambda(wf.f, nf);
  double pref = 12.0 / ((k - 1) * static_cast<double>(N.value()));
  for (const auto& pp : N.factors()) {
    if (pp.e < 2) continue;
    double p2 = static_cast<double>(pp.p) * static_cast<double>(pp.p);
    pref *= p2 / (p2 - 1.0);
  }
  return pref * sum;
}

namespace detail {

// sum_{ell | A^infty, (ell, B) = 1} lambda_f(ell^2) / ell, in closed form:
// one geometric local factor per prime of A away from B. Every such prime is
// unramified for f whenever f's level divides B, which all call sites ensure.
inline double ell_sum_closed(const basis::NewformLocalData& f, const FactoredInteger& A,
                             const FactoredInteger& B) {
  double out = 1.0;
  for (const auto& pp : A.factors())
    if (B.exponent_of(pp.p) == 0) out *= basis::z_local(f, pp.p);
  return out;
}

}  // namespace detail

// Direct weighted sum over the level-N synthetic forms in the spectrum.
inline double delta_star_synthetic(const FactoredInteger& N, u64 m, u64 n,
                                   const std::vector<WeightedForm>& spectrum) {
  FactoredInteger mf = FactoredInteger::factor(m), nf = FactoredInteger::factor(n);
  double sum = 0.0;
  for (const auto& wf : spectrum) {
    if (wf.f.M.value() != N.value()) continue;
    sum += basis::z_N(wf.f, N) / wf.z_global * basis::hecke_lambda(wf.f, mf) *
           basis::hecke_lambda(wf.f, nf);
  }
  return sum;
}

struct InversionResidual {
  double direct = 0.0;
  double rebuilt = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

// Round trip of the two inversion identities on a synthetic spectrum. The
// forward identity expands each full-space average Delta_{k,M} spectrally
// over levels W | M; substituting it into the ell-weighted sums
//   T(L, M) = sum_{ell | L^infty, (ell, M) = 1} ell^-1 Delta_{k,M}(m ell^2, n)
// gives closed-form geometric ell factors because (m, N) = 1 keeps every
// lambda argument multiplicative. The backward identity then reassembles
// Delta*_{k,N}(m,n), which must match the direct level-N sum.
inline InversionResidual inversion_residual(int k, const FactoredInteger& N, u64 m, u64 n,
                                            const std::vector<WeightedForm>& spectrum) {
  if (m == 0 || n == 0 || !N.coprime_to(m) || !N.coprime_to(n))
    throw std::invalid_argument("inversion_residual: m, n must be coprime to N");
  FactoredInteger mf = FactoredInteger::factor(m), nf = FactoredInteger::factor(n);

  double rebuilt = 0.0;
  for (const auto& L : N.divisor_factorizations()) {
    int muL = arith::moebius(L);
    if (muL == 0) continue;
    FactoredInteger M = N.divide_by(L);

    // T(L, M), with the forward identity's prefactor 12/((k-1)M) prod p^2/(p^2-1).
    double t = 0.0;
    for (const auto& Q : M.divisor_factorizations()) {
      FactoredInteger W = M.divide_by(Q);
      for (const auto& wf : spectrum) {
        if (wf.f.M.value() != W.value()) continue;
        t += basis::z_N(wf.f, W) / wf.z_global * basis::hecke_lambda(wf.f, mf) *
             basis::hecke_lambda(wf.f, nf) * detail::ell_sum_closed(wf.f, L, M) *
             detail::ell_sum_closed(wf.f, Q, W);
      }
    }
    double pref = 12.0 / ((k - 1) * static_cast<double>(M.value()));
    for (const auto& pp : M.factors()) {
      if (pp.e < 2) continue;
      double p2 = static_cast<double>(pp.p) * static_cast<double>(pp.p);
      pref *= p2 / (p2 - 1.0);
    }
    t *= pref;

    // Backward identity's branch weight.
    double coeff = (k - 1) / 12.0 * static_cast<double>(M.value());
    for (const auto& pp : M.factors()) {
      if (pp.e < 2) continue;
      double p2 = static_cast<double>(pp.p) * static_cast<double>(pp.p);
      coeff *= (p2 - 1.0) / p2;
    }
    rebuilt += muL * coeff * t;
  }

  InversionResidual r;
  r.direct = delta_star_synthetic(N, m, n, spectrum);
  r.rebuilt = rebuilt;
  r.abs_error = std::abs(r.rebuilt - r.direct);
  r.rel_error = r.abs_error / std::max(1e-300, std::abs(r.direct));
  return r;
}

inline bool inversion_pair_check(int k, const FactoredInteger& N, u64 m, u64 n,
                                 const std::vector<WeightedForm>& spectrum, double tol = 1e-9) {
  auto r = inversion_residual(k, N, m, n, spectrum);
  return r.abs_error <= tol * std::max(1.0, std::abs(r.direct));
}

// Synthetic spectrum for round-trip tests: a few admissible forms at every
// level W | N, with eigenvalues drawn inside the convergence region at every
// prime of N and of extra_primes, and arbitrary positive global weights.
inline std::vector<WeightedForm> make_synthetic_spectrum(int k, const FactoredInteger& N,
                                                         const std::vector<u64>& extra_primes,
                                                         unsigned seed, int forms_per_level = 2) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> lam(-1.8, 1.8), zg(0.5, 2.0);
  std::vector<u64> primes = extra_primes;
  for (const auto& pp : N.factors()) primes.push_back(pp.p);
  std::sort(primes.begin(), primes.end());
  primes.erase(std::unique(primes.begin(), primes.end()), primes.end());

  std::vector<WeightedForm> out;
  for (const auto& W : N.divisor_factorizations()) {
    for (int i = 0; i < forms_per_level; ++i) {
      std::map<u64, double> unram;
      for (u64 p : primes)
        if (W.exponent_of(p) == 0) unram[p] = lam(rng);
      std::map<u64, int> signs;
      for (const auto& pp : W.factors())
        if (pp.e == 1) signs[pp.p] = (rng() & 1) ? 1 : -1;
      out.push_back({basis::NewformLocalData::validated(k, W, unram, signs), zg(rng)});
    }
  }
  return out;
}

}  // namespace traceform::newform_sums
