#pragma once

// One-level density of low-lying zeros across the newform family: the
// explicit-formula prime sum P*, the estimator D1 = E(phi) - P*/|H*|, and
// the five classical kernels W1(G) together with their Fourier-side forms.
//
// Test functions come in (phi, phi_hat) pairs with phi_hat supported in
// [-sigma, sigma]; the pair is certified at construction by checking the
// quadrature identity integral(phi) = phi_hat(0) to 1e-8.  Kernel integrals
// are evaluated on both sides: the Fourier side is piecewise exact for
// families that supply a closed hat integral, the time side closes its tail
// analytically through the family's tail mass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "traceform/arith.hpp"
#include "traceform/bessel.hpp"
#include "traceform/kloosterman.hpp"
#include "traceform/newform_sums.hpp"
#include "traceform/oracles.hpp"
#include "traceform/petersson.hpp"
#include "traceform/summation.hpp"

namespace traceform::density {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using arith::FactoredInteger;

namespace detail {

inline constexpr double kPi = std::numbers::pi;

// 15-point Gauss-Legendre rule on [-1, 1]: node 0 plus symmetric pairs.
// Exact through polynomial degree 29.
inline constexpr double kGlNode[8] = {
    0.0000000000000000, 0.2011940939974345, 0.3941513470775634,
    0.5709721726085388, 0.7244177313601701, 0.8482065834104272,
    0.9372733924007060, 0.9879925180204854};
inline constexpr double kGlWeight[8] = {
    0.2025782419255613, 0.1984314853271116, 0.1861610000155622,
    0.1662692058169939, 0.1395706779261543, 0.1071592204671719,
    0.0703660474881081, 0.0307532419961173};

template <class F>
double gauss15(F&& f, double a, double b) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = kGlWeight[0] * f(mid);
  for (int i = 1; i < 8; ++i) {
    double d = half * kGlNode[i];
    s += kGlWeight[i] * (f(mid - d) + f(mid + d));
  }
  return s * half;
}

// Composite rule with panels no wider than width; each panel must keep the
// integrand's phase advance small enough for gauss15 (width * frequency
// below ~16 radians keeps the per-panel error near machine precision).
template <class F>
double panel_integral(F&& f, double a, double b, double width) {
  if (!(b > a)) return 0.0;
  if (!(width > 0.0)) throw std::invalid_argument("panel_integral: width must be positive");
  u64 n = static_cast<u64>(std::ceil((b - a) / width));
  if (n == 0) n = 1;
  if (n > 50000000) throw std::invalid_argument("panel_integral: too many panels");
  double h = (b - a) / static_cast<double>(n);
  KahanAccumulator acc;
  for (u64 i = 0; i < n; ++i) {
    acc.add(gauss15(f, a + static_cast<double>(i) * h, a + static_cast<double>(i + 1) * h));
  }
  return acc.value();
}

// integral_z^inf sin(t)/t dt by repeated integration by parts; the dropped
// remainder is below 720 / z^7, so z >= 50 keeps it under 1e-9.
inline double si_upper(double z) {
  if (!(z >= 50.0)) throw std::invalid_argument("si_upper: asymptotic form needs z >= 50");
  double z2 = z * z;
  double fc = (1.0 - 2.0 / z2 * (1.0 - 12.0 / z2)) / z;
  double fs = (1.0 - 6.0 / z2 * (1.0 - 20.0 / z2)) / z2;
  return std::cos(z) * fc + std::sin(z) * fs;
}

inline double sinc_two_pi(double x) {
  double t = 2.0 * kPi * x;
  if (t == 0.0) return 1.0;
  return std::sin(t) / t;
}

}  // namespace detail

// Even test function phi with phi_hat supported in [-sigma, sigma].  tail_mass
// and envelope describe the decay of phi itself: tail_mass(T) is the exact
// integral of phi over |x| > T, and |phi(x)| <= envelope / x^2 for x != 0.
// phi_hat_integral, when supplied, returns the exact integral of phi_hat over
// [a, b] for 0 <= a <= b and lets kernel integrals close in closed form.
struct TestFunction {
  double sigma = 1.0;
  std::function<double(double)> phi;
  std::function<double(double)> phi_hat;
  std::string family = "custom";
  std::function<double(double)> tail_mass;
  double envelope = 0.0;
  std::function<double(double, double)> phi_hat_integral;
};

// Certifies the pair: phi integrates to phi_hat(0) within 1e-8, using panel
// quadrature on [-T, T] closed by the analytic tail mass.
inline TestFunction validated(TestFunction f) {
  if (!(f.sigma > 0.0) || !std::isfinite(f.sigma)) {
    throw std::invalid_argument("test function: support radius must be positive");
  }
  if (!f.phi || !f.phi_hat || !f.tail_mass) {
    throw std::invalid_argument("test function: phi, phi_hat and tail_mass are required");
  }
  if (!(f.envelope > 0.0)) {
    throw std::invalid_argument("test function: quadratic decay envelope is required");
  }
  double T = std::max(200.0, 200.0 / f.sigma);
  double width = std::min(0.5, 8.0 / (2.0 * detail::kPi * f.sigma));
  double mass = detail::panel_integral(f.phi, -T, T, width) + f.tail_mass(T);
  if (!(std::abs(mass - f.phi_hat(0.0)) <= 1e-8)) {
    throw std::invalid_argument("test function: quadrature check integral(phi) = phi_hat(0) failed");
  }
  return f;
}

// phi(x) = sigma (sin(pi sigma x) / (pi sigma x))^2, phi_hat(y) =
// max(0, 1 - |y|/sigma).  The tail mass integrates (1 - cos(2 pi sigma x))/
// (2 pi^2 sigma x^2) by parts, leaving one sine-integral tail.
inline TestFunction fejer_pair(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("fejer_pair: sigma must be positive");
  }
  TestFunction f;
  f.sigma = sigma;
  f.family = "fejer";
  f.phi = [sigma](double x) {
    double t = detail::kPi * sigma * x;
    if (t == 0.0) return sigma;
    double s = std::sin(t) / t;
    return sigma * s * s;
  };
  f.phi_hat = [sigma](double y) { return std::max(0.0, 1.0 - std::abs(y) / sigma); };
  f.tail_mass = [sigma](double T) {
    double a = 2.0 * detail::kPi * sigma;
    double z = a * T;
    return ((1.0 - std::cos(z)) / T + a * detail::si_upper(z)) /
           (detail::kPi * detail::kPi * sigma);
  };
  f.envelope = 1.0 / (detail::kPi * detail::kPi * sigma);
  f.phi_hat_integral = [sigma](double a, double b) {
    double hi = std::min(b, sigma), lo = std::min(a, hi);
    if (!(hi > lo)) return 0.0;
    return (hi - lo) - (hi * hi - lo * lo) / (2.0 * sigma);
  };
  return validated(std::move(f));
}

inline double E_phi(const TestFunction& f) { return f.phi_hat(0.0) + 0.5 * f.phi(0.0); }

enum class Group { U, Sp, O, SOeven, SOodd };

inline const char* group_name(Group g) {
  switch (g) {
    case Group::U: return "U";
    case Group::Sp: return "Sp";
    case Group::O: return "O";
    case Group::SOeven: return "SOeven";
    case Group::SOodd: return "SOodd";
  }
  throw std::logic_error("group_name: unknown group");
}

inline Group parse_group(const std::string& s) {
  if (s == "U") return Group::U;
  if (s == "Sp") return Group::Sp;
  if (s == "O") return Group::O;
  if (s == "SOeven") return Group::SOeven;
  if (s == "SOodd") return Group::SOodd;
  throw std::invalid_argument("unknown symmetry group: " + s);
}

inline const Group kAllGroups[5] = {Group::U, Group::Sp, Group::O, Group::SOeven,
                                    Group::SOodd};

// Continuous part of the one-level kernel W1(G); the point mass each kernel
// carries at the origin is reported by rmt_atom.  O averages the two special
// orthogonal kernels, so its continuous part is identically 1 and the atom
// has mass 1/2.
inline double rmt_kernel(Group g, double x) {
  switch (g) {
    case Group::U: return 1.0;
    case Group::Sp: return 1.0 - detail::sinc_two_pi(x);
    case Group::O: return 1.0;
    case Group::SOeven: return 1.0 + detail::sinc_two_pi(x);
    case Group::SOodd: return 1.0 - detail::sinc_two_pi(x);
  }
  throw std::logic_error("rmt_kernel: unknown group");
}

inline double rmt_atom(Group g) {
  switch (g) {
    case Group::U: return 0.0;
    case Group::Sp: return 0.0;
    case Group::O: return 0.5;
    case Group::SOeven: return 0.0;
    case Group::SOodd: return 1.0;
  }
  throw std::logic_error("rmt_atom: unknown group");
}

// Fourier side of W1(G): a delta of the given mass at t = 0 plus a density
// that is piecewise constant with breaks at |t| = 1.  On (-1, 1) every
// orthogonal flavor has density 1/2, which is what one-level statistics with
// phi_hat supported there cannot separate.  Boundary points evaluate to the
// outer value; integrals are insensitive to that choice.
struct HatValue {
  double atom = 0.0;
  double density = 0.0;
};

inline HatValue rmt_kernel_hat(Group g, double t) {
  bool in = std::abs(t) < 1.0;
  switch (g) {
    case Group::U: return {1.0, 0.0};
    case Group::Sp: return {1.0, in ? -0.5 : 0.0};
    case Group::O: return {1.0, 0.5};
    case Group::SOeven: return {1.0, in ? 0.5 : 0.0};
    case Group::SOodd: return {1.0, in ? 0.5 : 1.0};
  }
  throw std::logic_error("rmt_kernel_hat: unknown group");
}

namespace detail {

inline double phi_hat_integral(const TestFunction& f, double lo, double hi) {
  if (f.phi_hat_integral) return f.phi_hat_integral(lo, hi);
  hi = std::min(hi, f.sigma);
  lo = std::min(lo, hi);
  if (!(hi > lo)) return 0.0;
  return panel_integral(f.phi_hat, lo, hi, std::max((hi - lo) / 16.0, 1e-9));
}

}  // namespace detail

// integral phi_hat(t) W1hat(G)(t) dt: the atom picks out phi_hat(0), the
// piecewise constant density integrates phi_hat exactly over [0, min(1,
// sigma)] and, when sigma > 1, over [1, sigma].
inline double rmt_integral_fourier(Group g, const TestFunction& f) {
  double inner = rmt_kernel_hat(g, 0.0).density;
  double outer = rmt_kernel_hat(g, 1.0).density;
  double I = rmt_kernel_hat(g, 0.0).atom * f.phi_hat(0.0);
  I += inner * 2.0 * detail::phi_hat_integral(f, 0.0, std::min(1.0, f.sigma));
  if (f.sigma > 1.0) I += outer * 2.0 * detail::phi_hat_integral(f, 1.0, f.sigma);
  return I;
}

// integral phi(x) W1(G)(x) dx: panel quadrature of the continuous part on
// [-T, T], the atom times phi(0), and the family tail mass for the constant
// part of the kernel beyond T.  The dropped oscillatory remainder is below
// envelope / (2 pi T^2), under 1e-7 for the window chosen here.
inline double rmt_integral_time(Group g, const TestFunction& f) {
  if (!f.tail_mass) {
    throw std::invalid_argument("rmt_integral_time: test function lacks a tail integral");
  }
  double T = std::max(400.0, 400.0 / f.sigma);
  double width = std::min(0.5, 8.0 / (2.0 * detail::kPi * (f.sigma + 1.0)));
  double I = detail::panel_integral([&](double x) { return f.phi(x) * rmt_kernel(g, x); },
                                    -T, T, width);
  I += rmt_atom(g) * f.phi(0.0);
  I += f.tail_mass(T);
  return I;
}

// Canonical value: the Fourier side (piecewise exact for families with a
// closed hat integral), cross-checked against time-side quadrature.
inline double rmt_integral(Group g, const TestFunction& f) {
  double fourier = rmt_integral_fourier(g, f);
  double time = rmt_integral_time(g, f);
  if (!(std::abs(fourier - time) <= 1e-6)) {
    throw std::runtime_error("rmt_integral: time and Fourier sides disagree");
  }
  return fourier;
}

// Largest admissible phi_hat support radius, 2 log(kN) / log(k^2 N).
inline double support_limit(int k, u64 N) {
  double kk = static_cast<double>(k), nn = static_cast<double>(N);
  if (!(kk * kk * nn > 1.0)) throw std::invalid_argument("support_limit: conductor must exceed 1");
  return 2.0 * std::log(kk * nn) / std::log(kk * kk * nn);
}

// R defaults to the analytic conductor k^2 N; u is the phi_hat support radius
// in log-R units and caps the primes at R^u.  X, Y and policy pass through to
// each pure_sum term (Y = 0 selects the per-prime schedule below).  strict
// enforces u < support_limit.
struct DensityConfig {
  int k = 12;
  FactoredInteger N;
  double R = 0.0;
  double u = 0.5;
  u64 X = 0;
  u64 Y = 0;
  petersson::TruncationPolicy policy{};
  bool strict = true;
};

namespace detail {

inline double effective_R(const DensityConfig& cfg) {
  return cfg.R > 0.0 ? cfg.R
                     : static_cast<double>(cfg.k) * static_cast<double>(cfg.k) *
                           static_cast<double>(cfg.N.value());
}

inline void validate(const DensityConfig& cfg) {
  petersson::WeightLevel wl(cfg.k, cfg.N);
  (void)wl;
  if (!(effective_R(cfg) > 1.0)) {
    throw std::invalid_argument("density: scaling parameter must exceed 1");
  }
  if (!(cfg.u > 0.0) || !std::isfinite(cfg.u)) {
    throw std::invalid_argument("density: support radius must be positive");
  }
  if (cfg.strict && !(cfg.u < support_limit(cfg.k, cfg.N.value()))) {
    throw std::invalid_argument("density: support radius exceeds the admissible range");
  }
}

// Per-prime m-cut for the prime sum.  Each term enters D1 divided by the
// family size, so its conditional m-tail is diluted by 1/|H*|; heavier
// primes are further damped by 1/sqrt(p) and get a shorter cut.
inline u64 prime_schedule_Y(u64 p) { return p <= 100 ? 40 : 24; }

// Primes are enumerated by sieve and the range R^u is capped.
inline constexpr double kPrimeCap = 1e7;

}  // namespace detail

// Weighted prime sum sum_{p not dividing N, p <= R^u} Delta*_{k,N}(p)
// * phi_hat(log p / log R) * 2 log p / (sqrt(p) log R).  tail_bound and
// heuristic_bound aggregate the per-term diagnostics with |weight| factors;
// converged is the conjunction of the inner flags.
struct PStarResult {
  double value = 0.0;
  double tail_bound = 0.0;
  double heuristic_bound = 0.0;
  u64 terms_used = 0;
  bool converged = true;
};

// Prime terms are independent: with policy.threads > 1 they are mapped in
// parallel (inner modulus sums forced serial) and reduced in index order, so
// the result is byte-identical to the serial run.  The cache, which is not
// synchronized, is consulted only on the serial path; cached and fresh terms
// are bit-identical, so this cannot change the value either.
inline PStarResult P_star(const DensityConfig& cfg, const TestFunction& f,
                          newform_sums::DeltaCache* cache = nullptr) {
  detail::validate(cfg);
  double R = detail::effective_R(cfg);
  double logR = std::log(R);
  double cap = std::min(std::pow(R, cfg.u), detail::kPrimeCap);
  PStarResult out;
  if (cap < 2.0) return out;
  std::vector<std::pair<u64, double>> terms;
  for (u64 p : arith::primes_up_to(static_cast<u64>(cap))) {
    if (cfg.N.value() % p == 0) continue;
    double lp = std::log(static_cast<double>(p));
    double w = f.phi_hat(lp / logR) * 2.0 * lp / (std::sqrt(static_cast<double>(p)) * logR);
    if (w == 0.0) continue;
    terms.push_back({p, w});
  }
  std::vector<newform_sums::PureSumResult> rs(terms.size());
  auto eval = [&](std::size_t i, newform_sums::DeltaCache* c, unsigned inner_threads) {
    newform_sums::PureSumOptions opt;
    opt.X = cfg.X;
    opt.Y = cfg.Y != 0 ? cfg.Y : detail::prime_schedule_Y(terms[i].first);
    opt.policy = cfg.policy;
    opt.policy.threads = inner_threads;
    opt.cache = c;
    rs[i] = newform_sums::pure_sum(cfg.k, cfg.N, terms[i].first, opt);
  };
  unsigned t = cfg.policy.threads == 0 ? 1 : cfg.policy.threads;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (t > hw) t = hw;
  if (t <= 1 || terms.size() <= 1) {
    for (std::size_t i = 0; i < terms.size(); ++i) eval(i, cache, cfg.policy.threads);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w0 = 0; w0 < t; ++w0) {
      pool.emplace_back([&, w0] {
        for (std::size_t i = w0; i < terms.size(); i += t) eval(i, nullptr, 1);
      });
    }
    for (auto& th : pool) th.join();
  }
  KahanAccumulator val, tail, heur;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    val.add(rs[i].value * terms[i].second);
    tail.add(rs[i].tail_bound * std::abs(terms[i].second));
    heur.add(rs[i].heuristic_bound * std::abs(terms[i].second));
    out.converged = out.converged && rs[i].converged;
  }
  out.value = val.value();
  out.tail_bound = tail.value();
  out.heuristic_bound = heur.value();
  out.terms_used = rs.size();
  return out;
}

// D1 = E(phi) - P*/|H*| with |H*| from the dimension formula.  A correction
// of size O(log log kN / log R), which would need per-form zero data, is
// dropped here; downstream comparisons absorb it in their tolerances.
struct OneLevelEstimate {
  double E = 0.0;
  PStarResult prime_sum;
  i64 card = 0;
  double P_star_over_card = 0.0;
  double D1 = 0.0;
};

inline OneLevelEstimate one_level_estimate(const DensityConfig& cfg, const TestFunction& f,
                                           newform_sums::DeltaCache* cache = nullptr) {
  OneLevelEstimate out;
  out.E = E_phi(f);
  out.prime_sum = P_star(cfg, f, cache);
  out.card = oracles::newform_dim(cfg.k, cfg.N);
  if (out.card <= 0) {
    throw std::invalid_argument("one_level_estimate: the family is empty at this weight and level");
  }
  out.P_star_over_card = out.prime_sum.value / static_cast<double>(out.card);
  out.D1 = out.E - out.P_star_over_card;
  return out;
}

// Single-modulus diagnostic sum 2 pi i^k sum_{p not dividing N, p <= R^u}
// S(m^2, p; c) J_(k-1)(4 pi m sqrt(p) / c) * phi_hat(log p / log R)
// * 2 log p / (sqrt(p) log R), with i^k = (-1)^(k/2).  When every Bessel
// argument z satisfies 3z <= k the power-series regime gives |J_(k-1)(z)|
// <= 2^-k, so |value| <= 2 pi 2^-k (sum of |weights|) c; that envelope is
// reported for comparison.
struct QStarResult {
  double value = 0.0;
  u64 terms_used = 0;
  bool smallz_regime = false;
  double regime_bound = 0.0;
};

inline QStarResult q_star(const DensityConfig& cfg, u64 m, u64 c, const TestFunction& f) {
  detail::validate(cfg);
  if (m == 0 || c == 0) throw std::invalid_argument("q_star: m and c must be positive");
  u64 mm = arith::detail::checked_mul_u64(m, m);
  if (mm > static_cast<u64>(std::numeric_limits<i64>::max())) {
    throw std::invalid_argument("q_star: m^2 does not fit a signed 64-bit value");
  }
  double R = detail::effective_R(cfg);
  double logR = std::log(R);
  double cap = std::min(std::pow(R, cfg.u), detail::kPrimeCap);
  QStarResult out;
  if (cap < 2.0) return out;
  double sign = cfg.k % 4 == 0 ? 1.0 : -1.0;
  KahanAccumulator acc, wsum;
  u64 p_last = 0;
  for (u64 p : arith::primes_up_to(static_cast<u64>(cap))) {
    if (cfg.N.value() % p == 0) continue;
    double lp = std::log(static_cast<double>(p));
    double w = f.phi_hat(lp / logR) * 2.0 * lp / (std::sqrt(static_cast<double>(p)) * logR);
    if (w == 0.0) continue;
    double z = 4.0 * detail::kPi * static_cast<double>(m) *
               std::sqrt(static_cast<double>(p)) / static_cast<double>(c);
    double s = kloosterman::kloosterman(static_cast<i64>(mm), static_cast<i64>(p), c);
    acc.add(s * bessel::bessel_j(cfg.k - 1, z) * w);
    wsum.add(std::abs(w));
    p_last = p;
    ++out.terms_used;
  }
  out.value = 2.0 * detail::kPi * sign * acc.value();
  if (out.terms_used > 0) {
    double zmax = 4.0 * detail::kPi * static_cast<double>(m) *
                  std::sqrt(static_cast<double>(p_last)) / static_cast<double>(c);
    if (3.0 * zmax <= static_cast<double>(cfg.k)) {
      out.smallz_regime = true;
      out.regime_bound = 2.0 * detail::kPi * std::pow(2.0, -cfg.k) * wsum.value() *
                         static_cast<double>(c);
    }
  }
  return out;
}

}  // namespace traceform::density
