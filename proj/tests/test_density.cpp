#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "traceform/density.hpp"

using traceform::arith::FactoredInteger;
using u64 = std::uint64_t;
namespace density = traceform::density;
using density::Group;

namespace {

FactoredInteger F(u64 n) { return FactoredInteger::factor(n); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

density::DensityConfig config(int k, u64 N, double u) {
  density::DensityConfig cfg;
  cfg.k = k;
  cfg.N = F(N);
  cfg.u = u;
  return cfg;
}

}  // namespace

TEST_CASE("panel quadrature is exact on high-degree polynomials", "[density]") {
  double p28 = density::detail::gauss15([](double x) { return std::pow(x, 28.0); }, -1.0, 1.0);
  CHECK(p28 == Catch::Approx(2.0 / 29.0).epsilon(1e-15));
  double osc = density::detail::panel_integral([](double x) { return std::cos(10.0 * x); },
                                               0.0, 1.0, 0.25);
  CHECK(osc == Catch::Approx(std::sin(10.0) / 10.0).margin(1e-15));
}

TEST_CASE("fejer pair satisfies its construction identities", "[density]") {
  for (double sigma : {0.5, 1.0, 1.9, 0.05, 8.0}) {
    auto f = density::fejer_pair(sigma);
    CHECK(f.phi_hat(0.0) == 1.0);
    CHECK(f.phi(0.0) == sigma);
    CHECK(f.family == "fejer");
    // evenness and hat support on a grid
    for (double x : {0.3, 1.07, 2.9, 17.0}) CHECK(f.phi(x) == f.phi(-x));
    for (double y : {1.0, 1.3, 2.5}) {
      CHECK(f.phi_hat(y * sigma) == 0.0);
      CHECK(f.phi_hat(-y * sigma) == 0.0);
    }
    CHECK(f.phi_hat(0.5 * sigma) == Catch::Approx(0.5).epsilon(1e-15));
  }
  CHECK_THROWS_AS(density::fejer_pair(0.0), std::invalid_argument);
  CHECK_THROWS_AS(density::fejer_pair(-1.0), std::invalid_argument);
}

TEST_CASE("tail mass telescopes against direct quadrature", "[density]") {
  for (double sigma : {0.5, 1.9}) {
    auto f = density::fejer_pair(sigma);
    double T1 = 300.0 / sigma, T2 = 900.0 / sigma;
    double width = std::min(0.5, 8.0 / (2.0 * density::detail::kPi * sigma));
    double seg = 2.0 * density::detail::panel_integral(f.phi, T1, T2, width);
    CHECK(seg + f.tail_mass(T2) == Catch::Approx(f.tail_mass(T1)).margin(1e-15));
  }
}

TEST_CASE("validation rejects inconsistent pairs", "[density]") {
  auto f = density::fejer_pair(1.0);
  SECTION("scaled phi breaks the quadrature identity") {
    auto bad = f;
    auto phi = f.phi;
    bad.phi = [phi](double x) { return 1.001 * phi(x); };
    auto tail = f.tail_mass;
    bad.tail_mass = [tail](double T) { return 1.001 * tail(T); };
    CHECK_THROWS_AS(density::validated(bad), std::invalid_argument);
  }
  SECTION("missing pieces") {
    auto bad = f;
    bad.phi = nullptr;
    CHECK_THROWS_AS(density::validated(bad), std::invalid_argument);
    bad = f;
    bad.tail_mass = nullptr;
    CHECK_THROWS_AS(density::validated(bad), std::invalid_argument);
    bad = f;
    bad.envelope = 0.0;
    CHECK_THROWS_AS(density::validated(bad), std::invalid_argument);
    bad = f;
    bad.sigma = -2.0;
    CHECK_THROWS_AS(density::validated(bad), std::invalid_argument);
  }
}

TEST_CASE("E_phi combines the two central values", "[density]") {
  CHECK(density::E_phi(density::fejer_pair(1.0)) == 1.5);
  CHECK(density::E_phi(density::fejer_pair(2.0)) == 2.0);
  CHECK(density::E_phi(density::fejer_pair(0.5)) == 1.25);
  density::TestFunction flat;  // formula check only, no validation needed
  flat.phi = [](double) { return 0.0; };
  flat.phi_hat = [](double) { return 7.25; };
  CHECK(density::E_phi(flat) == 7.25);
}

TEST_CASE("support limit closed form and limits", "[density]") {
  CHECK(density::support_limit(7, 7) == Catch::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(density::support_limit(12, 1000000) ==
        Catch::Approx(2.0 * std::log(1.2e7) / std::log(1.44e8)).epsilon(1e-14));
  CHECK(density::support_limit(12, 1000000) == Catch::Approx(1.74).margin(0.01));
  // monotone approach to 2 as N grows with the weight fixed
  CHECK(density::support_limit(2, 1000000000000ull) > 1.9);
  CHECK(density::support_limit(2, 1000000000000ull) < 2.0);
  CHECK(density::support_limit(2, 1000000000000ull) > density::support_limit(2, 1000000));
  CHECK(density::support_limit(12, 1000000000000ull) > density::support_limit(12, 1000000));
  CHECK_THROWS_AS(density::support_limit(1, 1), std::invalid_argument);
}

TEST_CASE("kernel values and atoms", "[density]") {
  CHECK(density::rmt_kernel(Group::U, 5.3) == 1.0);
  CHECK(density::rmt_kernel(Group::SOeven, 0.0) == 2.0);
  CHECK(density::rmt_kernel(Group::Sp, 0.0) == 0.0);
  CHECK(density::rmt_kernel(Group::SOodd, 0.25) ==
        Catch::Approx(1.0 - std::sin(density::detail::kPi / 2) / (density::detail::kPi / 2)));
  CHECK(density::rmt_atom(Group::U) == 0.0);
  CHECK(density::rmt_atom(Group::Sp) == 0.0);
  CHECK(density::rmt_atom(Group::O) == 0.5);
  CHECK(density::rmt_atom(Group::SOeven) == 0.0);
  CHECK(density::rmt_atom(Group::SOodd) == 1.0);
  // O is the average of the two special orthogonal kernels, atoms included.
  for (double x : {0.0, 0.17, 0.5, 1.3, 4.9}) {
    CHECK(density::rmt_kernel(Group::O, x) ==
          Catch::Approx(0.5 * (density::rmt_kernel(Group::SOeven, x) +
                               density::rmt_kernel(Group::SOodd, x)))
              .margin(1e-15));
  }
  CHECK(density::rmt_atom(Group::O) ==
        0.5 * (density::rmt_atom(Group::SOeven) + density::rmt_atom(Group::SOodd)));
}

TEST_CASE("Fourier side kernels: common atom, half density on (-1,1)", "[density]") {
  for (Group g : density::kAllGroups) CHECK(density::rmt_kernel_hat(g, 0.0).atom == 1.0);
  for (double t : {0.0, 0.4, 0.99}) {
    CHECK(density::rmt_kernel_hat(Group::U, t).density == 0.0);
    CHECK(density::rmt_kernel_hat(Group::Sp, t).density == -0.5);
    CHECK(density::rmt_kernel_hat(Group::O, t).density == 0.5);
    CHECK(density::rmt_kernel_hat(Group::SOeven, t).density == 0.5);
    CHECK(density::rmt_kernel_hat(Group::SOodd, t).density == 0.5);
  }
  for (double t : {1.0, 1.7, 30.0}) {
    CHECK(density::rmt_kernel_hat(Group::U, t).density == 0.0);
    CHECK(density::rmt_kernel_hat(Group::Sp, t).density == 0.0);
    CHECK(density::rmt_kernel_hat(Group::O, t).density == 0.5);
    CHECK(density::rmt_kernel_hat(Group::SOeven, t).density == 0.0);
    CHECK(density::rmt_kernel_hat(Group::SOodd, t).density == 1.0);
  }
  for (double t : {0.3, 1.0, 2.2}) {
    auto o = density::rmt_kernel_hat(Group::O, t);
    auto e = density::rmt_kernel_hat(Group::SOeven, t);
    auto d = density::rmt_kernel_hat(Group::SOodd, t);
    CHECK(o.atom == 0.5 * (e.atom + d.atom));
    CHECK(o.density == 0.5 * (e.density + d.density));
  }
}

TEST_CASE("time and Fourier sides of the kernel integrals agree", "[density]") {
  for (double sigma : {0.5, 1.0, 1.9}) {
    auto f = density::fejer_pair(sigma);
    for (Group g : density::kAllGroups) {
      double time = density::rmt_integral_time(g, f);
      double fourier = density::rmt_integral_fourier(g, f);
      INFO("sigma " << sigma << " group " << density::group_name(g));
      CHECK(std::abs(time - fourier) <= 1e-6);
      CHECK(density::rmt_integral(g, f) == fourier);
    }
  }
}

TEST_CASE("exact kernel integrals at unit support", "[density]") {
  auto f = density::fejer_pair(1.0);
  CHECK(density::rmt_integral(Group::U, f) == 1.0);
  CHECK(density::rmt_integral(Group::O, f) == 1.5);
  CHECK(density::rmt_integral(Group::Sp, f) == 0.5);
}

TEST_CASE("orthogonal average and group separations", "[density]") {
  for (double sigma : {0.5, 1.0, 1.9}) {
    auto f = density::fejer_pair(sigma);
    double o = density::rmt_integral(Group::O, f);
    double e = density::rmt_integral(Group::SOeven, f);
    double d = density::rmt_integral(Group::SOodd, f);
    CHECK(std::abs(o - 0.5 * (e + d)) <= 1e-10);
  }
  // For support inside (-1, 1) every orthogonal flavor shifts U by
  // +hat-mass/2, Sp by -hat-mass/2; all gaps from O are at least a quarter
  // of the hat mass.
  for (double sigma : {0.5, 0.8, 1.0}) {
    auto f = density::fejer_pair(sigma);
    double hat_mass = 2.0 * f.phi_hat_integral(0.0, sigma);
    CHECK(hat_mass == Catch::Approx(sigma).epsilon(1e-14));
    double u = density::rmt_integral(Group::U, f);
    for (Group g : {Group::O, Group::SOeven, Group::SOodd}) {
      CHECK(density::rmt_integral(g, f) - u == Catch::Approx(0.5 * hat_mass).margin(1e-12));
    }
    CHECK(density::rmt_integral(Group::Sp, f) - u == Catch::Approx(-0.5 * hat_mass).margin(1e-12));
    double o = density::rmt_integral(Group::O, f);
    CHECK(std::abs(u - o) >= 0.25 * hat_mass - 1e-12);
    CHECK(std::abs(density::rmt_integral(Group::Sp, f) - o) >= 0.25 * hat_mass - 1e-12);
  }
}

TEST_CASE("cross-check failure is reported, not silently absorbed", "[density]") {
  auto f = density::fejer_pair(1.0);
  f.phi_hat = [](double y) { return 1.2 * std::max(0.0, 1.0 - std::abs(y)); };
  f.phi_hat_integral = nullptr;
  CHECK_THROWS_AS(density::rmt_integral(Group::U, f), std::runtime_error);
}

TEST_CASE("configuration validation", "[density]") {
  auto f = density::fejer_pair(1.0);
  CHECK_THROWS_AS(density::P_star(config(11, 5, 0.5), f), std::invalid_argument);
  CHECK_THROWS_AS(density::P_star(config(12, 5, 0.0), f), std::invalid_argument);
  CHECK_THROWS_AS(density::P_star(config(12, 5, -0.3), f), std::invalid_argument);
  auto cfg = config(12, 101, 1.6);  // above the admissible support radius
  CHECK_THROWS_AS(density::P_star(cfg, f), std::invalid_argument);
  cfg.strict = false;
  cfg.R = 1.2;  // keeps the prime range empty so the relaxed run is cheap
  CHECK_NOTHROW(density::P_star(cfg, f));
  cfg.R = 0.5;
  CHECK_THROWS_AS(density::P_star(cfg, f), std::invalid_argument);
}

TEST_CASE("prime sum is empty when the range or the coprimality forces it", "[density]") {
  auto f = density::fejer_pair(1.0);
  SECTION("range below the first prime") {
    auto cfg = config(12, 101, 0.05);  // R^u ~ 1.6
    auto r = density::P_star(cfg, f);
    CHECK(r.value == 0.0);
    CHECK(r.terms_used == 0);
    CHECK(r.tail_bound == 0.0);
    CHECK(r.converged);
    auto est = density::one_level_estimate(cfg, f);
    CHECK(est.D1 == est.E);
    CHECK(est.E == 1.5);
    CHECK(est.card == traceform::oracles::newform_dim(12, F(101)));
  }
  SECTION("level swallows every prime in range") {
    auto cfg = config(12, 210, 0.2);  // R^u ~ 7.9, N = 2 3 5 7
    auto r = density::P_star(cfg, f);
    CHECK(r.value == 0.0);
    CHECK(r.terms_used == 0);
  }
}

TEST_CASE("prime sum on a short range: size, determinism, parallel map", "[density]") {
  auto f = density::fejer_pair(1.0);
  auto cfg = config(12, 101, 0.3);  // primes up to (144 101)^0.3 ~ 17.8
  cfg.policy.tol = 3e-3;
  traceform::newform_sums::DeltaCache cache;
  auto r = density::P_star(cfg, f, &cache);
  CHECK(r.terms_used == 7);  // 2, 3, 5, 7, 11, 13, 17
  CHECK(r.converged);
  CHECK(r.tail_bound > 0.0);
  CHECK(r.heuristic_bound > 0.0);
  double card = static_cast<double>(traceform::oracles::newform_dim(12, F(101)));
  CHECK(std::abs(r.value) / card < 1.0);

  auto cached_again = density::P_star(cfg, f, &cache);
  CHECK(cache.hits() > 0);
  CHECK(same_bits(cached_again.value, r.value));

  auto fresh = density::P_star(cfg, f);
  CHECK(same_bits(fresh.value, r.value));
  CHECK(same_bits(fresh.tail_bound, r.tail_bound));

  auto par_cfg = cfg;
  par_cfg.policy.threads = 3;
  auto par = density::P_star(par_cfg, f);
  CHECK(same_bits(par.value, r.value));
  CHECK(same_bits(par.tail_bound, r.tail_bound));
  CHECK(par.terms_used == r.terms_used);

  auto est = density::one_level_estimate(cfg, f, &cache);
  CHECK(est.E == 1.5);
  CHECK(est.P_star_over_card == est.prime_sum.value / card);
  CHECK(est.D1 == est.E - est.P_star_over_card);
  CHECK(std::abs(est.D1 - 1.5) < 0.5);
}

TEST_CASE("per-prime cut schedule", "[density]") {
  CHECK(density::detail::prime_schedule_Y(2) == 40);
  CHECK(density::detail::prime_schedule_Y(97) == 40);
  CHECK(density::detail::prime_schedule_Y(101) == 24);
  CHECK(density::detail::prime_schedule_Y(5003) == 24);
}

TEST_CASE("single-modulus diagnostic sum", "[density]") {
  auto f = density::fejer_pair(1.0);
  SECTION("empty range") {
    auto cfg = config(12, 5, 0.05);
    auto q = density::q_star(cfg, 1, 7, f);
    CHECK(q.value == 0.0);
    CHECK(q.terms_used == 0);
    CHECK_FALSE(q.smallz_regime);
  }
  SECTION("huge modulus sends every Bessel factor to zero") {
    auto cfg = config(12, 5, 0.4);
    auto q = density::q_star(cfg, 1, 100000, f);
    CHECK(q.terms_used > 0);
    CHECK(std::abs(q.value) < 1e-30);
    CHECK(q.smallz_regime);
    CHECK(std::abs(q.value) <= q.regime_bound);
  }
  SECTION("small-argument regime envelope") {
    auto cfg = config(12, 5, 0.4);  // primes up to (720)^0.4 ~ 13.9, skipping 5
    auto q = density::q_star(cfg, 1, 12, f);
    CHECK(q.terms_used == 5);  // 2, 3, 7, 11, 13
    CHECK(q.smallz_regime);    // 3 z_max = 3 (4 pi sqrt(13) / 12) ~ 11.3 <= 12
    CHECK(q.regime_bound > 0.0);
    CHECK(std::abs(q.value) <= q.regime_bound);
  }
  SECTION("outside the regime the envelope is not claimed") {
    auto cfg = config(12, 5, 0.4);
    auto q = density::q_star(cfg, 1, 2, f);
    CHECK_FALSE(q.smallz_regime);
    CHECK(q.regime_bound == 0.0);
  }
  SECTION("domain errors") {
    auto cfg = config(12, 5, 0.4);
    CHECK_THROWS_AS(density::q_star(cfg, 0, 7, f), std::invalid_argument);
    CHECK_THROWS_AS(density::q_star(cfg, 1, 0, f), std::invalid_argument);
  }
}
