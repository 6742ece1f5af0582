#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "traceform/basis.hpp"
#include "traceform/oracles.hpp"

using traceform::arith::FactoredInteger;
using traceform::basis::NewformLocalData;
using u64 = std::uint64_t;

namespace {

FactoredInteger F(u64 n) { return FactoredInteger::factor(n); }

// Random admissible data for a given level: |lambda(p)| <= 2 off the level,
// forced values on it.
NewformLocalData random_form(std::mt19937& rng, u64 level, const std::vector<u64>& unram_primes,
                             int k = 12) {
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  FactoredInteger M = F(level);
  std::map<u64, double> lam;
  for (u64 p : unram_primes)
    if (M.exponent_of(p) == 0) lam[p] = box(rng);
  std::map<u64, int> signs;
  for (const auto& pp : M.factors())
    if (pp.e == 1) signs[pp.p] = (rng() & 1) ? 1 : -1;
  return NewformLocalData::validated(k, M, lam, signs);
}

}  // namespace

TEST_CASE("hecke_lambda matches the level-one q-expansion oracle", "[basis]") {
  auto tau = traceform::oracles::ramanujan_tau_table(16);
  std::map<u64, double> lam;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull})
    lam[p] = static_cast<double>(tau[p - 1]) / std::pow(static_cast<double>(p), 5.5);
  auto f = NewformLocalData::validated(12, F(1), lam);
  for (u64 n = 1; n <= 16; ++n) {
    double expected = static_cast<double>(tau[n - 1]) / std::pow(static_cast<double>(n), 5.5);
    CHECK(traceform::basis::hecke_lambda(f, F(n)) == Catch::Approx(expected).margin(1e-12));
  }
  CHECK(traceform::basis::hecke_lambda(f, F(4)) == Catch::Approx(-0.71875).margin(1e-13));
}

TEST_CASE("hecke_lambda satisfies the multiplication identity", "[basis]") {
  std::mt19937 rng(77);
  std::vector<u64> base{2, 3, 5, 7};
  for (u64 level : {1ull, 6ull, 9ull, 20ull}) {
    auto f = random_form(rng, level, base);
    std::uniform_int_distribution<int> expo(0, 2);
    for (int iter = 0; iter < 125; ++iter) {
      u64 m = 1, n = 1;
      for (u64 p : base) {
        for (int i = 0; i < expo(rng); ++i) m *= p;
        for (int i = 0; i < expo(rng); ++i) n *= p;
      }
      double lhs = traceform::basis::hecke_lambda(f, F(m)) * traceform::basis::hecke_lambda(f, F(n));
      double rhs = 0.0;
      FactoredInteger g = F(std::gcd(m, n));
      for (u64 d : g.divisors()) {
        if (!F(d).coprime_to(level)) continue;
        rhs += traceform::basis::hecke_lambda(f, F(m * n / (d * d)));
      }
      CHECK(lhs == Catch::Approx(rhs).margin(1e-10 * (1.0 + std::abs(rhs))));
    }
  }
}

TEST_CASE("rho_f, r_f, z_local spot values", "[basis]") {
  auto f1 = NewformLocalData::unchecked(12, F(1), {{2, 1.0}, {3, 1.0}});
  CHECK(traceform::basis::rho_f(f1, F(2)) == Catch::Approx(7.0 / 9.0).margin(1e-15));
  CHECK(traceform::basis::r_f(f1, F(2)) == Catch::Approx(7.0 / 9.0).margin(1e-15));
  CHECK(traceform::basis::z_local(f1, 2) == Catch::Approx(6.0 / 7.0).margin(1e-15));

  auto f5 = NewformLocalData::validated(12, F(5), {}, {{5, 1}});
  CHECK(traceform::basis::r_f(f5, F(5)) == Catch::Approx(24.0 / 25.0).margin(1e-15));
  auto f3 = NewformLocalData::validated(12, F(3), {}, {{3, -1}});
  CHECK(traceform::basis::z_local(f3, 3) == Catch::Approx(9.0 / 8.0).margin(1e-15));
  auto f9 = NewformLocalData::validated(12, F(9), {});
  CHECK(traceform::basis::z_local(f9, 3) == 1.0);
}

TEST_CASE("r_f depends only on the radical and multiplies over primes", "[basis]") {
  std::mt19937 rng(101);
  auto f = random_form(rng, 10, {3, 7});
  for (u64 p : {2ull, 3ull, 5ull, 7ull}) {
    double rp = traceform::basis::r_f(f, F(p));
    for (int j = 2; j <= 4; ++j) {
      u64 q = 1;
      for (int i = 0; i < j; ++i) q *= p;
      CHECK(traceform::basis::r_f(f, F(q)) == Catch::Approx(rp).margin(1e-15));
    }
  }
  double prod = traceform::basis::r_f(f, F(2)) * traceform::basis::r_f(f, F(21));
  CHECK(traceform::basis::r_f(f, F(42)) == Catch::Approx(prod).margin(1e-15));
  CHECK(traceform::basis::r_f(f, F(3)) == Catch::Approx(traceform::basis::rho_f(f, F(3))).margin(1e-15));
}

TEST_CASE("mu_f values", "[basis]") {
  auto f = NewformLocalData::unchecked(12, F(2), {{2, 1.0 / std::sqrt(2.0)}, {3, 0.5}});
  CHECK(traceform::basis::mu_f(f, F(1)) == 1.0);
  CHECK(traceform::basis::mu_f(f, F(3)) == -0.5);
  CHECK(traceform::basis::mu_f(f, F(9)) == 1.0);
  CHECK(traceform::basis::mu_f(f, F(4)) == 0.0);
  CHECK(traceform::basis::mu_f(f, F(27)) == 0.0);
  CHECK(traceform::basis::mu_f(f, F(18)) == Catch::Approx(-1.0 / std::sqrt(2.0)).margin(1e-15));
}

TEST_CASE("xi prime-power identities", "[basis]") {
  std::mt19937 rng(4242);
  for (u64 level : {1ull, 2ull, 5ull, 12ull, 45ull}) {
    for (int rep = 0; rep < 8; ++rep) {
      auto f = random_form(rng, level, {2, 3, 5, 7});
      CHECK(traceform::basis::xi(f, F(1), F(1)) == 1.0);
      for (u64 p : {2ull, 3ull, 5ull, 7ull}) {
        double lp = f.lambda_p.at(p);
        double pd = static_cast<double>(p);
        double chi = traceform::arith::chi0(f.M, static_cast<std::int64_t>(p));
        double rp = traceform::basis::r_f(f, F(p));

        double xi_pp = traceform::basis::xi(f, F(p), F(p));
        CHECK(xi_pp == Catch::Approx(1.0 / std::sqrt(rp)).epsilon(1e-12));
        double xi_p1 = traceform::basis::xi(f, F(p), F(1));
        CHECK(xi_p1 == Catch::Approx(-lp / (std::sqrt(pd) * (1.0 + chi / pd)) * xi_pp)
                           .margin(1e-12 * (1.0 + std::abs(xi_pp))));

        for (int nu = 2; nu <= 4; ++nu) {
          u64 d = 1;
          for (int i = 0; i < nu; ++i) d *= p;
          double top = traceform::basis::xi(f, F(d), F(d));
          CHECK(top == Catch::Approx(1.0 / std::sqrt(rp * (1.0 - chi / (pd * pd)))).epsilon(1e-12));
          CHECK(traceform::basis::xi(f, F(d), F(d / p)) ==
                Catch::Approx(-lp / std::sqrt(pd) * top).margin(1e-12 * (1.0 + std::abs(top))));
          CHECK(traceform::basis::xi(f, F(d), F(d / (p * p))) ==
                Catch::Approx(chi / pd * top).margin(1e-12 * (1.0 + std::abs(top))));
        }
      }
    }
  }
}

TEST_CASE("xi_one_sum closed form agrees with the direct divisor sum", "[basis]") {
  std::mt19937 rng(90125);
  std::uniform_int_distribution<u64> pick_m(1, 100), pick_l(1, 5000);
  int done = 0;
  while (done < 200) {
    u64 level = pick_m(rng);
    u64 L = pick_l(rng);
    FactoredInteger Lf = F(L);
    std::vector<u64> unram;
    for (const auto& pp : Lf.factors()) unram.push_back(pp.p);
    auto f = random_form(rng, level, unram);
    double direct = traceform::basis::xi_one_sum_direct(f, Lf);
    double closed = traceform::basis::xi_one_sum_closed(f, Lf, F(L * level));
    CHECK(direct == Catch::Approx(closed).epsilon(1e-10));
    ++done;
  }

  auto f = NewformLocalData::unchecked(12, F(1), {{2, 1.0}});
  CHECK(traceform::basis::xi_one_sum_direct(f, F(2)) == Catch::Approx(9.0 / 7.0).epsilon(1e-14));
  CHECK(traceform::basis::xi_one_sum_closed(f, F(2), F(2)) == Catch::Approx(9.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("z_N multiplies local factors", "[basis]") {
  std::mt19937 rng(55);
  auto f = random_form(rng, 6, {5, 7});
  double prod = traceform::basis::z_local(f, 2) * traceform::basis::z_local(f, 3) *
                traceform::basis::z_local(f, 5) * traceform::basis::z_local(f, 7);
  CHECK(traceform::basis::z_N(f, F(210)) == Catch::Approx(prod).epsilon(1e-14));
  CHECK(traceform::basis::z_N(f, F(1)) == 1.0);
}

TEST_CASE("fd_coefficient special cases", "[basis]") {
  std::mt19937 rng(31);
  auto f = random_form(rng, 1, {2, 3, 5}, 16);
  auto a_f = [&](u64 n) {
    return traceform::basis::hecke_lambda(f, F(n)) * std::pow(static_cast<double>(n), 7.5);
  };
  for (u64 n : {1ull, 2ull, 6ull, 12ull})
    CHECK(traceform::basis::fd_coefficient(f, F(1), F(n)) == Catch::Approx(a_f(n)).epsilon(1e-13));
  // (d, n) = 1: only ell = 1 contributes.
  CHECK(traceform::basis::fd_coefficient(f, F(4), F(9)) ==
        Catch::Approx(traceform::basis::xi(f, F(4), F(1)) * a_f(9)).epsilon(1e-13));
  // d = n = p: two terms.
  double expect = traceform::basis::xi(f, F(3), F(1)) * a_f(3) +
                  traceform::basis::xi(f, F(3), F(3)) * std::pow(3.0, 8.0);
  CHECK(traceform::basis::fd_coefficient(f, F(3), F(3)) == Catch::Approx(expect).epsilon(1e-13));
}

TEST_CASE("ramified eigenvalues are forced by the level", "[basis]") {
  auto f = NewformLocalData::validated(12, F(10), {{3, 0.25}}, {{2, 1}, {5, -1}});
  CHECK(f.lambda_p.at(2) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-16));
  CHECK(f.lambda_p.at(5) == Catch::Approx(-1.0 / std::sqrt(5.0)).margin(1e-16));
  CHECK(traceform::basis::hecke_lambda(f, F(4)) == Catch::Approx(0.5).margin(1e-15));
  CHECK(traceform::basis::hecke_lambda(f, F(25)) == Catch::Approx(0.2).margin(1e-15));

  auto g = NewformLocalData::validated(12, F(4), {});
  CHECK(traceform::basis::hecke_lambda(g, F(2)) == 0.0);
  CHECK(traceform::basis::hecke_lambda(g, F(8)) == 0.0);
}

TEST_CASE("construction and domain errors", "[basis]") {
  using traceform::basis::NewformLocalData;
  CHECK_THROWS_AS(NewformLocalData::validated(11, F(1), {}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(2, F(1), {}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(1), {{4, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(1), {{2, 2.5}}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(2), {{2, 0.5}}, {{2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(2), {}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(2), {}, {{2, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(4), {}, {{2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(NewformLocalData::validated(12, F(2), {}, {{2, 1}, {3, 1}}), std::invalid_argument);

  auto f = NewformLocalData::unchecked(12, F(1), {{2, 1.0}});
  CHECK_THROWS_AS(traceform::basis::xi(f, F(2), F(3)), std::invalid_argument);
  CHECK_THROWS_AS(traceform::basis::hecke_lambda(f, F(3)), std::invalid_argument);

  auto bad = NewformLocalData::unchecked(12, F(1), {{2, 2.2}});
  CHECK_THROWS_AS(traceform::basis::z_local(bad, 2), std::invalid_argument);
  auto worse = NewformLocalData::unchecked(12, F(1), {{2, 3.0}});
  CHECK_THROWS_AS(traceform::basis::xi(worse, F(2), F(1)), std::invalid_argument);
}
