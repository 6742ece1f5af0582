#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "traceform/arith.hpp"
#include "traceform/kloosterman.hpp"

namespace tk = traceform::kloosterman;
namespace ta = traceform::arith;
using u64 = std::uint64_t;
using i64 = std::int64_t;

TEST_CASE("modular inverse", "[kloosterman]") {
  CHECK(tk::mod_inverse(0, 1) == 0);
  CHECK(tk::mod_inverse(1, 2) == 1);
  CHECK(tk::mod_inverse(3, 7) == 5);
  for (u64 c : {2ull, 9ull, 97ull, 1000ull, 65537ull}) {
    for (u64 a = 1; a < std::min<u64>(c, 60); ++a) {
      if (std::gcd(a, c) != 1) {
        CHECK_THROWS_AS(tk::mod_inverse(a, c), std::invalid_argument);
      } else {
        u64 inv = tk::mod_inverse(a, c);
        CHECK(inv < c);
        CHECK(a * inv % c == 1);
        CHECK(tk::mod_inverse(a + c, c) == inv);
      }
    }
  }
  CHECK_THROWS_AS(tk::mod_inverse(5, 0), std::invalid_argument);
  CHECK_THROWS_AS(tk::mod_inverse(4, 6), std::invalid_argument);
}

TEST_CASE("closed-form values", "[kloosterman]") {
  CHECK(tk::kloosterman(1, 1, 1) == 1.0);
  CHECK(tk::kloosterman(5, -3, 1) == 1.0);
  CHECK(std::abs(tk::kloosterman(1, 1, 2) - 1.0) < 1e-14);
  CHECK(std::abs(tk::kloosterman(1, 1, 3) - (-1.0)) < 1e-14);
  CHECK(std::abs(tk::kloosterman(1, 1, 4) - (-2.0)) < 1e-14);
  double expected_235 = 2.0 - 2.0 * std::cos(std::numbers::pi / 5.0);
  CHECK(std::abs(tk::kloosterman(2, 3, 5) - expected_235) < 1e-14);
  CHECK(std::abs(expected_235 - 0.38196601125010515) < 1e-15);
}

TEST_CASE("ramanujan sums as the m = 0 specialization", "[kloosterman]") {
  for (u64 c = 1; c <= 100; ++c) {
    auto fc = ta::FactoredInteger::factor(c);
    CHECK(std::abs(tk::kloosterman(0, 0, c) - static_cast<double>(ta::euler_phi(fc))) < 1e-9 * c);
    for (i64 n = 1; n <= 20; ++n) {
      double expected = 0.0;
      for (u64 d = 1; d <= c; ++d) {
        if (c % d == 0 && n % static_cast<i64>(d) == 0)
          expected += static_cast<double>(d) * ta::moebius(ta::FactoredInteger::factor(c / d));
      }
      CHECK(std::abs(tk::kloosterman(0, n, c) - expected) < 1e-9 * c);
    }
  }
}

TEST_CASE("symmetry, periodicity, and unit count", "[kloosterman]") {
  for (u64 c : {2ull, 3ull, 12ull, 36ull, 97ull, 120ull, 243ull, 1009ull}) {
    u64 phi = ta::euler_phi(ta::FactoredInteger::factor(c));
    for (i64 m : {1, 2, 7}) {
      for (i64 n : {1, 3, 11}) {
        auto full = tk::kloosterman_full(m, n, c);
        CHECK(full.units == phi);
        CHECK(std::abs(full.imag) <= 1e-9 * static_cast<double>(phi));
        double s = full.value;
        CHECK(std::abs(tk::kloosterman(n, m, c) - s) < 1e-10 * c);
        CHECK(std::abs(tk::kloosterman(m + static_cast<i64>(c), n, c) - s) < 1e-10 * c);
        CHECK(std::abs(tk::kloosterman(m - 3 * static_cast<i64>(c), n, c) - s) < 1e-10 * c);
        CHECK(std::abs(tk::kloosterman(-m, -n, c) - s) < 1e-10 * c);
      }
    }
  }
}

TEST_CASE("weil bound holds across a grid", "[kloosterman]") {
  for (u64 c = 1; c <= 400; ++c) {
    auto fc = ta::FactoredInteger::factor(c);
    double tau = static_cast<double>(ta::divisor_count_tau(fc));
    for (i64 m : {1, 2, 6, 12}) {
      for (i64 n : {1, 5, 8}) {
        u64 g = std::gcd(std::gcd(static_cast<u64>(m), static_cast<u64>(n)), c);
        double bound = tau * std::sqrt(static_cast<double>(g)) * std::sqrt(static_cast<double>(c));
        CHECK(std::abs(tk::kloosterman(m, n, c)) <= bound + 1e-9 * c);
      }
    }
  }
}

TEST_CASE("twisted multiplicativity across coprime moduli", "[kloosterman]") {
  const u64 moduli[] = {3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27};
  for (u64 c1 : moduli) {
    for (u64 c2 : moduli) {
      if (c1 >= c2 || std::gcd(c1, c2) != 1) continue;
      i64 inv2 = static_cast<i64>(tk::mod_inverse(c2, c1));
      i64 inv1 = static_cast<i64>(tk::mod_inverse(c1, c2));
      for (i64 m : {1, 2, 5}) {
        for (i64 n : {1, 3}) {
          double lhs = tk::kloosterman(m, n, c1 * c2);
          double rhs = tk::kloosterman(m * inv2, n * inv2, c1) * tk::kloosterman(m * inv1, n * inv1, c2);
          CHECK(std::abs(lhs - rhs) < 1e-8 * static_cast<double>(c1 * c2));
        }
      }
    }
  }
}

TEST_CASE("rejects moduli outside the supported range", "[kloosterman]") {
  CHECK_THROWS_AS(tk::kloosterman(1, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(tk::kloosterman(1, 1, (u64(1) << 31) + 1), std::invalid_argument);
}
