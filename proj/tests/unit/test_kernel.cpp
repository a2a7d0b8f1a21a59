#include <doctest.h>

#include <cmath>
#include <random>

#include "aggdiff/error.hpp"
#include "aggdiff/kernel.hpp"
#include "oracles.hpp"

using namespace aggdiff;

TEST_CASE("tophat norms match closed forms") {
  const KernelAnalysis a = analyze(Kernel::tophat(2.0, 1.0), 0.01);
  CHECK(a.linf_norm == 1.0);
  CHECK(a.l1_norm == 2.0);
  CHECK(a.tv_norm == 2.0);
  CHECK(a.symmetric);
  CHECK(a.compact_support);
  CHECK(a.support_radius == 1.0);
}

TEST_CASE("tophat norms for random parameters") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> alpha(-40.0, 40.0);
  std::uniform_real_distribution<double> radius(0.2, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = alpha(rng);
    const double r = radius(rng);
    const KernelAnalysis k = analyze(Kernel::tophat(a, r), 0.01);
    CHECK(k.linf_norm == doctest::Approx(std::abs(a) / (2.0 * r)).epsilon(1e-15));
    CHECK(k.l1_norm == doctest::Approx(std::abs(a)).epsilon(1e-15));
    CHECK(k.tv_norm == doctest::Approx(std::abs(a) / r).epsilon(1e-15));
  }
}

TEST_CASE("h4 norm agrees with the double-loop oracle and the triangle formula") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> alpha(-30.0, 30.0);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  const double dx = 0.01;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel k = Kernel::tophat(alpha(rng), radius(rng));
    const auto& th = std::get<TopHat>(k.form());
    const KernelAnalysis a = analyze(k, dx);
    const double brute = oracle::h4_norm(sample_centered(k, dx), dx);
    CHECK(a.h4_norm == doctest::Approx(brute).epsilon(1e-10));
    CHECK(a.h4_norm == doctest::Approx(oracle::tophat_h4_exact(th.alpha, th.radius)).epsilon(0.01));
  }
}

TEST_CASE("h4 Fourier integral is stable under refinement for a top-hat") {
  const KernelAnalysis a = analyze(Kernel::tophat(1.0, 1.0), 0.02);
  CHECK(a.h4_fourier_integral > 0.0);
  CHECK(a.h4_fourier_stable);
}

TEST_CASE("sampled kernels") {
  SUBCASE("truncated Gaussian is symmetric with compact support") {
    const double dx = 0.05;
    std::vector<double> v;
    for (int m = -100; m < 100; ++m) {
      const double x = (m + 0.5) * dx;
      v.push_back(std::exp(-0.5 * x * x));
    }
    const KernelAnalysis a = analyze(Kernel::sampled(v, dx, -5.0), 0.01);
    CHECK(a.symmetric);
    CHECK(a.compact_support);
    CHECK(a.support_radius == doctest::Approx(5.0));
    CHECK(a.linf_norm == doctest::Approx(std::exp(-0.5 * 0.025 * 0.025)));
  }
  SUBCASE("shifted kernel is not symmetric") {
    const KernelAnalysis a = analyze(Kernel::sampled({1.0, 2.0, 1.0}, 1.0, -1.0), 0.1);
    CHECK_FALSE(a.symmetric);
  }
  SUBCASE("total variation counts the jumps to zero at both ends") {
    const KernelAnalysis a = analyze(Kernel::sampled({1.0, 3.0, 2.0}, 0.5, -0.75), 0.05);
    CHECK(a.tv_norm == doctest::Approx(1.0 + 2.0 + 1.0 + 2.0));
    CHECK(a.l1_norm == doctest::Approx(3.0));
  }
}

TEST_CASE("kernel integral is exact for piecewise-constant forms") {
  const Kernel t = Kernel::tophat(4.0, 2.0);
  CHECK(t.integral(-3.0, 3.0) == doctest::Approx(-4.0));
  CHECK(t.integral(0.0, 1.0) == doctest::Approx(-1.0));
  CHECK(t.integral(1.0, 0.0) == doctest::Approx(1.0));
  const Kernel s = Kernel::sampled({1.0, -2.0}, 0.5, 0.0);
  CHECK(s.integral(0.25, 0.75) == doctest::Approx(0.25 * 1.0 - 0.25 * 2.0));
  CHECK(s(0.6) == -2.0);
  CHECK(s(1.5) == 0.0);
}

TEST_CASE("invalid kernels are rejected") {
  CHECK_THROWS_AS(Kernel::tophat(1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(Kernel::sampled({}, 1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(Kernel::sampled({1.0}, -1.0, 0.0), InvalidParameter);
}

TEST_CASE("detailed balance") {
  SUBCASE("symmetric cross-interaction gives equal weights") {
    const BalanceResult r = solve_detailed_balance({{20, -10}, {-10, 2}});
    REQUIRE(r.balanced());
    CHECK((*r.weights)[0] == 1.0);
    CHECK((*r.weights)[1] == doctest::Approx(1.0));
  }
  SUBCASE("opposite signs are infeasible with a pair witness") {
    const BalanceResult r = solve_detailed_balance({{20, -10}, {5, 20}});
    REQUIRE_FALSE(r.balanced());
    CHECK(r.witness == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("same-sign asymmetric pair is balanced with pi_2 = a12 / a21") {
    const BalanceResult r = solve_detailed_balance({{1, 3}, {2, 1}});
    REQUIRE(r.balanced());
    CHECK((*r.weights)[1] == doctest::Approx(1.5));
  }
  SUBCASE("random symmetric matrices give pi = 1") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
      std::vector<std::vector<double>> a(n, std::vector<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) a[i][j] = a[j][i] = d(rng);
      }
      const BalanceResult r = solve_detailed_balance(a);
      REQUIRE(r.balanced());
      for (double p : *r.weights) CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("inconsistent cycle reports the cycle") {
    // pi_2 = 2 pi_1, pi_3 = 2 pi_2, but pi_3 = pi_1 from the (1,3) pair.
    const std::vector<std::vector<double>> a = {{0, 2, 1}, {1, 0, 2}, {1, 1, 0}};
    const BalanceResult r = solve_detailed_balance(a);
    REQUIRE_FALSE(r.balanced());
    CHECK(r.witness.size() == 3);
  }
  SUBCASE("constructed weights are recovered") {
    const std::vector<double> pi = {1.0, 0.5, 4.0, 2.0};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.1, 2.0);
    std::vector<std::vector<double>> a(4, std::vector<double>(4));
    // pi_i a_ij = s_ij symmetric  =>  a_ij = s_ij / pi_i
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i; j < 4; ++j) {
        const double s = d(rng);
        a[i][j] = s / pi[i];
        a[j][i] = s / pi[j];
      }
    }
    const BalanceResult r = solve_detailed_balance(a);
    REQUIRE(r.balanced());
    for (std::size_t i = 0; i < 4; ++i) CHECK((*r.weights)[i] == doctest::Approx(pi[i]).epsilon(1e-12));
  }
  SUBCASE("zero cross-interaction decouples species") {
    const BalanceResult r = solve_detailed_balance({{1, 0}, {0, 1}});
    REQUIRE(r.balanced());
    CHECK(*r.weights == std::vector<double>{1.0, 1.0});
  }
  SUBCASE("one-sided coupling is infeasible") {
    const BalanceResult r = solve_detailed_balance({{1, 1}, {0, 1}});
    CHECK_FALSE(r.balanced());
    CHECK(r.witness == std::vector<std::size_t>{0, 1});
  }
}

TEST_CASE("detailed balance for general kernel matrices") {
  const Kernel a = Kernel::tophat(1.0, 1.0);
  SUBCASE("different radii cannot be proportional") {
    const KernelMatrix m(2, {a, Kernel::tophat(1.0, 1.0), Kernel::tophat(1.0, 2.0), a});
    CHECK_FALSE(solve_detailed_balance(m).balanced());
  }
  SUBCASE("proportional sampled pair") {
    const Kernel s1 = Kernel::sampled({1.0, 2.0, 1.0}, 0.5, -0.75);
    const Kernel s2 = s1.scaled(3.0);
    const KernelMatrix m(2, {a, s1, s2, a});
    const BalanceResult r = solve_detailed_balance(m);
    REQUIRE(r.balanced());
    CHECK((*r.weights)[1] == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("small-mass constants") {
  const KernelMatrix k1 = KernelMatrix::scaled(Kernel::tophat(1.0, 1.0), {{0.4}});
  const auto c = small_mass_constants({0.25}, {1.0}, k1);
  CHECK(c[0] == doctest::Approx(0.05));

  // c_i = D_i - 1/2 sum_j (m_i |K_ij| + m_j |K_ji|), |K| = |alpha| / 2 for R = 1.
  const KernelMatrix k2 = KernelMatrix::scaled(Kernel::tophat(1.0, 1.0), {{0.2, 0.1}, {-0.3, 0.1}});
  const auto c2 = small_mass_constants({1.0, 2.0}, {1.0, 2.0}, k2);
  CHECK(c2[0] == doctest::Approx(1.0 - 0.5 * ((0.1 + 0.1) + (0.05 + 2.0 * 0.15))));
  CHECK(c2[1] == doctest::Approx(2.0 - 0.5 * ((2.0 * 0.15 + 0.05) + (2.0 * 0.05 + 2.0 * 0.05))));
}

TEST_CASE("theorem applicability") {
  const Kernel base = Kernel::tophat(1.0, 1.0);
  SUBCASE("small-mass scalar case is covered by everything") {
    const HypothesisReport r = assess(KernelMatrix::scaled(base, {{0.4}}), {0.25}, {1.0}, 0.01);
    CHECK(r.h1);
    CHECK(r.h2);
    CHECK(r.h3);
    CHECK(r.h4);
    CHECK(r.h6);
    CHECK(r.theorems.small_mass_existence);
    CHECK(r.theorems.arbitrary_mass_existence);
    CHECK(r.theorems.strong_uniqueness);
    CHECK(r.theorems.classical_regularity);
  }
  SUBCASE("strong attraction loses small mass but keeps arbitrary mass") {
    const HypothesisReport r = assess(KernelMatrix::scaled(base, {{20.0}}), {0.25}, {1.0}, 0.01);
    CHECK_FALSE(r.theorems.small_mass_existence);
    CHECK(r.theorems.arbitrary_mass_existence);
    CHECK(r.small_mass_constants[0] == doctest::Approx(0.25 - 10.0));
  }
  SUBCASE("system without detailed balance") {
    const HypothesisReport r =
        assess(KernelMatrix::scaled(base, {{20, -10}, {5, 20}}), {0.25, 0.25}, {1.0, 1.0}, 0.01);
    CHECK_FALSE(r.detailed_balance.balanced());
    CHECK_FALSE(r.theorems.arbitrary_mass_existence);
    CHECK_FALSE(r.theorems.small_mass_existence);
    CHECK_FALSE(r.theorems.strong_uniqueness);
  }
  SUBCASE("asymmetric sampled kernel fails H3") {
    const Kernel s = Kernel::sampled({1.0, 2.0}, 0.5, -0.5);
    const HypothesisReport r = assess(KernelMatrix(1, {s}), {1.0}, {0.1}, 0.05);
    CHECK_FALSE(r.h3);
    CHECK_FALSE(r.theorems.arbitrary_mass_existence);
    CHECK(r.theorems.small_mass_existence);
  }
}
