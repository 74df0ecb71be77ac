#include <cmath>
#include <set>

#include "doctest.h"
#include "../support/oracles.hpp"
#include "sqem/error.hpp"
#include "sqem/numerics.hpp"

using namespace sqem;
using namespace sqem::numerics;

TEST_CASE("least squares matches normal equations on random well-conditioned designs") {
  Prng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 8 + static_cast<int>(rng.below(13));
    const int p = 2 + static_cast<int>(rng.below(3));
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    std::vector<std::vector<double>> rows(n, std::vector<double>(p));
    std::vector<double> target(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < p; ++c) rows[r][c] = x(r, c) = c == 0 ? 1.0 : rng.normal();
      target[r] = y(r) = rng.normal() + 2.0 * x(r, p - 1);
    }
    const auto sol = solve_least_squares(x, y);
    const auto ref = oracle::normal_equations(rows, target);
    for (int c = 0; c < p; ++c) CHECK(sol.coefficients(c) == doctest::Approx(static_cast<double>(ref[c])).epsilon(1e-9));
    CHECK(sol.rank == p);
  }
}

TEST_CASE("exact fit has zero residual sum of squares") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(4);
  y << 1, 3, 5, 7;
  const auto sol = solve_least_squares(x, y);
  CHECK(sol.coefficients(0) == doctest::Approx(1.0));
  CHECK(sol.coefficients(1) == doctest::Approx(2.0));
  CHECK(sol.residual_sum_squares < 1e-20);
}

TEST_CASE("rank deficiency names the dependent column") {
  Eigen::MatrixXd x(5, 3);
  for (int r = 0; r < 5; ++r) {
    x(r, 0) = 1.0;
    x(r, 1) = r;
    x(r, 2) = 2.0 * r + 1.0;
  }
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  const std::vector<std::string> names{"(intercept)", "a", "b"};
  try {
    solve_least_squares(x, y, names);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
  CHECK(numerical_rank(x) == 2);
}

TEST_CASE("incomplete beta agrees with the binomial sum for integer parameters") {
  Prng rng(5);
  for (int i = 0; i < 200; ++i) {
    const int a = 1 + static_cast<int>(rng.below(12));
    const int b = 1 + static_cast<int>(rng.below(12));
    const double x = rng.uniform();
    CHECK(incomplete_beta(a, b, x) == doctest::Approx(oracle::incomplete_beta_integer(a, b, x)).epsilon(1e-11));
  }
  CHECK(incomplete_beta(2, 3, 0.5) == doctest::Approx(0.6875).epsilon(1e-14));
  CHECK(incomplete_beta(2.5, 3.5, 0.0) == 0.0);
  CHECK(incomplete_beta(2.5, 3.5, 1.0) == 1.0);
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, 1.5), ConfigError);
}

TEST_CASE("incomplete beta reflection symmetry") {
  Prng rng(9);
  for (int i = 0; i < 200; ++i) {
    const double a = 0.2 + 30.0 * rng.uniform();
    const double b = 0.2 + 30.0 * rng.uniform();
    const double x = rng.uniform();
    CHECK(incomplete_beta(a, b, x) + incomplete_beta(b, a, 1.0 - x) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("t distribution against direct density integration") {
  for (double df : {1.0, 2.0, 3.5, 10.0, 57.0}) {
    for (double x : {-3.1, -0.7, 0.0, 0.4, 1.96, 4.243}) {
      CHECK(t_cdf(x, df) == doctest::Approx(oracle::t_cdf(x, df)).epsilon(1e-8));
    }
  }
  // Two-sided p at t = 4.243, df = 2.
  CHECK(2.0 * (1.0 - t_cdf(4.243, 2.0)) == doctest::Approx(0.051309).epsilon(1e-5));
  CHECK_THROWS_AS(t_cdf(1.0, 0.5), ConfigError);
}

TEST_CASE("F with one numerator df reduces to a squared t") {
  Prng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double df = 1.0 + std::floor(60.0 * rng.uniform());
    const double t = 5.0 * rng.uniform();
    CHECK(std::fabs(f_cdf(t * t, 1.0, df) - (2.0 * t_cdf(t, df) - 1.0)) < 1e-6);
  }
  CHECK(1.0 - f_cdf(18.0, 1.0, 2.0) == doctest::Approx(0.051317).epsilon(1e-5));
}

TEST_CASE("studentized range for two groups reduces to t") {
  for (double df : {2.0, 5.0, 10.0, 30.0, 120.0}) {
    for (double q : {0.3, 1.0, 2.5, 3.9, 6.0}) {
      const double viat = 2.0 * t_cdf(q / std::sqrt(2.0), df) - 1.0;
      CHECK(std::fabs(studentized_range_cdf(q, 2, df) - viat) < 1e-6);
    }
  }
}

TEST_CASE("studentized range reference values and Monte Carlo") {
  CHECK(studentized_range_cdf(3.88, 3, 10.0) == doctest::Approx(0.950186).epsilon(2e-5));
  CHECK(studentized_range_cdf(0.0, 4, 12.0) == 0.0);
  const double mc = oracle::studentized_range_mc(3.0, 4, 15, 200000, 77);
  CHECK(std::fabs(studentized_range_cdf(3.0, 4, 15.0) - mc) < 0.005);
  CHECK_THROWS_AS(studentized_range_cdf(1.0, 1, 10.0), ConfigError);
  CHECK_THROWS_AS(studentized_range_cdf(-1.0, 3, 10.0), ConfigError);
}

TEST_CASE("studentized range is monotone in q") {
  double prev = 0.0;
  for (double q = 0.25; q < 8.0; q += 0.25) {
    const double p = studentized_range_cdf(q, 5, 20.0);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK(prev > 0.999);
}

TEST_CASE("normal distribution") {
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-13));
  CHECK(normal_cdf(0.0) == 0.5);
  for (double p : {1e-10, 0.001, 0.2, 0.5, 0.77, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK_THROWS_AS(normal_quantile(1.5), ConfigError);
}

TEST_CASE("prng streams are deterministic and independent") {
  Prng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  CHECK(Prng(42).next() != c.next());
  CHECK(Prng::derive_seed(1, 0) != Prng::derive_seed(1, 1));
  CHECK(Prng::derive_seed(1, 0) != Prng::derive_seed(2, 0));
  CHECK(Prng::derive_seed(7, 3) == Prng::derive_seed(7, 3));
}

TEST_CASE("prng distributions") {
  Prng rng(1);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sq / n - 1.0) < 0.02);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(rng.below(0), ConfigError);
}

TEST_CASE("shuffled indices form a permutation") {
  Prng rng(8);
  const auto p = shuffled_indices(100, rng);
  std::set<std::size_t> seen(p.begin(), p.end());
  CHECK(seen.size() == 100);
  CHECK(*seen.rbegin() == 99);
  Prng again(8);
  CHECK(shuffled_indices(100, again) == p);
}
