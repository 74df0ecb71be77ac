#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sqem::numerics {

struct LeastSquaresSolution {
  Eigen::VectorXd coefficients;
  double residual_sum_squares = 0.0;
  int rank = 0;
  /// (XᵀX)⁻¹, used for coefficient standard errors.
  Eigen::MatrixXd unscaled_covariance;
};

/// Least squares via column-pivoted Householder QR.
///
/// The caller includes the intercept column. Throws NumericalError when the
/// design is rank deficient; the message names the first column that is a
/// linear combination of the columns before it (using `column_names` when
/// supplied, the column index otherwise).
LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& design,
                                         const Eigen::VectorXd& target,
                                         std::span<const std::string> column_names = {});

/// Numerical rank of `design` with the same relative threshold as the solver.
int numerical_rank(const Eigen::MatrixXd& design);

double normal_pdf(double x);
double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

double t_cdf(double x, double df);
double f_cdf(double x, double df1, double df2);

/// CDF of the studentized range for `k` groups and `df` error degrees of freedom.
double studentized_range_cdf(double q, int k, double df);

/// xoshiro256** seeded through splitmix64.
///
/// A stream is single-consumer. Independent streams for parallel work come
/// from derive_seed(parent, index), never from sharing one Prng.
class Prng {
 public:
  explicit Prng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n); unbiased (rejection sampling). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal();

  static std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Fisher-Yates shuffle of 0..n-1 driven by `rng`.
std::vector<std::size_t> shuffled_indices(std::size_t n, Prng& rng);

}  // namespace sqem::numerics
