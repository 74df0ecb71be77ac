#include "sqem/numerics.hpp"

#include <string>

#include "sqem/error.hpp"

namespace sqem::numerics {
namespace {

constexpr double kRankThreshold = 1e-10;

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.rows(), design.cols());
  qr.setThreshold(kRankThreshold);
  qr.compute(design);
  return qr;
}

std::string column_label(std::span<const std::string> names, Eigen::Index j) {
  if (static_cast<std::size_t>(j) < names.size()) return "'" + names[static_cast<std::size_t>(j)] + "'";
  return "column " + std::to_string(j);
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& design) {
  if (design.cols() == 0) return 0;
  return static_cast<int>(factorize(design).rank());
}

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& design,
                                         const Eigen::VectorXd& target,
                                         std::span<const std::string> column_names) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (target.size() != n) {
    throw ConfigError("solve_least_squares: target length " + std::to_string(target.size()) +
                      " does not match design rows " + std::to_string(n));
  }
  if (p == 0) throw ConfigError("solve_least_squares: design has no columns");
  if (n < p) {
    throw NumericalError("solve_least_squares: " + std::to_string(n) + " rows for " +
                         std::to_string(p) + " columns");
  }

  auto qr = factorize(design);
  if (qr.rank() < p) {
    // Report the first column that adds nothing to the span of its predecessors.
    for (Eigen::Index j = 1; j <= p; ++j) {
      if (factorize(design.leftCols(j)).rank() < j) {
        throw NumericalError("rank deficient design: " + column_label(column_names, j - 1) +
                             " is linearly dependent on earlier columns");
      }
    }
    throw NumericalError("rank deficient design");
  }

  LeastSquaresSolution out;
  out.coefficients = qr.solve(target);
  out.residual_sum_squares = (target - design * out.coefficients).squaredNorm();
  out.rank = static_cast<int>(qr.rank());

  // (XᵀX)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  out.unscaled_covariance = perm * inner * perm.transpose();
  return out;
}

}  // namespace sqem::numerics
