#include "skewvar/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "skewvar/error.hpp"

namespace skewvar {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  require(x.rows() == y.rows(), "least_squares: {} rows of x vs {} of y", x.rows(), y.rows());
  return x.colPivHouseholderQr().solve(y);
}

double percentile(Eigen::VectorXd values, double p) {
  require(values.size() > 0, "percentile of empty vector");
  require(p >= 0.0 && p <= 100.0, "percentile {} outside [0, 100]", p);
  std::sort(values.data(), values.data() + values.size());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = static_cast<Eigen::Index>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values(lo) + w * values(hi);
}

}  // namespace skewvar
