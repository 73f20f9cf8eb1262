#include "skewvar/gwtest.hpp"

#include <cmath>

#include "skewvar/error.hpp"
#include "skewvar/rng.hpp"

namespace skewvar {

namespace {

// Bartlett-kernel HAC long-run covariance of (demeaned) columns of z.
Eigen::MatrixXd hac_covariance(const Eigen::MatrixXd& z, int lags) {
  const auto t = z.rows();
  Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
  Eigen::MatrixXd omega = c.transpose() * c / static_cast<double>(t);
  for (int l = 1; l <= lags; ++l) {
    if (l >= t) break;
    Eigen::MatrixXd gamma =
        c.bottomRows(t - l).transpose() * c.topRows(t - l) / static_cast<double>(t);
    double w = 1.0 - static_cast<double>(l) / (lags + 1);
    omega += w * (gamma + gamma.transpose());
  }
  return omega;
}

double lower_incomplete_gamma_series(double a, double x) {
  double sum = 1.0 / a, term = sum;
  for (int k = 1; k < 500; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double upper_incomplete_gamma_cf(double a, double x) {
  // Lentz continued fraction for Q(a, x).
  double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, f = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return f * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chi_square_sf(double x, int dof) {
  require(dof >= 1, "chi-square dof must be >= 1, got {}", dof);
  if (x <= 0) return 1.0;
  double a = 0.5 * dof, hx = 0.5 * x;
  if (hx < a + 1.0) return 1.0 - lower_incomplete_gamma_series(a, hx);
  return upper_incomplete_gamma_cf(a, hx);
}

GwResult gw_unconditional(const Eigen::VectorXd& diff, int h) {
  const auto t = diff.size();
  require(t >= 10, "Giacomini-White needs at least 10 loss differentials, got {}", t);
  require(h >= 1, "horizon must be >= 1, got {}", h);
  require(diff.allFinite(), "loss differentials contain non-finite values");
  double mean = diff.mean();
  Eigen::MatrixXd omega = hac_covariance(diff, h - 1);
  if (omega(0, 0) <= 0.0) {
    require(mean == 0.0, "HAC variance of the loss differential is zero");
    return {0.0, 1.0};
  }
  double stat = mean / std::sqrt(omega(0, 0) / static_cast<double>(t));
  double p = 2.0 * (1.0 - std_normal_cdf(std::abs(stat)));
  return {stat, p};
}

GwResult gw_conditional(const Eigen::VectorXd& diff, int h) {
  const auto t = diff.size();
  require(t >= 12, "conditional Giacomini-White needs at least 12 differentials, got {}", t);
  // Default instruments: constant and the lagged differential.
  Eigen::MatrixXd instruments(t - 1, 2);
  instruments.col(0).setOnes();
  instruments.col(1) = diff.head(t - 1);
  return gw_conditional(diff.tail(t - 1), h, instruments);
}

GwResult gw_conditional(const Eigen::VectorXd& diff, int h, const Eigen::MatrixXd& instruments) {
  const auto t = diff.size();
  const auto q = instruments.cols();
  require(instruments.rows() == t, "instruments have {} rows for {} differentials",
          instruments.rows(), t);
  require(t >= 10 + q, "conditional test needs at least {} observations, got {}", 10 + q, t);
  require(diff.allFinite(), "loss differentials contain non-finite values");
  Eigen::MatrixXd z = instruments.array().colwise() * diff.array();
  if (z.cwiseAbs().maxCoeff() == 0.0) return {0.0, 1.0};
  Eigen::VectorXd zbar = z.colwise().mean();
  Eigen::MatrixXd omega = hac_covariance(z, h - 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(omega);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive(),
          "singular HAC covariance in the conditional test");
  double stat = static_cast<double>(t) * zbar.dot(ldlt.solve(zbar));
  return {stat, chi_square_sf(stat, static_cast<int>(q))};
}

std::string significance_stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

}  // namespace skewvar
