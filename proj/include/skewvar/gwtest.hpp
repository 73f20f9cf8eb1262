#pragma once

#include <Eigen/Dense>

#include <string>

namespace skewvar {

struct GwResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Giacomini-White unconditional test: t statistic of the mean loss
// differential with Newey-West (Bartlett) HAC variance using h-1 lags;
// two-sided normal p-value.
GwResult gw_unconditional(const Eigen::VectorXd& diff, int h);

// Conditional test with instruments (default: constant and the lagged
// differential): Wald statistic T Zbar' Omega^-1 Zbar, chi-square dof = q.
GwResult gw_conditional(const Eigen::VectorXd& diff, int h);
GwResult gw_conditional(const Eigen::VectorXd& diff, int h, const Eigen::MatrixXd& instruments);

// Significance stars at the paper's thresholds: *** p<0.01, ** p<0.05, * p<0.1.
std::string significance_stars(double p_value);

double chi_square_sf(double x, int dof);

}  // namespace skewvar
