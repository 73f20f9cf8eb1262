#pragma once

#include <Eigen/Dense>

namespace skewvar {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Least-squares coefficients solving X B ~= Y (column per equation).
Eigen::MatrixXd least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Empirical percentile (linear interpolation) of a vector, p in [0, 100].
double percentile(Eigen::VectorXd values, double p);

}  // namespace skewvar
