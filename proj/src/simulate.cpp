#include "skewvar/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "skewvar/error.hpp"

namespace skewvar {

SimResult simulate_dgp(const ModelSpec& spec, const ParameterDraw& true_params, int T,
                       RngHandle& rng, const Eigen::MatrixXd* init_y, Quarter start) {
  spec.validate();
  true_params.validate(spec);
  const int n = spec.n_vars;
  const int k = spec.state_dim();
  const int t0 = spec.first_usable();
  require(T > t0 + 2, "simulation length {} too short for lag structure (t0 = {})", T, t0);

  SimResult out;
  out.data.y = Eigen::MatrixXd::Zero(T, n);
  for (int i = 0; i < n; ++i) out.data.labels.push_back("y" + std::to_string(i + 1));
  for (int i = 0; i < T; ++i) out.data.dates.push_back(start.plus(i));
  if (init_y) {
    require(init_y->rows() >= t0 && init_y->cols() == n,
            "init_y must provide at least {} rows and {} columns", t0, n);
    out.data.y.topRows(t0) = init_y->topRows(t0);
  }
  out.states = StatePath::zero(T, n);

  // Pre-sample states at the transition fixed point (ignoring Y feedback).
  Eigen::MatrixXd eye_minus_theta = Eigen::MatrixXd::Identity(k, k) - true_params.theta;
  Eigen::VectorXd beta_bar = Eigen::VectorXd::Zero(k);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(eye_minus_theta);
  if (lu.isInvertible()) beta_bar = lu.solve(true_params.alpha);
  for (int t = 0; t < t0; ++t) out.states.set_beta(spec, t, beta_bar);

  Eigen::LLT<Eigen::MatrixXd> qllt(true_params.Qcov);
  require(qllt.info() == Eigen::Success, "Qcov is not SPD");
  Eigen::MatrixXd chol_q = qllt.matrixL();

  for (int t = t0; t < T; ++t) {
    Eigen::VectorXd beta = transition_intercept(spec, true_params, out.data.y, t) +
                           true_params.theta * out.states.beta_at(spec, t - 1) +
                           chol_q * rng.normal_vec(k);
    out.states.set_beta(spec, t, beta);
    out.states.theta_parent.row(t) = rng.normal_vec(n).transpose();
    out.states.tau.row(t) = out.states.theta_parent.row(t).cwiseAbs();
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) {
      double h = std::clamp(out.states.h(t, i), -kLogVarClamp, kLogVarClamp);
      e(i) = std::exp(0.5 * h) * rng.normal();
    }
    Eigen::VectorXd big_e = e;
    if (spec.has_skew())
      big_e += out.states.d.row(t).transpose().cwiseProduct(out.states.tau.row(t).transpose());
    Eigen::VectorXd y =
        observation_mean(spec, true_params, out.data.y, out.states.h, out.states.d, t) +
        true_params.A.triangularView<Eigen::Lower>().solve(big_e);
    require(y.cwiseAbs().maxCoeff() <= 1e8,
            "simulated path explosive at t = {} (|Y| > 1e8); use tamer parameters", t);
    out.data.y.row(t) = y.transpose();
  }
  return out;
}

}  // namespace skewvar
