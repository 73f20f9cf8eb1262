#include "skewvar/model.hpp"

#include <algorithm>
#include <cmath>

#include "skewvar/error.hpp"

namespace skewvar {

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "restricted") return Variant::RestrictedNoFeedback;
  if (s == "svonly") return Variant::SvOnly;
  if (s == "svonly_restricted") return Variant::SvOnlyNoFeedback;
  fail("unknown variant '{}' (expected full|restricted|svonly|svonly_restricted)", s);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::RestrictedNoFeedback: return "restricted";
    case Variant::SvOnly: return "svonly";
    case Variant::SvOnlyNoFeedback: return "svonly_restricted";
  }
  return "?";
}

int ModelSpec::first_usable() const {
  return std::max({p_obs_lags, effective_q(), l_inmean_lags});
}

int ModelSpec::n_obs_regressors() const {
  int ex = has_feedback() ? state_dim() * l_inmean_lags : 0;
  return n_vars * p_obs_lags + ex + 1;
}

int ModelSpec::n_trans_regressors() const {
  return state_dim() + n_vars * effective_q() + 1;
}

void ModelSpec::validate() const {
  require(n_vars >= 1, "n_vars must be >= 1, got {}", n_vars);
  require(p_obs_lags >= 1, "p_obs_lags must be >= 1, got {}", p_obs_lags);
  require(l_inmean_lags >= 1, "l_inmean_lags must be >= 1, got {}", l_inmean_lags);
  require(q_state_lags >= 0, "q_state_lags must be >= 0, got {}", q_state_lags);
  require(n_particles >= 1, "n_particles must be >= 1, got {}", n_particles);
  require(ancestor_factors >= 0, "ancestor_factors must be >= 0, got {}", ancestor_factors);
  require(n_draws >= n_burn && n_burn >= 0, "need n_draws >= n_burn >= 0, got {} / {}", n_draws,
          n_burn);
  require(thin >= 1, "thin must be >= 1, got {}", thin);
}

ParameterDraw ParameterDraw::zero(const ModelSpec& spec) {
  const int n = spec.n_vars;
  const int k = spec.state_dim();
  ParameterDraw p;
  p.c = Eigen::VectorXd::Zero(n);
  p.B.assign(spec.p_obs_lags, Eigen::MatrixXd::Zero(n, n));
  p.b_in.assign(spec.l_inmean_lags, Eigen::MatrixXd::Zero(n, n));
  p.a_in.assign(spec.l_inmean_lags, Eigen::MatrixXd::Zero(n, n));
  p.A = Eigen::MatrixXd::Identity(n, n);
  p.alpha = Eigen::VectorXd::Zero(k);
  p.theta = Eigen::MatrixXd::Zero(k, k);
  p.d_y.assign(spec.effective_q(), Eigen::MatrixXd::Zero(k, n));
  p.Qcov = Eigen::MatrixXd::Identity(k, k);
  return p;
}

namespace {

void check_dims(const Eigen::MatrixXd& m, int rows, int cols, const char* name) {
  require(m.rows() == rows && m.cols() == cols, "matrix {} is {}x{}, expected {}x{}", name,
          m.rows(), m.cols(), rows, cols);
}

}  // namespace

void ParameterDraw::validate(const ModelSpec& spec) const {
  const int n = spec.n_vars;
  const int k = spec.state_dim();
  require(c.size() == n, "intercept c has {} entries, expected {}", c.size(), n);
  require(static_cast<int>(B.size()) == spec.p_obs_lags, "B holds {} lags, expected {}", B.size(),
          spec.p_obs_lags);
  for (const auto& m : B) check_dims(m, n, n, "B_j");
  require(static_cast<int>(b_in.size()) == spec.l_inmean_lags, "b_in holds {} lags, expected {}",
          b_in.size(), spec.l_inmean_lags);
  require(static_cast<int>(a_in.size()) == spec.l_inmean_lags, "a_in holds {} lags, expected {}",
          a_in.size(), spec.l_inmean_lags);
  for (const auto& m : b_in) check_dims(m, n, n, "b_l");
  for (const auto& m : a_in) check_dims(m, n, n, "a_l");
  check_dims(A, n, n, "A");
  for (int i = 0; i < n; ++i) {
    require(A(i, i) == 1.0, "A must have unit diagonal, A({0},{0}) = {1}", i, A(i, i));
    for (int j = i + 1; j < n; ++j)
      require(A(i, j) == 0.0, "A must be lower triangular, A({},{}) = {}", i, j, A(i, j));
  }
  require(alpha.size() == k, "alpha has {} entries, expected {}", alpha.size(), k);
  check_dims(theta, k, k, "theta");
  if (spec.has_skew()) {
    // Block-diagonal: no cross terms between the volatility and skewness blocks.
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if ((i < n) != (j < n))
          require(theta(i, j) == 0.0, "theta cross-block entry ({},{}) = {}", i, j, theta(i, j));
  }
  require(static_cast<int>(d_y.size()) == spec.effective_q(), "d_y holds {} lags, expected {}",
          d_y.size(), spec.effective_q());
  for (const auto& m : d_y) check_dims(m, k, n, "d_j");
  check_dims(Qcov, k, k, "Qcov");
  Eigen::LLT<Eigen::MatrixXd> llt(Qcov);
  require(llt.info() == Eigen::Success, "Qcov fails Cholesky factorization");
}

StatePath StatePath::zero(int T, int n_vars) {
  StatePath s;
  s.h = Eigen::MatrixXd::Zero(T, n_vars);
  s.d = Eigen::MatrixXd::Zero(T, n_vars);
  s.theta_parent = Eigen::MatrixXd::Zero(T, n_vars);
  s.tau = Eigen::MatrixXd::Zero(T, n_vars);
  return s;
}

Eigen::VectorXd StatePath::beta_at(const ModelSpec& spec, int t) const {
  const int n = spec.n_vars;
  Eigen::VectorXd beta(spec.state_dim());
  beta.head(n) = h.row(t).transpose();
  if (spec.has_skew()) beta.tail(n) = d.row(t).transpose();
  return beta;
}

void StatePath::set_beta(const ModelSpec& spec, int t, const Eigen::VectorXd& beta) {
  const int n = spec.n_vars;
  h.row(t) = beta.head(n).transpose();
  if (spec.has_skew()) d.row(t) = beta.tail(n).transpose();
}

void StatePath::validate(const ModelSpec& spec) const {
  require(h.cols() == spec.n_vars, "state path h has {} columns, expected {}", h.cols(),
          spec.n_vars);
  require(d.rows() == h.rows() && theta_parent.rows() == h.rows() && tau.rows() == h.rows(),
          "state path matrices disagree on T");
  require((tau - theta_parent.cwiseAbs()).cwiseAbs().maxCoeff() == 0.0,
          "tau must equal |theta_parent| exactly");
  require(tau.minCoeff() >= 0.0, "tau must be nonnegative");
  require(h.allFinite(), "state path h contains non-finite entries");
}

int Dataset::row_of(Quarter q) const {
  for (size_t i = 0; i < dates.size(); ++i)
    if (dates[i] == q) return static_cast<int>(i);
  return -1;
}

Dataset Dataset::through_row(int last_row) const {
  require(last_row >= 0 && last_row < rows(), "through_row({}) outside 0..{}", last_row,
          rows() - 1);
  Dataset out;
  out.y = y.topRows(last_row + 1);
  out.labels = labels;
  out.dates.assign(dates.begin(), dates.begin() + last_row + 1);
  return out;
}

void Dataset::validate(const ModelSpec& spec) const {
  require(cols() == spec.n_vars, "dataset has {} variables, spec expects {}", cols(), spec.n_vars);
  require(y.allFinite(), "dataset contains missing or non-finite values");
  require(rows() > spec.p_obs_lags + spec.q_state_lags + spec.l_inmean_lags,
          "dataset too short: T = {} with P = {}, q = {}, L = {}", rows(), spec.p_obs_lags,
          spec.q_state_lags, spec.l_inmean_lags);
  require(static_cast<int>(labels.size()) == cols(), "dataset has {} labels for {} columns",
          labels.size(), cols());
}

Eigen::VectorXd observation_mean(const ModelSpec& spec, const ParameterDraw& params,
                                 const Eigen::MatrixXd& y, const Eigen::MatrixXd& h,
                                 const Eigen::MatrixXd& d, int t) {
  const int n = spec.n_vars;
  require(y.cols() == n, "matrix y has {} columns, expected {}", y.cols(), n);
  require(t >= spec.first_usable() && t < y.rows(), "t = {} outside usable range [{}, {})", t,
          spec.first_usable(), y.rows());
  require(params.c.size() == n, "matrix c has {} entries, expected {}", params.c.size(), n);
  for (const auto& m : params.B)
    require(m.rows() == n && m.cols() == n, "matrix B_j is {}x{}, expected {}x{}", m.rows(),
            m.cols(), n, n);
  for (const auto& m : params.b_in)
    require(m.rows() == n && m.cols() == n, "matrix b_l is {}x{}, expected {}x{}", m.rows(),
            m.cols(), n, n);
  for (const auto& m : params.a_in)
    require(m.rows() == n && m.cols() == n, "matrix a_l is {}x{}, expected {}x{}", m.rows(),
            m.cols(), n, n);
  require(h.cols() == n && d.cols() == n, "state matrices have {}/{} columns, expected {}",
          h.cols(), d.cols(), n);
  Eigen::VectorXd mean = params.c;
  for (int j = 0; j < spec.p_obs_lags; ++j) mean += params.B[j] * y.row(t - 1 - j).transpose();
  for (int l = 0; l < spec.l_inmean_lags; ++l) {
    mean += params.b_in[l] * h.row(t - 1 - l).transpose();
    if (spec.has_skew()) mean += params.a_in[l] * d.row(t - 1 - l).transpose();
  }
  return mean;
}

Eigen::VectorXd observation_mean(const ModelSpec& spec, const ParameterDraw& params,
                                 const StatePath& states, const Dataset& data, int t) {
  return observation_mean(spec, params, data.y, states.h, states.d, t);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> observation_residual(const ModelSpec& spec,
                                                                 const ParameterDraw& params,
                                                                 const StatePath& states,
                                                                 const Dataset& data, int t) {
  Eigen::VectorXd V = data.y.row(t).transpose() - observation_mean(spec, params, states, data, t);
  Eigen::VectorXd E = params.A * V;
  return {E, V};
}

double conditional_loglik(const ModelSpec& spec, const ParameterDraw& params,
                          const StatePath& states, const Dataset& data, int t) {
  const int n = spec.n_vars;
  constexpr double kLog2Pi = 1.8378770664093454836;
  Eigen::VectorXd hrow = states.h.row(t).transpose();
  require(hrow.allFinite(), "conditional_loglik: non-finite h at t = {}", t);
  Eigen::VectorXd resid =
      data.y.row(t).transpose() - observation_mean(spec, params, states, data, t);
  if (spec.has_skew()) {
    Eigen::VectorXd skew = states.d.row(t).transpose().cwiseProduct(states.tau.row(t).transpose());
    resid -= params.A.triangularView<Eigen::Lower>().solve(skew);
  }
  Eigen::VectorXd hexp(n);
  for (int i = 0; i < n; ++i)
    hexp(i) = std::exp(std::clamp(hrow(i), -kLogVarClamp, kLogVarClamp));
  Eigen::MatrixXd Ainv =
      params.A.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd sigma = Ainv * hexp.asDiagonal() * Ainv.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  require(llt.info() == Eigen::Success, "conditional_loglik: Sigma_t not SPD at t = {}", t);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  Eigen::VectorXd w = llt.matrixL().solve(resid);
  return -0.5 * (n * kLog2Pi + logdet + w.squaredNorm());
}

Eigen::VectorXd transition_intercept(const ModelSpec& spec, const ParameterDraw& params,
                                     const Eigen::MatrixXd& y, int t) {
  Eigen::VectorXd out = params.alpha;
  for (int j = 0; j < spec.effective_q(); ++j) out += params.d_y[j] * y.row(t - 1 - j).transpose();
  return out;
}

}  // namespace skewvar
