#include "skewvar/priors.hpp"

#include <cmath>

#include "skewvar/error.hpp"
#include "skewvar/linalg.hpp"
#include "skewvar/sampler.hpp"

namespace skewvar {

namespace {

constexpr double kMaskedVariance = 1e-9;

// Shared block construction: n equations, P own lags with Minnesota decay,
// EX extra regressors with per-column tightness.
DummyObs dummy_blocks(const Eigen::VectorXd& gamma, const Eigen::VectorXd& s, double tau,
                      int n, int p, const std::vector<double>& ex_c) {
  require(tau > 0, "dummy prior tightness tau must be positive, got {}", tau);
  require(gamma.size() == n && s.size() == n,
          "dummy prior needs {} gamma/s entries, got {} and {}", n, gamma.size(), s.size());
  require(gamma.allFinite(), "dummy prior gamma contains non-finite entries");
  for (int i = 0; i < n; ++i)
    require(s(i) > 0, "degenerate residual scale s[{}] = {}", i, s(i));
  const int ex = static_cast<int>(ex_c.size());
  const int rows = n * p + ex;
  DummyObs d;
  d.y = Eigen::MatrixXd::Zero(rows, n);
  d.x = Eigen::MatrixXd::Zero(rows, n * p + ex);
  for (int i = 0; i < n; ++i) d.y(i, i) = gamma(i) * s(i) / tau;
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i)
      d.x(j * n + i, j * n + i) = (j + 1) * s(i) / tau;
  for (int r = 0; r < ex; ++r) {
    require(ex_c[static_cast<size_t>(r)] > 0, "tightness c must be positive");
    d.x(n * p + r, n * p + r) = 1.0 / ex_c[static_cast<size_t>(r)];
  }
  return d;
}

}  // namespace

DummyObs build_dummy_observations(const DummyPriorConfig& cfg, const ModelSpec& spec) {
  std::vector<double> ex_c;
  if (spec.has_feedback()) {
    for (int i = 0; i < spec.state_dim() * spec.l_inmean_lags; ++i) ex_c.push_back(cfg.c_vol);
  }
  ex_c.push_back(cfg.c_flat);
  return dummy_blocks(cfg.gamma, cfg.s, cfg.tau_tight, spec.n_vars, spec.p_obs_lags, ex_c);
}

DummyObs transition_dummy_observations(const DummyPriorConfig& cfg, const ModelSpec& spec) {
  std::vector<double> ex_c;
  for (int i = 0; i < spec.n_vars * spec.effective_q(); ++i) ex_c.push_back(cfg.c_vol);
  ex_c.push_back(cfg.c_flat);
  return dummy_blocks(cfg.gamma, cfg.s, cfg.tau_tight, spec.state_dim(), 1, ex_c);
}

GaussianPrior prior_from_dummies(const Eigen::MatrixXd& y_d, const Eigen::MatrixXd& x_d,
                                 const Eigen::MatrixXd& s_scale) {
  const auto m = x_d.cols();
  const auto n = y_d.cols();
  require(x_d.rows() == y_d.rows(), "dummy blocks disagree: x has {} rows, y has {}", x_d.rows(),
          y_d.rows());
  require(s_scale.rows() == n && s_scale.cols() == n, "scale matrix must be {0}x{0}", n);
  Eigen::MatrixXd xtx = x_d.transpose() * x_d;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  require(llt.info() == Eigen::Success,
          "x_D'x_D is singular; increase the prior tightness (smaller tau or c)");
  Eigen::MatrixXd xtx_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::MatrixXd coef = llt.solve(x_d.transpose() * y_d);  // m x n
  GaussianPrior prior;
  prior.mean = Eigen::Map<const Eigen::VectorXd>(coef.data(), m * n);
  prior.cov = kron(s_scale, xtx_inv);
  prior.cov = 0.5 * (prior.cov + prior.cov.transpose());
  return prior;
}

std::vector<int> theta_cross_block_mask(const ModelSpec& spec) {
  std::vector<int> mask;
  if (!spec.has_skew()) return mask;
  const int k = spec.state_dim();
  const int n = spec.n_vars;
  const int m = spec.n_trans_regressors();
  for (int eq = 0; eq < k; ++eq)
    for (int reg = 0; reg < k; ++reg)
      if ((eq < n) != (reg < n)) mask.push_back(eq * m + reg);
  return mask;
}

GaussianPrior transition_prior(const ModelSpec& spec, const DummyPriorConfig& cfg,
                               const std::vector<int>& tightening_mask) {
  DummyObs d = transition_dummy_observations(cfg, spec);
  Eigen::MatrixXd s_scale = cfg.s.array().square().matrix().asDiagonal();
  GaussianPrior prior = prior_from_dummies(d.y, d.x, s_scale);
  for (int idx : tightening_mask) {
    require(idx >= 0 && idx < prior.mean.size(), "mask index {} out of range", idx);
    prior.mean(idx) = 0.0;
    prior.cov.row(idx).setZero();
    prior.cov.col(idx).setZero();
    prior.cov(idx, idx) = kMaskedVariance;
  }
  return prior;
}

void ar1_hyperparameters(const Eigen::MatrixXd& y, Eigen::VectorXd& gamma, Eigen::VectorXd& s) {
  const auto t = y.rows();
  const auto n = y.cols();
  require(t >= 4, "AR(1) hyperparameters need at least 4 observations, got {}", t);
  gamma.resize(n);
  s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd x(t - 1, 2);
    x.col(0).setOnes();
    x.col(1) = y.col(i).head(t - 1);
    Eigen::VectorXd yy = y.col(i).tail(t - 1);
    Eigen::VectorXd coef = least_squares(x, yy);
    Eigen::VectorXd resid = yy - x * coef;
    gamma(i) = coef(1);
    s(i) = std::sqrt(resid.squaredNorm() / static_cast<double>(t - 3));
  }
}

Eigen::MatrixXd training_scale(const Eigen::MatrixXd& y) {
  const auto t = y.rows();
  require(t >= 2, "training scale needs at least 2 rows");
  Eigen::RowVectorXd mean = y.colwise().mean();
  Eigen::MatrixXd centered = y.rowwise() - mean;
  Eigen::VectorXd var = centered.array().square().colwise().sum() / static_cast<double>(t - 1);
  return var.asDiagonal();
}

std::vector<GaussianPrior> a_row_priors(const Eigen::MatrixXd& v) {
  const auto n = v.cols();
  const auto t = v.rows();
  require(t > n + 1, "a_row_priors needs more residual rows than variables");
  Eigen::RowVectorXd mean = v.colwise().mean();
  Eigen::MatrixXd centered = v.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(t - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require(llt.info() == Eigen::Success, "residual covariance for the A prior is not SPD");
  Eigen::MatrixXd cinv =
      Eigen::MatrixXd(llt.matrixL()).triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(n, n));
  std::vector<GaussianPrior> priors;
  for (Eigen::Index k = 1; k < n; ++k) {
    GaussianPrior p;
    p.mean = (cinv.row(k).head(k) / cinv(k, k)).transpose();
    p.cov = Eigen::MatrixXd::Identity(k, k);
    priors.push_back(std::move(p));
  }
  return priors;
}

namespace {

Variant pre_model_variant(const ModelSpec& spec) {
  return spec.has_skew() ? Variant::RestrictedNoFeedback : Variant::SvOnlyNoFeedback;
}

// Plain VAR OLS (Y lags + intercept), optionally with lagged state regressors.
Eigen::MatrixXd var_ols_residuals(const Dataset& data, const ModelSpec& spec,
                                  const Eigen::MatrixXd* state_means) {
  const int t0 = spec.first_usable();
  const int t = data.rows();
  const int n = spec.n_vars;
  const int k = spec.state_dim();
  const bool with_states = state_means != nullptr && spec.has_feedback();
  const int m = n * spec.p_obs_lags + (with_states ? k * spec.l_inmean_lags : 0) + 1;
  Eigen::MatrixXd x(t - t0, m);
  Eigen::MatrixXd y(t - t0, n);
  for (int r = t0; r < t; ++r) {
    int c = 0;
    for (int j = 0; j < spec.p_obs_lags; ++j)
      for (int i = 0; i < n; ++i) x(r - t0, c++) = data.y(r - 1 - j, i);
    if (with_states)
      for (int l = 0; l < spec.l_inmean_lags; ++l)
        for (int i = 0; i < k; ++i) x(r - t0, c++) = (*state_means)(r - 1 - l, i);
    x(r - t0, c) = 1.0;
    y.row(r - t0) = data.y.row(r);
  }
  Eigen::MatrixXd coef = least_squares(x, y);
  return y - x * coef;
}

}  // namespace

StateInit initialize_states(const Dataset& data, const ModelSpec& spec,
                            const DummyPriorConfig& obs_cfg, const PreModelConfig& pre_cfg,
                            RngHandle& rng) {
  ModelSpec pre = spec;
  pre.variant = pre_model_variant(spec);
  pre.n_draws = pre_cfg.n_draws;
  pre.n_burn = pre_cfg.n_burn;
  pre.thin = 1;
  pre.validate();
  data.validate(pre);

  const int n = pre.n_vars;
  const int k = pre.state_dim();
  const int t = data.rows();
  const int t0 = pre.first_usable();

  // Plain VAR OLS for the A prior and the volatility level seed.
  Eigen::MatrixXd resid = var_ols_residuals(data, pre, nullptr);
  Eigen::VectorXd h0(n);
  for (int i = 0; i < n; ++i) {
    double v = resid.col(i).squaredNorm() / static_cast<double>(resid.rows());
    require(v > 0, "degenerate OLS residual variance for variable {}", i);
    h0(i) = std::log(v);
  }

  PriorSet priors;
  {
    DummyObs d = build_dummy_observations(obs_cfg, pre);
    priors.var_coeffs = prior_from_dummies(d.y, d.x, training_scale(data.y));
  }
  {
    DummyPriorConfig tcfg = obs_cfg;
    tcfg.gamma = Eigen::VectorXd::Constant(k, 0.95);
    tcfg.s = Eigen::VectorXd::Constant(k, 0.1);
    priors.transition = transition_prior(pre, tcfg, theta_cross_block_mask(pre));
  }
  priors.a_rows = n > 1 ? a_row_priors(resid) : std::vector<GaussianPrior>{};
  priors.qcov.scale = 0.1 * Eigen::MatrixXd::Identity(k, k);
  priors.qcov.dof = k + 1;

  StackedLayout layout{n, k, pre.l_inmean_lags};
  priors.init_state.mean = Eigen::VectorXd::Zero(layout.dim());
  for (int l = 0; l <= pre.l_inmean_lags; ++l)
    priors.init_state.mean.segment(n + l * k, n) = h0;  // h block; d block stays 0
  priors.init_state.cov = Eigen::MatrixXd::Identity(layout.dim(), layout.dim());

  StatePath seed = StatePath::zero(t, n);
  seed.h = h0.transpose().replicate(t, 1);

  Chain chain = run_gibbs(pre, data, priors, seed, rng);
  require(chain.size() > 0, "pre-model chain stored no draws");

  StateInit out;
  out.state_means = Eigen::MatrixXd::Zero(t, k);
  out.q_diag = Eigen::VectorXd::Zero(k);
  for (const auto& sp : chain.states) {
    out.state_means.leftCols(n) += sp.h;
    if (pre.has_skew()) out.state_means.rightCols(n) += sp.d;
  }
  out.state_means /= static_cast<double>(chain.size());
  for (const auto& p : chain.params) out.q_diag += p.Qcov.diagonal();
  out.q_diag /= static_cast<double>(chain.size());

  out.prior.mean = Eigen::VectorXd::Zero(layout.dim());
  for (int l = 0; l <= pre.l_inmean_lags; ++l)
    out.prior.mean.segment(n + l * k, k) = out.state_means.row(t0).transpose();
  out.prior.cov = Eigen::MatrixXd::Identity(layout.dim(), layout.dim());

  out.seed = chain.states.back();
  ar1_hyperparameters(out.state_means.bottomRows(t - t0), out.trans_gamma, out.trans_s);
  return out;
}

AssembledPriors assemble_priors(const Dataset& data, const ModelSpec& spec,
                                DummyPriorConfig obs_cfg, const PreModelConfig& pre_cfg,
                                int training_rows, RngHandle& rng) {
  spec.validate();
  data.validate(spec);
  require(training_rows >= spec.first_usable() + 4 && training_rows <= data.rows(),
          "training window of {} rows is unusable (T = {})", training_rows, data.rows());
  Eigen::MatrixXd ytrain = data.y.topRows(training_rows);
  ar1_hyperparameters(ytrain, obs_cfg.gamma, obs_cfg.s);
  Eigen::MatrixXd s_scale = training_scale(ytrain);

  StateInit init = initialize_states(data, spec, obs_cfg, pre_cfg, rng);

  AssembledPriors out;
  {
    DummyObs d = build_dummy_observations(obs_cfg, spec);
    out.priors.var_coeffs = prior_from_dummies(d.y, d.x, s_scale);
  }
  {
    DummyPriorConfig tcfg = obs_cfg;
    tcfg.gamma = init.trans_gamma;
    tcfg.s = init.trans_s;
    out.priors.transition = transition_prior(spec, tcfg, theta_cross_block_mask(spec));
  }
  if (spec.n_vars > 1) {
    Eigen::MatrixXd resid = var_ols_residuals(data, spec, &init.state_means);
    out.priors.a_rows = a_row_priors(resid);
  }
  out.priors.qcov.scale = Eigen::MatrixXd(init.q_diag.asDiagonal());
  out.priors.qcov.dof = spec.state_dim() + 1;
  out.priors.init_state = init.prior;
  out.init_path = init.seed;
  return out;
}

}  // namespace skewvar
