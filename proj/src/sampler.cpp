#include "skewvar/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "skewvar/error.hpp"
#include "skewvar/linalg.hpp"

namespace skewvar {

Eigen::VectorXd obs_regressors(const ModelSpec& spec, const Eigen::MatrixXd& y,
                               const Eigen::MatrixXd& h, const Eigen::MatrixXd& d, int t) {
  const int n = spec.n_vars;
  Eigen::VectorXd x(spec.n_obs_regressors());
  int c = 0;
  for (int j = 0; j < spec.p_obs_lags; ++j)
    for (int i = 0; i < n; ++i) x(c++) = y(t - 1 - j, i);
  if (spec.has_feedback()) {
    for (int l = 0; l < spec.l_inmean_lags; ++l) {
      for (int i = 0; i < n; ++i) x(c++) = h(t - 1 - l, i);
      if (spec.has_skew())
        for (int i = 0; i < n; ++i) x(c++) = d(t - 1 - l, i);
    }
  }
  x(c) = 1.0;
  return x;
}

void unpack_obs_coeffs(const ModelSpec& spec, const Eigen::VectorXd& stacked,
                       ParameterDraw& params) {
  const int n = spec.n_vars;
  const int m = spec.n_obs_regressors();
  require(stacked.size() == n * m, "stacked VAR coefficients have {} entries, expected {}",
          stacked.size(), n * m);
  params.B.assign(spec.p_obs_lags, Eigen::MatrixXd::Zero(n, n));
  params.b_in.assign(spec.l_inmean_lags, Eigen::MatrixXd::Zero(n, n));
  params.a_in.assign(spec.l_inmean_lags, Eigen::MatrixXd::Zero(n, n));
  params.c.resize(n);
  for (int eq = 0; eq < n; ++eq) {
    const auto col = stacked.segment(eq * m, m);
    int c = 0;
    for (int j = 0; j < spec.p_obs_lags; ++j)
      for (int i = 0; i < n; ++i) params.B[j](eq, i) = col(c++);
    if (spec.has_feedback()) {
      for (int l = 0; l < spec.l_inmean_lags; ++l) {
        for (int i = 0; i < n; ++i) params.b_in[l](eq, i) = col(c++);
        if (spec.has_skew())
          for (int i = 0; i < n; ++i) params.a_in[l](eq, i) = col(c++);
      }
    }
    params.c(eq) = col(c);
  }
}

void unpack_trans_coeffs(const ModelSpec& spec, const Eigen::VectorXd& stacked,
                         ParameterDraw& params) {
  const int k = spec.state_dim();
  const int n = spec.n_vars;
  const int m = spec.n_trans_regressors();
  require(stacked.size() == k * m, "stacked transition coefficients have {} entries, expected {}",
          stacked.size(), k * m);
  params.theta.resize(k, k);
  params.alpha.resize(k);
  params.d_y.assign(spec.effective_q(), Eigen::MatrixXd::Zero(k, n));
  for (int eq = 0; eq < k; ++eq) {
    const auto col = stacked.segment(eq * m, m);
    int c = 0;
    for (int i = 0; i < k; ++i) params.theta(eq, i) = col(c++);
    for (int j = 0; j < spec.effective_q(); ++j)
      for (int i = 0; i < n; ++i) params.d_y[j](eq, i) = col(c++);
    params.alpha(eq) = col(c);
  }
  // Hard block-diagonality: the masked prior already shrinks these to ~0.
  if (spec.has_skew())
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if ((i < n) != (j < n)) params.theta(i, j) = 0.0;
}

namespace {

// Draw from N(mean, cov) where cov came out of a posterior-precision solve.
Eigen::VectorXd draw_mvn_sym(const MomentPair& mom, RngHandle& rng) {
  Eigen::MatrixXd cov = 0.5 * (mom.cov + mom.cov.transpose());
  return draw_mvn(mom.mean, cov, rng);
}

void trans_design(const ModelSpec& spec, const StatePath& states, const Dataset& data,
                  Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  const int t0 = spec.first_usable();
  const int t_end = data.rows();
  const int m = spec.n_trans_regressors();
  const int k = spec.state_dim();
  const int n = spec.n_vars;
  x.resize(t_end - t0, m);
  y.resize(t_end - t0, k);
  for (int t = t0; t < t_end; ++t) {
    int c = 0;
    Eigen::VectorXd beta_prev = states.beta_at(spec, t - 1);
    for (int i = 0; i < k; ++i) x(t - t0, c++) = beta_prev(i);
    for (int j = 0; j < spec.effective_q(); ++j)
      for (int i = 0; i < n; ++i) x(t - t0, c++) = data.y(t - 1 - j, i);
    x(t - t0, c) = 1.0;
    y.row(t - t0) = states.beta_at(spec, t).transpose();
  }
}

}  // namespace

MomentPair transition_posterior_moments(const ModelSpec& spec, const StatePath& states,
                                        const Dataset& data, const GaussianPrior& prior,
                                        const Eigen::MatrixXd& qcov) {
  const int k = spec.state_dim();
  const int m = spec.n_trans_regressors();
  Eigen::MatrixXd x, y;
  trans_design(spec, states, data, x, y);
  Eigen::MatrixXd xtx = x.transpose() * x;
  Eigen::MatrixXd xty = x.transpose() * y;
  Eigen::LLT<Eigen::MatrixXd> qllt(qcov);
  require(qllt.info() == Eigen::Success, "Qcov not SPD in the transition block");
  Eigen::MatrixXd qinv = qllt.solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::LDLT<Eigen::MatrixXd> p0(prior.cov);
  require(p0.info() == Eigen::Success, "transition prior covariance is not factorizable");
  Eigen::MatrixXd p0inv = p0.solve(Eigen::MatrixXd::Identity(k * m, k * m));
  Eigen::MatrixXd precision = p0inv + kron(qinv, xtx);
  // Data term (Q^-1 (x) x'x) bhat = vec(x'y Q^-1).
  Eigen::MatrixXd xtyq = xty * qinv;
  Eigen::VectorXd rhs =
      p0inv * prior.mean + Eigen::Map<const Eigen::VectorXd>(xtyq.data(), k * m);
  Eigen::LDLT<Eigen::MatrixXd> pl(precision);
  require(pl.info() == Eigen::Success && pl.isPositive(),
          "singular posterior precision in the transition block");
  MomentPair out;
  out.cov = pl.solve(Eigen::MatrixXd::Identity(k * m, k * m));
  out.mean = pl.solve(rhs);
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

void draw_transition_coeffs(const ModelSpec& spec, const StatePath& states, const Dataset& data,
                            const GaussianPrior& prior, ParameterDraw& params, RngHandle& rng) {
  MomentPair mom = transition_posterior_moments(spec, states, data, prior, params.Qcov);
  unpack_trans_coeffs(spec, draw_mvn_sym(mom, rng), params);
}

Eigen::MatrixXd transition_residuals(const ModelSpec& spec, const ParameterDraw& params,
                                     const StatePath& states, const Dataset& data) {
  const int t0 = spec.first_usable();
  const int t_end = data.rows();
  Eigen::MatrixXd eta(t_end - t0, spec.state_dim());
  for (int t = t0; t < t_end; ++t) {
    Eigen::VectorXd mean = transition_intercept(spec, params, data.y, t) +
                           params.theta * states.beta_at(spec, t - 1);
    eta.row(t - t0) = (states.beta_at(spec, t) - mean).transpose();
  }
  return eta;
}

Eigen::MatrixXd draw_qcov(const Eigen::MatrixXd& eta, const IWPrior& prior, RngHandle& rng) {
  Eigen::MatrixXd scale = eta.transpose() * eta + prior.scale;
  return draw_inverse_wishart(scale, static_cast<int>(eta.rows()) + prior.dof, rng);
}

MomentPair a_row_posterior_moments(int k, const Eigen::MatrixXd& v_path, const StatePath& states,
                                   const GaussianPrior& prior, int t0) {
  const int rows = static_cast<int>(v_path.rows()) - t0;
  require(k >= 1 && k < v_path.cols(), "A row index {} out of range", k);
  Eigen::MatrixXd x(rows, k);
  Eigen::VectorXd y(rows);
  for (int t = t0; t < v_path.rows(); ++t) {
    const double w = std::exp(-0.5 * std::clamp(states.h(t, k), -kLogVarClamp, kLogVarClamp));
    y(t - t0) = (v_path(t, k) - states.d(t, k) * states.tau(t, k)) * w;
    x.row(t - t0) = -v_path.row(t).head(k) * w;
  }
  Eigen::LDLT<Eigen::MatrixXd> p0(prior.cov);
  Eigen::MatrixXd p0inv = p0.solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd precision = p0inv + x.transpose() * x;
  Eigen::LDLT<Eigen::MatrixXd> pl(precision);
  require(pl.info() == Eigen::Success, "singular posterior precision in the A block (row {})", k);
  MomentPair out;
  out.cov = pl.solve(Eigen::MatrixXd::Identity(k, k));
  out.mean = pl.solve(p0inv * prior.mean + x.transpose() * y);
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

Eigen::MatrixXd draw_a_rows(const ModelSpec& spec, const Eigen::MatrixXd& v_path,
                            const StatePath& states, const std::vector<GaussianPrior>& priors,
                            RngHandle& rng) {
  const int n = spec.n_vars;
  require(static_cast<int>(priors.size()) == n - 1, "expected {} A-row priors, got {}", n - 1,
          priors.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  const int t0 = spec.first_usable();
  for (int k = 1; k < n; ++k) {
    MomentPair mom = a_row_posterior_moments(k, v_path, states, priors[k - 1], t0);
    a.row(k).head(k) = draw_mvn_sym(mom, rng).transpose();
  }
  return a;
}

MomentPair var_coeffs_posterior_moments(const ModelSpec& spec, const StatePath& states,
                                        const Dataset& data, const ParameterDraw& params,
                                        const GaussianPrior& prior) {
  const int n = spec.n_vars;
  const int m = spec.n_obs_regressors();
  const int dim = n * m;
  const int t0 = spec.first_usable();
  require(prior.mean.size() == dim, "VAR coefficient prior has dim {}, expected {}",
          prior.mean.size(), dim);
  Eigen::MatrixXd a_inv =
      params.A.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd mean = prior.mean;
  Eigen::MatrixXd p = prior.cov;
  for (int t = t0; t < data.rows(); ++t) {
    Eigen::VectorXd x = obs_regressors(spec, data.y, states.h, states.d, t);
    Eigen::VectorXd hexp(n);
    for (int i = 0; i < n; ++i)
      hexp(i) = std::exp(std::clamp(states.h(t, i), -kLogVarClamp, kLogVarClamp));
    Eigen::MatrixXd sigma = a_inv * hexp.asDiagonal() * a_inv.transpose();
    Eigen::VectorXd ystar = data.y.row(t).transpose();
    if (spec.has_skew())
      ystar -= a_inv * states.d.row(t).transpose().cwiseProduct(states.tau.row(t).transpose());
    // Innovation with X_t = I_N (x) x'.
    Eigen::VectorXd pred(n);
    for (int i = 0; i < n; ++i) pred(i) = x.dot(mean.segment(i * m, m));
    Eigen::VectorXd innov = ystar - pred;
    Eigen::MatrixXd px(dim, n);  // P X'
    for (int i = 0; i < n; ++i) px.col(i) = p.block(0, i * m, dim, m) * x;
    Eigen::MatrixXd s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = x.dot(px.col(j).segment(i * m, m));
    s += sigma;
    s = 0.5 * (s + s.transpose());
    Eigen::LLT<Eigen::MatrixXd> sllt(s);
    require(sllt.info() == Eigen::Success,
            "filter covariance loses positive definiteness at t = {}", t);
    Eigen::MatrixXd gain = sllt.solve(px.transpose()).transpose();  // P X' S^-1
    mean += gain * innov;
    p -= gain * px.transpose();
    p = 0.5 * (p + p.transpose());
  }
  return {mean, p};
}

void draw_var_coeffs_kf(const ModelSpec& spec, const StatePath& states, const Dataset& data,
                        const GaussianPrior& prior, ParameterDraw& params, RngHandle& rng) {
  MomentPair mom = var_coeffs_posterior_moments(spec, states, data, params, prior);
  unpack_obs_coeffs(spec, draw_mvn_sym(mom, rng), params);
}

ParameterDraw params_from_prior_means(const ModelSpec& spec, const PriorSet& priors) {
  const int k = spec.state_dim();
  ParameterDraw p = ParameterDraw::zero(spec);
  unpack_obs_coeffs(spec, priors.var_coeffs.mean, p);
  unpack_trans_coeffs(spec, priors.transition.mean, p);
  for (size_t r = 0; r < priors.a_rows.size(); ++r)
    p.A.row(static_cast<int>(r) + 1).head(r + 1) = priors.a_rows[r].mean.transpose();
  if (priors.qcov.dof > k + 1)
    p.Qcov = priors.qcov.scale / static_cast<double>(priors.qcov.dof - k - 1);
  else
    p.Qcov = priors.qcov.scale / static_cast<double>(priors.qcov.dof);
  return p;
}

namespace {

const char* kBlockNames[] = {"states", "transition", "qcov", "a_rows", "var_coeffs"};

void sweep_blocks(const ModelSpec& spec, const Dataset& data, const PriorSet& priors,
                  GibbsState& gs, RngHandle& rng, CpfDiagnostics* diag, int& phase,
                  ChainDiagnostics* cd) {
  using clock = std::chrono::steady_clock;
  phase = 0;
  auto start = clock::now();
  gs.states = cpf_as(spec, gs.params, data, gs.states, priors.init_state, rng, diag);
  auto mid = clock::now();
  phase = 1;
  draw_transition_coeffs(spec, gs.states, data, priors.transition, gs.params, rng);
  phase = 2;
  gs.params.Qcov = draw_qcov(transition_residuals(spec, gs.params, gs.states, data), priors.qcov,
                             rng);
  phase = 3;
  if (spec.n_vars > 1) {
    const int t0 = spec.first_usable();
    Eigen::MatrixXd v_path = Eigen::MatrixXd::Zero(data.rows(), spec.n_vars);
    for (int t = t0; t < data.rows(); ++t)
      v_path.row(t) =
          (data.y.row(t).transpose() - observation_mean(spec, gs.params, gs.states, data, t))
              .transpose();
    gs.params.A = draw_a_rows(spec, v_path, gs.states, priors.a_rows, rng);
  }
  phase = 4;
  draw_var_coeffs_kf(spec, gs.states, data, priors.var_coeffs, gs.params, rng);
  if (cd) {
    auto end = clock::now();
    cd->seconds_states += std::chrono::duration<double>(mid - start).count();
    cd->seconds_params += std::chrono::duration<double>(end - mid).count();
  }
}

}  // namespace

void gibbs_sweep(const ModelSpec& spec, const Dataset& data, const PriorSet& priors,
                 GibbsState& gs, RngHandle& rng, CpfDiagnostics* diag) {
  int phase = 0;
  sweep_blocks(spec, data, priors, gs, rng, diag, phase, nullptr);
}

Chain run_gibbs(const ModelSpec& spec, const Dataset& data, const PriorSet& priors,
                const StatePath& init_path, RngHandle& rng) {
  spec.validate();
  data.validate(spec);
  Chain chain;
  chain.spec = spec;
  chain.seed = rng.seed();
  chain.stream = rng.stream();
  GibbsState gs{params_from_prior_means(spec, priors), init_path};
  double sum_update = 0.0, sum_ess = 0.0;
  int sweep = 0, phase = 0;
  try {
    for (sweep = 0; sweep < spec.n_draws; ++sweep) {
      CpfDiagnostics d;
      sweep_blocks(spec, data, priors, gs, rng, &d, phase, &chain.diag);
      sum_update += d.update_rate;
      sum_ess += d.min_ess;
      if (sweep >= spec.n_burn && (sweep - spec.n_burn) % spec.thin == 0) {
        chain.params.push_back(gs.params);
        chain.states.push_back(gs.states);
      }
    }
  } catch (const Error& e) {
    fail("gibbs sweep {} aborted in block '{}': {}", sweep, kBlockNames[phase], e.what());
  }
  if (spec.n_draws > 0) {
    chain.diag.mean_update_rate = sum_update / spec.n_draws;
    chain.diag.mean_min_ess = sum_ess / spec.n_draws;
  }
  return chain;
}

}  // namespace skewvar
