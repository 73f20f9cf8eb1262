#include "skewvar/pgas.hpp"

#include <cmath>
#include <limits>

#include "skewvar/error.hpp"

namespace skewvar {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Max-shift normalization of log weights; returns ESS.
double normalize_logw(const Eigen::VectorXd& logw, Eigen::VectorXd& p, int t) {
  double m = logw.maxCoeff();
  require(std::isfinite(m), "all particle weights zero (numerical underflow) at t = {}", t);
  p = (logw.array() - m).exp();
  p /= p.sum();
  return 1.0 / p.squaredNorm();
}

int sample_categorical(const Eigen::VectorXd& p, double u) {
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u <= acc) return i;
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace

PgasContext::PgasContext(const ModelSpec& spec, const ParameterDraw& params, const Dataset& data,
                         const CpfOptions& opts)
    : spec_(&spec), params_(&params), data_(&data) {
  layout_ = StackedLayout{spec.n_vars, spec.state_dim(), spec.l_inmean_lags};
  t0_ = spec.first_usable();
  const int n = spec.n_vars;
  const int t = data.rows();
  a_inv_ = params.A.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  m0_.resize(t);
  ctrans_.resize(t);
  for (int r = t0_; r < t; ++r) {
    Eigen::VectorXd m = params.c;
    for (int j = 0; j < spec.p_obs_lags; ++j) m += params.B[j] * data.y.row(r - 1 - j).transpose();
    m0_[r] = std::move(m);
    ctrans_[r] = transition_intercept(spec, params, data.y, r);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(params.Qcov);
  require(llt.info() == Eigen::Success, "Qcov is not SPD inside the particle filter");
  chol_q_ = llt.matrixL();
  q_logdet_ = 0.0;
  for (int i = 0; i < chol_q_.rows(); ++i) q_logdet_ += 2.0 * std::log(chol_q_(i, i));
  if (opts.fixed_sigma) {
    Eigen::LLT<Eigen::MatrixXd> ls(*opts.fixed_sigma);
    require(ls.info() == Eigen::Success, "fixed_sigma override is not SPD");
    fixed_sigma_chol_ = ls.matrixL();
    fixed_sigma_logdet_ = 0.0;
    for (int i = 0; i < n; ++i) fixed_sigma_logdet_ += 2.0 * std::log(fixed_sigma_chol_(i, i));
    use_fixed_sigma_ = true;
  }
}

double PgasContext::core_loglik(const Eigen::VectorXd& resid, const Eigen::VectorXd& h) const {
  const int n = layout_.n;
  if (use_fixed_sigma_) {
    Eigen::VectorXd w = fixed_sigma_chol_.triangularView<Eigen::Lower>().solve(resid);
    return -0.5 * (n * kLog2Pi + fixed_sigma_logdet_ + w.squaredNorm());
  }
  // Sigma_t^{-1} = A' H^{-1} A and log|Sigma_t| = sum h_i since |A| = 1.
  Eigen::VectorXd u = params_->A.triangularView<Eigen::Lower>() * resid;
  double quad = 0.0, logdet = 0.0;
  for (int i = 0; i < n; ++i) {
    quad += u(i) * u(i) * std::exp(-h(i));
    logdet += h(i);
  }
  return -0.5 * (n * kLog2Pi + logdet + quad);
}

double PgasContext::obs_loglik(const Eigen::VectorXd& f, int t) const {
  const int n = layout_.n;
  Eigen::VectorXd h0 = layout_.beta(f, 0).head(n);
  for (int i = 0; i < n; ++i)
    if (!(std::abs(h0(i)) <= kLogVarClamp)) return kNegInf;
  Eigen::VectorXd mean = m0_[t];
  for (int l = 1; l <= layout_.l; ++l) {
    auto beta_lag = layout_.beta(f, l);
    mean += params_->b_in[l - 1] * beta_lag.head(n);
    if (spec_->has_skew()) mean += params_->a_in[l - 1] * beta_lag.tail(n);
  }
  Eigen::VectorXd resid = data_->y.row(t).transpose() - mean;
  if (spec_->has_skew()) {
    Eigen::VectorXd skew =
        layout_.beta(f, 0).tail(n).cwiseProduct(layout_.theta(f).cwiseAbs());
    resid -= a_inv_ * skew;
  }
  return core_loglik(resid, h0);
}

double PgasContext::obs_loglik_spliced(const Eigen::VectorXd& cand, int t,
                                       const std::vector<Eigen::VectorXd>& ref, int s) const {
  Eigen::VectorXd f(layout_.dim());
  layout_.theta(f) = layout_.theta(ref[s]);
  layout_.beta(f, 0) = layout_.beta(ref[s], 0);
  for (int l = 1; l <= layout_.l; ++l) {
    const int idx = s - l;
    if (idx >= t)
      layout_.beta(f, l) = layout_.beta(ref[idx], 0);
    else
      layout_.beta(f, l) = layout_.beta(cand, t - 1 - idx);
  }
  return obs_loglik(f, s);
}

double PgasContext::trans_loglik(const Eigen::VectorXd& theta_s, const Eigen::VectorXd& beta_s,
                                 const Eigen::VectorXd& beta_prev, int s) const {
  const int k = layout_.k;
  Eigen::VectorXd eta = beta_s - ctrans_[s] - params_->theta * beta_prev;
  Eigen::VectorXd w = chol_q_.triangularView<Eigen::Lower>().solve(eta);
  double lp = -0.5 * (k * kLog2Pi + q_logdet_ + w.squaredNorm());
  lp += -0.5 * (layout_.n * kLog2Pi + theta_s.squaredNorm());
  return lp;
}

Eigen::VectorXd propagate(const Eigen::VectorXd& particle, const PgasContext& ctx, int t,
                          RngHandle& rng) {
  const auto& lay = ctx.layout();
  Eigen::VectorXd f(lay.dim());
  lay.theta(f) = rng.normal_vec(lay.n);
  lay.beta(f, 0) = ctx.ctrans(t) + ctx.params().theta * lay.beta(particle, 0) +
                   ctx.chol_q().triangularView<Eigen::Lower>() * rng.normal_vec(lay.k);
  for (int l = 1; l <= lay.l; ++l) lay.beta(f, l) = lay.beta(particle, l - 1);
  return f;
}

Eigen::VectorXd ancestor_probabilities(const Eigen::MatrixXd& particles_prev,
                                       const Eigen::VectorXd& logw_prev, const PgasContext& ctx,
                                       const std::vector<Eigen::VectorXd>& ref, int t,
                                       int n_factors) {
  const int m = static_cast<int>(particles_prev.rows());
  const int last = std::min(ctx.rows() - 1, t - 1 + n_factors);
  Eigen::VectorXd logw(m);
  for (int j = 0; j < m; ++j) {
    double lw = logw_prev(j);
    Eigen::VectorXd cand = particles_prev.row(j).transpose();
    for (int s = t; s <= last; ++s) {
      Eigen::VectorXd beta_prev = s == t ? Eigen::VectorXd(ctx.layout().beta(cand, 0))
                                         : Eigen::VectorXd(ctx.layout().beta(ref[s - 1], 0));
      lw += ctx.trans_loglik(ctx.layout().theta(ref[s]), ctx.layout().beta(ref[s], 0), beta_prev,
                             s);
      lw += ctx.obs_loglik_spliced(cand, t, ref, s);
    }
    logw(j) = lw;
  }
  double mx = logw.maxCoeff();
  require(std::isfinite(mx), "ancestor sampling weights underflowed to zero at t = {}", t);
  Eigen::VectorXd p = (logw.array() - mx).exp();
  p /= p.sum();
  return p;
}

int ancestor_sample_reference(const Eigen::MatrixXd& particles_prev,
                              const Eigen::VectorXd& logw_prev, const PgasContext& ctx,
                              const std::vector<Eigen::VectorXd>& ref, int t, int n_factors,
                              RngHandle& rng) {
  Eigen::VectorXd p = ancestor_probabilities(particles_prev, logw_prev, ctx, ref, t, n_factors);
  return sample_categorical(p, rng.uniform01());
}

StatePath cpf_as(const ModelSpec& spec, const ParameterDraw& params, const Dataset& data,
                 const StatePath& ref_path, const InitialStatePrior& init, RngHandle& rng,
                 CpfDiagnostics* diag, const CpfOptions& opts) {
  PgasContext ctx(spec, params, data, opts);
  const auto& lay = ctx.layout();
  const int t0 = ctx.t0();
  const int t_end = data.rows();
  const int m = spec.n_particles;
  const int dim = lay.dim();
  require(ref_path.rows() == t_end, "reference path has {} rows, dataset has {}", ref_path.rows(),
          t_end);
  require(init.mean.size() == dim, "initial state prior has dim {}, stacked state needs {}",
          init.mean.size(), dim);

  // Stacked reference states built from the path rows, so the lag blocks shift
  // consistently by construction.
  std::vector<Eigen::VectorXd> ref(t_end);
  for (int t = t0; t < t_end; ++t) {
    Eigen::VectorXd f(dim);
    lay.theta(f) = ref_path.theta_parent.row(t).transpose();
    for (int l = 0; l <= lay.l; ++l) lay.beta(f, l) = ref_path.beta_at(spec, t - l);
    ref[t] = std::move(f);
  }

  Eigen::LLT<Eigen::MatrixXd> init_llt(init.cov);
  require(init_llt.info() == Eigen::Success, "initial state prior covariance is not SPD");
  Eigen::MatrixXd init_chol = init_llt.matrixL();

  std::vector<Eigen::MatrixXd> hist(t_end);
  std::vector<Eigen::VectorXi> anc(t_end);
  Eigen::MatrixXd cur(m, dim), prev(m, dim);
  Eigen::VectorXd logw(m), p(m);
  double min_ess = static_cast<double>(m);

  // Step 1: draw from the initial state prior and propagate to t0.
  for (int j = 0; j < m - 1; ++j) {
    Eigen::VectorXd f0 = init.mean + init_chol * rng.normal_vec(dim);
    cur.row(j) = propagate(f0, ctx, t0, rng).transpose();
  }
  cur.row(m - 1) = ref[t0].transpose();
  for (int j = 0; j < m; ++j) logw(j) = ctx.obs_loglik(cur.row(j).transpose(), t0);
  min_ess = std::min(min_ess, normalize_logw(logw, p, t0));
  hist[t0] = cur;

  for (int t = t0 + 1; t < t_end; ++t) {
    prev.swap(cur);
    Eigen::VectorXd logw_prev = logw;
    Eigen::VectorXi a(m);
    // (a) systematic resampling for the free particles
    if (m > 1) {
      double u = rng.uniform01();
      double acc = p(0);
      int idx = 0;
      for (int j = 0; j < m - 1; ++j) {
        double pos = (j + u) / (m - 1);
        while (acc < pos && idx < m - 1) acc += p(++idx);
        a(j) = idx;
      }
    }
    // (b) propagate
    for (int j = 0; j < m - 1; ++j)
      cur.row(j) = propagate(prev.row(a(j)).transpose(), ctx, t, rng).transpose();
    // (c) fix the reference particle
    cur.row(m - 1) = ref[t].transpose();
    // (d) ancestor-sample its index
    a(m - 1) =
        ancestor_sample_reference(prev, logw_prev, ctx, ref, t, spec.ancestor_factors, rng);
    // (e) update weights
    for (int j = 0; j < m; ++j) logw(j) = ctx.obs_loglik(cur.row(j).transpose(), t);
    min_ess = std::min(min_ess, normalize_logw(logw, p, t));
    hist[t] = cur;
    anc[t] = a;
  }

  // Step 4: select the trajectory.
  int idx = sample_categorical(p, rng.uniform01());
  std::vector<Eigen::VectorXd> path(t_end);
  for (int t = t_end - 1; t >= t0; --t) {
    path[t] = hist[t].row(idx).transpose();
    if (t > t0) idx = anc[t](idx);
  }

  StatePath out = ref_path;
  int moved = 0;
  for (int t = t0; t < t_end; ++t) {
    const Eigen::VectorXd& f = path[t];
    if ((f - ref[t]).cwiseAbs().maxCoeff() > 0.0) ++moved;
    out.theta_parent.row(t) = lay.theta(f).transpose();
    out.set_beta(spec, t, lay.beta(f, 0));
  }
  // Pre-sample rows implied by the selected F_{t0} lag blocks.
  for (int l = 1; l <= lay.l; ++l) out.set_beta(spec, t0 - l, lay.beta(path[t0], l));
  out.tau = out.theta_parent.cwiseAbs();
  if (!spec.has_skew()) out.d.setZero();

  if (diag) {
    diag->update_rate = t_end > t0 ? static_cast<double>(moved) / (t_end - t0) : 0.0;
    diag->min_ess = min_ess;
  }
  return out;
}

}  // namespace skewvar
