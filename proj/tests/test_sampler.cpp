#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "skewvar/error.hpp"
#include "skewvar/linalg.hpp"
#include "skewvar/sampler.hpp"
#include "skewvar/simulate.hpp"
#include "testutil.hpp"

using namespace skewvar;

namespace {

Dataset make_data(const Eigen::MatrixXd& y) {
  Dataset d;
  d.y = y;
  for (int i = 0; i < y.cols(); ++i) d.labels.push_back("v" + std::to_string(i));
  for (int i = 0; i < y.rows(); ++i) d.dates.push_back(Quarter{1950, 1}.plus(i));
  return d;
}

StatePath random_states(int t, int n, RngHandle& rng, double scale = 0.3) {
  StatePath s = StatePath::zero(t, n);
  s.h = scale * Eigen::MatrixXd::NullaryExpr(t, n, [&] { return rng.normal(); });
  s.d = scale * Eigen::MatrixXd::NullaryExpr(t, n, [&] { return rng.normal(); });
  s.theta_parent = Eigen::MatrixXd::NullaryExpr(t, n, [&] { return rng.normal(); });
  s.tau = s.theta_parent.cwiseAbs();
  return s;
}

}  // namespace

TEST_CASE("transition draw honors a dogmatic prior at zero") {
  RngHandle rng(400);
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 1;
  spec.variant = Variant::SvOnly;
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(30, 1, [&] { return rng.normal(); }));
  StatePath states = random_states(30, 1, rng);
  GaussianPrior prior;
  const int m = spec.n_trans_regressors();
  prior.mean = Eigen::VectorXd::Zero(m);
  prior.cov = 1e-14 * Eigen::MatrixXd::Identity(m, m);
  ParameterDraw params = ParameterDraw::zero(spec);
  draw_transition_coeffs(spec, states, data, prior, params, rng);
  CHECK(std::abs(params.theta(0, 0)) < 1e-5);
  CHECK(std::abs(params.alpha(0)) < 1e-5);
}

TEST_CASE("transition posterior under a flat prior equals OLS") {
  RngHandle rng(401);
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 1;
  spec.variant = Variant::SvOnly;  // K = 1
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(60, 1, [&] { return rng.normal(); }));
  StatePath states = random_states(60, 1, rng);
  const int m = spec.n_trans_regressors();
  GaussianPrior prior;
  prior.mean = Eigen::VectorXd::Zero(m);
  prior.cov = 1e8 * Eigen::MatrixXd::Identity(m, m);
  MomentPair mom = transition_posterior_moments(spec, states, data, prior,
                                                0.3 * Eigen::MatrixXd::Identity(1, 1));
  // OLS oracle on beta_t vs [beta_{t-1}, y_{t-1}, 1].
  const int t0 = spec.first_usable();
  const int rows = 60 - t0;
  Eigen::MatrixXd x(rows, 3);
  Eigen::VectorXd y(rows);
  for (int t = t0; t < 60; ++t) {
    x(t - t0, 0) = states.h(t - 1, 0);
    x(t - t0, 1) = data.y(t - 1, 0);
    x(t - t0, 2) = 1.0;
    y(t - t0) = states.h(t, 0);
  }
  Eigen::VectorXd ols = least_squares(x, y);
  CHECK((mom.mean - ols).cwiseAbs().maxCoeff() < 1e-6);
  // Posterior covariance symmetric SPD.
  CHECK((mom.cov - mom.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::LLT<Eigen::MatrixXd> llt(mom.cov);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("qcov draw concentrates near the prior scale when residuals vanish") {
  RngHandle rng(402);
  const int t = 5000;
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(t, 1);
  IWPrior prior;
  prior.scale = Eigen::MatrixXd::Identity(1, 1);
  prior.dof = 2;
  const int n_mc = 2000;
  double acc = 0.0;
  for (int i = 0; i < n_mc; ++i) acc += draw_qcov(eta, prior, rng)(0, 0);
  acc /= n_mc;
  CHECK(acc == doctest::Approx(1.0 / (t + prior.dof - 2)).epsilon(0.05));
}

TEST_CASE("qcov K=1 MC mean matches the analytic inverse-Wishart mean") {
  RngHandle rng(403);
  // eta'eta = 10, v0 = 1, T = 100, T0 = 2 -> mean 11/(102-2) = 0.11.
  Eigen::MatrixXd eta = Eigen::MatrixXd::Constant(100, 1, std::sqrt(0.1));
  IWPrior prior;
  prior.scale = Eigen::MatrixXd::Identity(1, 1);
  prior.dof = 2;
  const int n_mc = 100000;
  double acc = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    Eigen::MatrixXd q = draw_qcov(eta, prior, rng);
    acc += q(0, 0);
  }
  acc /= n_mc;
  CHECK(acc == doctest::Approx(0.11).epsilon(0.02));
}

TEST_CASE("qcov draws are SPD") {
  RngHandle rng(404);
  Eigen::MatrixXd eta = Eigen::MatrixXd::NullaryExpr(40, 3, [&] { return rng.normal(); });
  IWPrior prior;
  prior.scale = 0.5 * Eigen::MatrixXd::Identity(3, 3);
  prior.dof = 4;
  for (int i = 0; i < 100; ++i) {
    Eigen::LLT<Eigen::MatrixXd> llt(draw_qcov(eta, prior, rng));
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("A draw under flat prior and homoskedastic states equals OLS") {
  RngHandle rng(405);
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 1;
  spec.variant = Variant::Full;
  const int t = 400;
  StatePath states = StatePath::zero(t, 2);  // h = 0, d = 0 (homoskedastic, no skew)
  Eigen::MatrixXd v(t, 2);
  for (int i = 0; i < t; ++i) {
    v(i, 0) = rng.normal();
    v(i, 1) = -0.6 * v(i, 0) + rng.normal();
  }
  std::vector<GaussianPrior> priors(1);
  priors[0].mean = Eigen::VectorXd::Zero(1);
  priors[0].cov = 1e10 * Eigen::MatrixXd::Identity(1, 1);
  MomentPair mom = a_row_posterior_moments(1, v, states, priors[0], spec.first_usable());
  // OLS of v2 on -v1.
  const int t0 = spec.first_usable();
  Eigen::MatrixXd x = -v.col(0).tail(t - t0);
  Eigen::VectorXd y = v.col(1).tail(t - t0);
  Eigen::VectorXd ols = least_squares(x, y);
  CHECK(mom.mean(0) == doctest::Approx(ols(0)).epsilon(1e-8));
}

TEST_CASE("A draw honors a dogmatic prior") {
  RngHandle rng(406);
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 1;
  const int t = 50;
  StatePath states = random_states(t, 2, rng);
  Eigen::MatrixXd v = Eigen::MatrixXd::NullaryExpr(t, 2, [&] { return rng.normal(); });
  std::vector<GaussianPrior> priors(1);
  priors[0].mean = Eigen::VectorXd::Constant(1, 0.77);
  priors[0].cov = 1e-14 * Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd a = draw_a_rows(spec, v, states, priors, rng);
  CHECK(a(1, 0) == doctest::Approx(0.77).epsilon(1e-4));
  CHECK(a(0, 0) == 1.0);
  CHECK(a(1, 1) == 1.0);
  CHECK(a(0, 1) == 0.0);
}

TEST_CASE("KF coefficient moments match the conjugate Bayesian regression") {
  RngHandle rng(407);
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.variant = Variant::RestrictedNoFeedback;  // regressors: [y_{t-1}, 1]
  const int t = 50;
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(t, 1, [&] { return rng.normal(); }));
  StatePath states = StatePath::zero(t, 1);  // h = 0 -> Sigma_t = 1
  ParameterDraw params = ParameterDraw::zero(spec);
  GaussianPrior prior;
  prior.mean = Eigen::VectorXd::Constant(2, 0.2);
  prior.cov = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  MomentPair mom = var_coeffs_posterior_moments(spec, states, data, params, prior);
  // Conjugate oracle: (P0^-1 + X'X)^-1 (P0^-1 mu + X'y).
  const int t0 = spec.first_usable();
  Eigen::MatrixXd x(t - t0, 2);
  Eigen::VectorXd y(t - t0);
  for (int r = t0; r < t; ++r) {
    x(r - t0, 0) = data.y(r - 1, 0);
    x(r - t0, 1) = 1.0;
    y(r - t0) = data.y(r, 0);
  }
  Eigen::MatrixXd p0inv = prior.cov.inverse();
  Eigen::MatrixXd post_prec = p0inv + x.transpose() * x;
  Eigen::VectorXd post_mean = post_prec.inverse() * (p0inv * prior.mean + x.transpose() * y);
  CHECK((mom.mean - post_mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((mom.cov - post_prec.inverse()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("KF coefficient draw honors a dogmatic prior") {
  RngHandle rng(408);
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.variant = Variant::RestrictedNoFeedback;
  const int t = 30;
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(t, 1, [&] { return rng.normal(); }));
  StatePath states = StatePath::zero(t, 1);
  ParameterDraw params = ParameterDraw::zero(spec);
  GaussianPrior prior;
  prior.mean = Eigen::VectorXd::Constant(2, -0.4);
  prior.cov = 1e-16 * Eigen::MatrixXd::Identity(2, 2);
  draw_var_coeffs_kf(spec, states, data, prior, params, rng);
  CHECK(params.B[0](0, 0) == doctest::Approx(-0.4).epsilon(1e-5));
  CHECK(params.c(0) == doctest::Approx(-0.4).epsilon(1e-5));
}

TEST_CASE("KF terminal moments match brute-force heteroskedastic GLS (N=2, T=40)") {
  RngHandle rng(409);
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 1;
  spec.l_inmean_lags = 1;
  spec.variant = Variant::Full;
  const int t = 40;
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(t, 2, [&] { return rng.normal(); }));
  StatePath states = random_states(t, 2, rng, 0.4);
  ParameterDraw params = ParameterDraw::zero(spec);
  params.A(1, 0) = 0.5;
  const int m = spec.n_obs_regressors();
  const int dim = 2 * m;
  GaussianPrior prior;
  prior.mean = Eigen::VectorXd::NullaryExpr(dim, [&] { return 0.1 * rng.normal(); });
  prior.cov = testutil::random_spd(dim, rng, 1.0);
  MomentPair mom = var_coeffs_posterior_moments(spec, states, data, params, prior);

  // Brute-force GLS oracle.
  Eigen::MatrixXd a_inv = params.A.inverse();
  Eigen::MatrixXd prec = prior.cov.inverse();
  Eigen::VectorXd rhs = prior.cov.inverse() * prior.mean;
  const int t0 = spec.first_usable();
  for (int r = t0; r < t; ++r) {
    Eigen::VectorXd xr = obs_regressors(spec, data.y, states.h, states.d, r);
    Eigen::MatrixXd big_x = Eigen::MatrixXd::Zero(2, dim);
    big_x.block(0, 0, 1, m) = xr.transpose();
    big_x.block(1, m, 1, m) = xr.transpose();
    Eigen::MatrixXd sigma =
        a_inv * states.h.row(r).transpose().array().exp().matrix().asDiagonal() *
        a_inv.transpose();
    Eigen::VectorXd ystar =
        data.y.row(r).transpose() -
        a_inv * states.d.row(r).transpose().cwiseProduct(states.tau.row(r).transpose());
    Eigen::MatrixXd sinv = sigma.inverse();
    prec += big_x.transpose() * sinv * big_x;
    rhs += big_x.transpose() * sinv * ystar;
  }
  Eigen::VectorXd gls_mean = prec.inverse() * rhs;
  CHECK((mom.mean - gls_mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((mom.cov - prec.inverse()).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("run_gibbs with n_draws equal to n_burn stores nothing") {
  RngHandle rng(410);
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 0;
  spec.variant = Variant::SvOnly;
  spec.n_particles = 5;
  spec.n_draws = 10;
  spec.n_burn = 10;
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(20, 1, [&] { return rng.normal(); }));
  PriorSet priors;
  priors.var_coeffs.mean = Eigen::VectorXd::Zero(3);
  priors.var_coeffs.cov = Eigen::MatrixXd::Identity(3, 3);
  priors.transition.mean = Eigen::VectorXd::Zero(2);
  priors.transition.cov = Eigen::MatrixXd::Identity(2, 2);
  priors.qcov.scale = 0.1 * Eigen::MatrixXd::Identity(1, 1);
  priors.qcov.dof = 2;
  priors.init_state.mean = Eigen::VectorXd::Zero(3);
  priors.init_state.cov = Eigen::MatrixXd::Identity(3, 3);
  Chain chain = run_gibbs(spec, data, priors, StatePath::zero(20, 1), rng);
  CHECK(chain.size() == 0);
}

TEST_CASE("restricted variant stores exact zeros for d_j, b_l, a_l") {
  RngHandle rng(411);
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 1;
  spec.variant = Variant::RestrictedNoFeedback;
  spec.n_particles = 5;
  spec.n_draws = 8;
  spec.n_burn = 4;
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(25, 2, [&] { return rng.normal(); }));
  DummyPriorConfig cfg;
  ar1_hyperparameters(data.y, cfg.gamma, cfg.s);
  PreModelConfig pre;
  pre.n_draws = 6;
  pre.n_burn = 3;
  AssembledPriors ap = assemble_priors(data, spec, cfg, pre, 25, rng);
  Chain chain = run_gibbs(spec, data, ap.priors, ap.init_path, rng);
  REQUIRE(chain.size() == 4);
  for (const auto& p : chain.params) {
    CHECK(p.d_y.empty());
    for (const auto& b : p.b_in) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& a : p.a_in) CHECK(a.cwiseAbs().maxCoeff() == 0.0);
    p.validate(spec);
  }
}

TEST_CASE("chains are bitwise reproducible under a fixed seed") {
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 1;
  spec.variant = Variant::Full;
  spec.n_particles = 6;
  spec.n_draws = 6;
  spec.n_burn = 3;
  RngHandle data_rng(412);
  Dataset data = make_data(Eigen::MatrixXd::NullaryExpr(25, 2, [&] { return data_rng.normal(); }));
  DummyPriorConfig cfg;
  ar1_hyperparameters(data.y, cfg.gamma, cfg.s);
  PreModelConfig pre;
  pre.n_draws = 4;
  pre.n_burn = 2;

  auto run_once = [&]() {
    RngHandle rng(999, 1);
    AssembledPriors ap = assemble_priors(data, spec, cfg, pre, 25, rng);
    return run_gibbs(spec, data, ap.priors, ap.init_path, rng);
  };
  Chain c1 = run_once();
  Chain c2 = run_once();
  REQUIRE(c1.size() == c2.size());
  for (int i = 0; i < c1.size(); ++i) {
    CHECK((c1.params[i].Qcov - c2.params[i].Qcov).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c1.params[i].A - c2.params[i].A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c1.states[i].h - c2.states[i].h).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("SvOnly chain tracks the true volatility path on simulated data") {
  RngHandle rng(413);
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 0;
  spec.l_inmean_lags = 1;
  spec.variant = Variant::SvOnly;
  spec.n_particles = 20;
  spec.n_draws = 220;
  spec.n_burn = 120;

  ParameterDraw truth = ParameterDraw::zero(spec);
  truth.B[0](0, 0) = 0.5;
  truth.theta(0, 0) = 0.97;
  truth.alpha(0) = 0.0;
  truth.Qcov(0, 0) = 0.08;
  SimResult sim = simulate_dgp(spec, truth, 500, rng);

  DummyPriorConfig cfg;
  PreModelConfig pre;
  pre.n_draws = 40;
  pre.n_burn = 20;
  AssembledPriors ap = assemble_priors(sim.data, spec, cfg, pre, 500, rng);
  Chain chain = run_gibbs(spec, sim.data, ap.priors, ap.init_path, rng);

  Eigen::VectorXd h_mean = Eigen::VectorXd::Zero(500);
  for (const auto& s : chain.states) h_mean += s.h.col(0);
  h_mean /= chain.size();
  const int t0 = spec.first_usable();
  Eigen::VectorXd est = h_mean.tail(500 - t0);
  Eigen::VectorXd truth_h = sim.states.h.col(0).tail(500 - t0);
  double c = (est.array() - est.mean()).matrix().dot((truth_h.array() - truth_h.mean()).matrix());
  double corr = c / (std::sqrt((est.array() - est.mean()).square().sum()) *
                     std::sqrt((truth_h.array() - truth_h.mean()).square().sum()));
  CHECK(corr > 0.7);
}
