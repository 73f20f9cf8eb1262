#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "skewvar/error.hpp"
#include "skewvar/linalg.hpp"
#include "skewvar/priors.hpp"
#include "skewvar/simulate.hpp"
#include "testutil.hpp"

using namespace skewvar;

TEST_CASE("dummy observations match the hand-evaluated display") {
  // N=1, P=1, EX = intercept only (no-feedback variant).
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  spec.variant = Variant::RestrictedNoFeedback;
  DummyPriorConfig cfg;
  cfg.tau_tight = 0.1;
  cfg.gamma = Eigen::VectorXd::Constant(1, 0.9);
  cfg.s = Eigen::VectorXd::Constant(1, 2.0);
  DummyObs d = build_dummy_observations(cfg, spec);
  REQUIRE(d.y.rows() == 2);
  REQUIRE(d.x.cols() == 2);
  CHECK(d.y(0, 0) == doctest::Approx(18.0).epsilon(1e-14));
  CHECK(d.y(1, 0) == 0.0);
  CHECK(d.x(0, 0) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(d.x(0, 1) == 0.0);
  CHECK(d.x(1, 0) == 0.0);
  CHECK(d.x(1, 1) == doctest::Approx(0.001).epsilon(1e-14));
}

TEST_CASE("dummy observation block dimensions") {
  ModelSpec spec;
  spec.n_vars = 3;
  spec.p_obs_lags = 4;
  spec.l_inmean_lags = 2;
  spec.variant = Variant::Full;
  DummyPriorConfig cfg;
  cfg.gamma = Eigen::VectorXd::Constant(3, 0.8);
  cfg.s = Eigen::VectorXd::Constant(3, 1.5);
  DummyObs d = build_dummy_observations(cfg, spec);
  const int ex = spec.state_dim() * spec.l_inmean_lags + 1;  // 13
  CHECK(d.y.rows() == 3 + 3 * 3 + ex);
  CHECK(d.y.cols() == 3);
  CHECK(d.x.rows() == 3 * 4 + ex);
  CHECK(d.x.cols() == 3 * 4 + ex);
}

TEST_CASE("dummy observations scale homogeneously in s") {
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 2;
  spec.variant = Variant::Full;
  DummyPriorConfig cfg;
  cfg.gamma = Eigen::VectorXd::Constant(2, 0.7);
  cfg.s = Eigen::VectorXd::Constant(2, 1.3);
  DummyObs base = build_dummy_observations(cfg, spec);
  cfg.s *= 3.0;
  DummyObs scaled = build_dummy_observations(cfg, spec);
  const int lag_rows = 4;
  CHECK((scaled.y.topRows(2) - 3.0 * base.y.topRows(2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((scaled.x.topRows(lag_rows) - 3.0 * base.x.topRows(lag_rows)).cwiseAbs().maxCoeff() <
        1e-12);
  // EX tail rows do not scale with s.
  CHECK((scaled.x.bottomRows(scaled.x.rows() - lag_rows) -
         base.x.bottomRows(base.x.rows() - lag_rows))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("zero residual scale is rejected") {
  ModelSpec spec;
  spec.n_vars = 1;
  spec.p_obs_lags = 1;
  DummyPriorConfig cfg;
  cfg.gamma = Eigen::VectorXd::Constant(1, 0.9);
  cfg.s = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS((void)build_dummy_observations(cfg, spec), Error);
}

TEST_CASE("prior_from_dummies equals a least-squares oracle") {
  RngHandle rng(200);
  // Random full-rank dummy system.
  Eigen::MatrixXd x(8, 4), y(8, 2);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < 2; ++j) y(i, j) = rng.normal();
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2) * 1.7;
  GaussianPrior p = prior_from_dummies(y, x, s);
  Eigen::MatrixXd coef_oracle = least_squares(x, y);
  Eigen::VectorXd mean_oracle =
      Eigen::Map<const Eigen::VectorXd>(coef_oracle.data(), coef_oracle.size());
  CHECK((p.mean - mean_oracle).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  CHECK((p.cov - kron(s, xtx_inv)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity dummies give zero mean and S kron I covariance") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(3, 2);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2) * 2.5;
  GaussianPrior p = prior_from_dummies(y, x, s);
  CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.cov - kron(s, Eigen::MatrixXd::Identity(3, 3))).cwiseAbs().maxCoeff() < 1e-12);
  // Symmetric SPD
  CHECK((p.cov - p.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(p.cov);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("singular dummy system raises the tightness hint") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(3, 1);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(1, 1);
  try {
    (void)prior_from_dummies(y, x, s);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("tightness") != std::string::npos);
  }
}

TEST_CASE("theta cross-block mask has 8 entries for K=4") {
  ModelSpec spec;
  spec.n_vars = 2;
  spec.variant = Variant::Full;
  CHECK(theta_cross_block_mask(spec).size() == 8);
  spec.variant = Variant::SvOnly;
  CHECK(theta_cross_block_mask(spec).empty());
}

TEST_CASE("empty mask leaves the transition prior unmasked") {
  ModelSpec spec;
  spec.n_vars = 1;
  spec.q_state_lags = 1;
  spec.variant = Variant::SvOnly;  // K = 1, no cross blocks
  DummyPriorConfig cfg;
  cfg.gamma = Eigen::VectorXd::Constant(1, 0.9);
  cfg.s = Eigen::VectorXd::Constant(1, 0.2);
  GaussianPrior masked = transition_prior(spec, cfg, {});
  DummyObs d = transition_dummy_observations(cfg, spec);
  GaussianPrior plain =
      prior_from_dummies(d.y, d.x, cfg.s.array().square().matrix().asDiagonal());
  CHECK((masked.mean - plain.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((masked.cov - plain.cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("masked transition prior pins cross-block entries near zero") {
  ModelSpec spec;
  spec.n_vars = 2;
  spec.q_state_lags = 1;
  spec.variant = Variant::Full;
  DummyPriorConfig cfg;
  cfg.gamma = Eigen::VectorXd::Constant(4, 0.9);
  cfg.s = Eigen::VectorXd::Constant(4, 0.3);
  auto mask = theta_cross_block_mask(spec);
  GaussianPrior p = transition_prior(spec, cfg, mask);
  for (int idx : mask) {
    CHECK(p.mean(idx) == 0.0);
    CHECK(p.cov(idx, idx) == doctest::Approx(1e-9));
  }
}

TEST_CASE("ar1 hyperparameters recover a known AR(1)") {
  RngHandle rng(201);
  const int t = 4000;
  Eigen::MatrixXd y(t, 1);
  y(0, 0) = 0.0;
  for (int i = 1; i < t; ++i) y(i, 0) = 0.6 * y(i - 1, 0) + 0.5 * rng.normal();
  Eigen::VectorXd gamma, s;
  ar1_hyperparameters(y, gamma, s);
  CHECK(gamma(0) == doctest::Approx(0.6).epsilon(0.08));
  CHECK(s(0) == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("a_row_priors recovers the triangular factor from residuals") {
  RngHandle rng(202);
  const int t = 200000;
  // v = A^{-1} e with known unit-lower-triangular A and unit noise.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  a(1, 0) = 0.5;
  a(2, 0) = -0.3;
  a(2, 1) = 0.8;
  Eigen::MatrixXd v(t, 3);
  for (int i = 0; i < t; ++i) {
    Eigen::VectorXd e = rng.normal_vec(3);
    v.row(i) = a.triangularView<Eigen::Lower>().solve(e).transpose();
  }
  auto priors = a_row_priors(v);
  REQUIRE(priors.size() == 2);
  CHECK(priors[0].mean(0) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(priors[1].mean(0) == doctest::Approx(-0.3).epsilon(0.05));
  CHECK(priors[1].mean(1) == doctest::Approx(0.8).epsilon(0.05));
  CHECK((priors[1].cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initialize_states on calm data returns a tame seed") {
  RngHandle rng(203);
  ModelSpec spec;
  spec.n_vars = 2;
  spec.p_obs_lags = 1;
  spec.q_state_lags = 0;
  spec.l_inmean_lags = 1;
  spec.variant = Variant::Full;
  spec.n_particles = 10;

  // Constant-variance zero-skew Gaussian VAR data.
  ModelSpec dgp = spec;
  dgp.variant = Variant::RestrictedNoFeedback;
  ParameterDraw truth = ParameterDraw::zero(dgp);
  truth.B[0] << 0.5, 0.0, 0.1, 0.4;
  truth.theta = 0.5 * Eigen::MatrixXd::Identity(4, 4);
  truth.Qcov = 1e-8 * Eigen::MatrixXd::Identity(4, 4);
  SimResult sim = simulate_dgp(dgp, truth, 120, rng);

  DummyPriorConfig cfg;
  ar1_hyperparameters(sim.data.y, cfg.gamma, cfg.s);
  PreModelConfig pre;
  pre.n_draws = 60;
  pre.n_burn = 30;
  StateInit init = initialize_states(sim.data, spec, cfg, pre, rng);

  CHECK(init.seed.h.rows() == 120);
  CHECK(init.seed.h.cols() == 2);
  CHECK(init.prior.mean.size() == 2 + 4 * 2);  // N + K(L+1)
  // P0|0 = I always.
  CHECK((init.prior.cov -
         Eigen::MatrixXd::Identity(init.prior.mean.size(), init.prior.mean.size()))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd col = init.seed.h.col(i).tail(110);
    double var = (col.array() - col.mean()).square().mean();
    CHECK(var < 0.5);
  }
}
