#pragma once

#include <Eigen/Dense>

#include <vector>

#include "skewvar/model.hpp"
#include "skewvar/rng.hpp"

namespace skewvar {

struct DummyPriorConfig {
  double tau_tight = 0.1;  // overall tightness on the VAR lag coefficients
  double c_vol = 0.1;      // tightness on lagged-state regressors
  double c_flat = 1000.0;  // intercept tightness
  Eigen::VectorXd gamma;   // AR(1) prior means, one per equation
  Eigen::VectorXd s;       // residual scale estimates, one per equation
};

struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct IWPrior {
  Eigen::MatrixXd scale;
  int dof = 0;
};

struct InitialStatePrior {
  Eigen::VectorXd mean;  // stacked CPF state (Theta, beta_0, ..., beta_{-L})
  Eigen::MatrixXd cov;
};

struct DummyObs {
  Eigen::MatrixXd y;
  Eigen::MatrixXd x;
};

// Observation-equation dummy observations: first N rows diag(gamma_i s_i)/tau,
// N(P-1) zero rows, EX tail rows; x side carries J_P (x) diag(s)/tau and the
// I_EX/c tail with per-regressor tightness (c_vol on lagged states, c_flat on
// the intercept).
DummyObs build_dummy_observations(const DummyPriorConfig& cfg, const ModelSpec& spec);

// Same block construction for the transition equation: K equations, one lag of
// beta, EX = N*q lagged-Y columns plus the intercept. cfg.gamma/cfg.s must be
// K-dimensional here.
DummyObs transition_dummy_observations(const DummyPriorConfig& cfg, const ModelSpec& spec);

GaussianPrior prior_from_dummies(const Eigen::MatrixXd& y_d, const Eigen::MatrixXd& x_d,
                                 const Eigen::MatrixXd& s_scale);

// vec-layout indices of the cross-block theta coefficients.
std::vector<int> theta_cross_block_mask(const ModelSpec& spec);

GaussianPrior transition_prior(const ModelSpec& spec, const DummyPriorConfig& cfg,
                               const std::vector<int>& tightening_mask);

// Per-variable AR(1) least squares over rows of y: slope and residual sd.
void ar1_hyperparameters(const Eigen::MatrixXd& y, Eigen::VectorXd& gamma, Eigen::VectorXd& s);
Eigen::MatrixXd training_scale(const Eigen::MatrixXd& y);

// Row-wise priors for the free elements of A: means from the inverse Cholesky
// of var(v) with rows normalized by the diagonal, unit prior variances.
// Entry k-1 covers row k (k = 1..N-1, zero-based).
std::vector<GaussianPrior> a_row_priors(const Eigen::MatrixXd& v);

struct PriorSet {
  GaussianPrior var_coeffs;
  GaussianPrior transition;
  std::vector<GaussianPrior> a_rows;
  IWPrior qcov;
  InitialStatePrior init_state;
};

struct PreModelConfig {
  int n_draws = 200;
  int n_burn = 100;
};

struct StateInit {
  InitialStatePrior prior;
  StatePath seed;
  Eigen::VectorXd q_diag;       // pre-model posterior mean of diag(Q)
  Eigen::VectorXd trans_gamma;  // AR(1) hyper for the main transition prior
  Eigen::VectorXd trans_s;
  Eigen::MatrixXd state_means;  // T x K posterior-mean state path
};

// Estimates the simpler no-feedback pre-model with a short particle-Gibbs
// chain and extracts initial-state moments for the main chain. cfg must carry
// gamma/s estimated on the training sample.
StateInit initialize_states(const Dataset& data, const ModelSpec& spec,
                            const DummyPriorConfig& obs_cfg, const PreModelConfig& pre_cfg,
                            RngHandle& rng);

struct AssembledPriors {
  PriorSet priors;
  StatePath init_path;
};

// Full prior assembly: AR(1) hyperparameters and scale matrix from the first
// training_rows rows, pre-model initialization, A prior from OLS residuals,
// inverse-Wishart prior for Q.
AssembledPriors assemble_priors(const Dataset& data, const ModelSpec& spec,
                                DummyPriorConfig obs_cfg, const PreModelConfig& pre_cfg,
                                int training_rows, RngHandle& rng);

}  // namespace skewvar
