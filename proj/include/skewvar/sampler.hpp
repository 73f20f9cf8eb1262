#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "skewvar/model.hpp"
#include "skewvar/pgas.hpp"
#include "skewvar/priors.hpp"
#include "skewvar/rng.hpp"

namespace skewvar {

struct ChainDiagnostics {
  double mean_update_rate = 0.0;  // CPF-AS reference-path update rate
  double mean_min_ess = 0.0;
  long state_rejections = 0;  // clamp-violating state draws
  double seconds_states = 0.0;
  double seconds_params = 0.0;
};

struct Chain {
  ModelSpec spec;
  std::vector<ParameterDraw> params;
  std::vector<StatePath> states;
  ChainDiagnostics diag;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  int size() const { return static_cast<int>(params.size()); }
};

struct MomentPair {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Transition-equation conditional posterior N(M, V) with
// M = (p0^-1 + Q^-1 (x) x'x)^-1 (p0^-1 G0 + Q^-1 (x) x'x bhat).
MomentPair transition_posterior_moments(const ModelSpec& spec, const StatePath& states,
                                        const Dataset& data, const GaussianPrior& prior,
                                        const Eigen::MatrixXd& qcov);
// Draws (alpha, theta, d_j) into params; cross-block theta entries are zeroed.
void draw_transition_coeffs(const ModelSpec& spec, const StatePath& states, const Dataset& data,
                            const GaussianPrior& prior, ParameterDraw& params, RngHandle& rng);

// Transition residuals eta_t for t = t0..T-1 (rows of the returned matrix).
Eigen::MatrixXd transition_residuals(const ModelSpec& spec, const ParameterDraw& params,
                                     const StatePath& states, const Dataset& data);

Eigen::MatrixXd draw_qcov(const Eigen::MatrixXd& eta, const IWPrior& prior, RngHandle& rng);

// Conditional posterior for the free elements of row k of A (k >= 1) after
// removing the skew term and rescaling by exp(h/2).
MomentPair a_row_posterior_moments(int k, const Eigen::MatrixXd& v_path, const StatePath& states,
                                   const GaussianPrior& prior, int t0);
Eigen::MatrixXd draw_a_rows(const ModelSpec& spec, const Eigen::MatrixXd& v_path,
                            const StatePath& states, const std::vector<GaussianPrior>& priors,
                            RngHandle& rng);

// Constant-state Kalman filter over t with observation covariance
// Sigma_t = A^-1 H_t A^-1'; terminal moments equal the heteroskedastic GLS
// posterior of the stacked VAR coefficient vector.
MomentPair var_coeffs_posterior_moments(const ModelSpec& spec, const StatePath& states,
                                        const Dataset& data, const ParameterDraw& params,
                                        const GaussianPrior& prior);
void draw_var_coeffs_kf(const ModelSpec& spec, const StatePath& states, const Dataset& data,
                        const GaussianPrior& prior, ParameterDraw& params, RngHandle& rng);

// Observation-equation regressor vector [Y lags, state lags, 1] at t.
Eigen::VectorXd obs_regressors(const ModelSpec& spec, const Eigen::MatrixXd& y,
                               const Eigen::MatrixXd& h, const Eigen::MatrixXd& d, int t);
// Unpacks a stacked coefficient vector into (c, B_j, b_l, a_l).
void unpack_obs_coeffs(const ModelSpec& spec, const Eigen::VectorXd& stacked,
                       ParameterDraw& params);
// Unpacks a stacked transition coefficient vector into (alpha, theta, d_j).
void unpack_trans_coeffs(const ModelSpec& spec, const Eigen::VectorXd& stacked,
                         ParameterDraw& params);

struct GibbsState {
  ParameterDraw params;
  StatePath states;
};

// One full sweep: states (CPF-AS), transition coefficients, Qcov, A rows,
// observation VAR coefficients.
void gibbs_sweep(const ModelSpec& spec, const Dataset& data, const PriorSet& priors,
                 GibbsState& gs, RngHandle& rng, CpfDiagnostics* diag = nullptr);

// Initial parameter values implied by the prior means.
ParameterDraw params_from_prior_means(const ModelSpec& spec, const PriorSet& priors);

Chain run_gibbs(const ModelSpec& spec, const Dataset& data, const PriorSet& priors,
                const StatePath& init_path, RngHandle& rng);

}  // namespace skewvar
