#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "skewvar/dates.hpp"

namespace skewvar {

// SvOnlyNoFeedback is the pre-model analogue of RestrictedNoFeedback for an
// SvOnly main model.
enum class Variant { Full, RestrictedNoFeedback, SvOnly, SvOnlyNoFeedback };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

// h entries are clamped to this band before exponentiation; samplers reject
// paths that leave it.
constexpr double kLogVarClamp = 30.0;

// Dimensions, variant flags and sampler settings shared by every module.
struct ModelSpec {
  int n_vars = 1;        // N
  int p_obs_lags = 2;    // P, VAR lag order in the observation equation
  int q_state_lags = 2;  // lags of Y entering the transition equation
  int l_inmean_lags = 1;  // L, in-mean lags of the states
  Variant variant = Variant::Full;
  int n_particles = 20;
  int ancestor_factors = 5;
  int n_draws = 20000;
  int n_burn = 10000;
  int thin = 1;

  bool has_skew() const {
    return variant == Variant::Full || variant == Variant::RestrictedNoFeedback;
  }
  // RestrictedNoFeedback and SvOnlyNoFeedback force d_j = b_l = a_l = 0.
  bool has_feedback() const { return variant == Variant::Full || variant == Variant::SvOnly; }
  int state_dim() const { return has_skew() ? 2 * n_vars : n_vars; }
  int effective_q() const { return has_feedback() ? q_state_lags : 0; }

  // First data row with all observation, transition and in-mean lags available.
  int first_usable() const;
  // Observation-equation regressor count: N*P lags [+ K*L state lags] + 1.
  int n_obs_regressors() const;
  // Transition-equation regressor count: K [+ N*q] + 1.
  int n_trans_regressors() const;

  void validate() const;
};

// One joint draw of all static parameters.
struct ParameterDraw {
  Eigen::VectorXd c;                   // N intercepts
  std::vector<Eigen::MatrixXd> B;      // P matrices, N x N
  std::vector<Eigen::MatrixXd> b_in;   // L matrices, N x N, loadings on lagged h
  std::vector<Eigen::MatrixXd> a_in;   // L matrices, N x N, loadings on lagged d
  Eigen::MatrixXd A;                   // N x N, unit lower triangular
  Eigen::VectorXd alpha;               // K
  Eigen::MatrixXd theta;               // K x K, block diagonal
  std::vector<Eigen::MatrixXd> d_y;    // q matrices, K x N, on lagged Y
  Eigen::MatrixXd Qcov;                // K x K SPD

  static ParameterDraw zero(const ModelSpec& spec);
  void validate(const ModelSpec& spec) const;
};

// Latent paths, time-indexed in lockstep with the dataset rows.
struct StatePath {
  Eigen::MatrixXd h;             // T x N log variances
  Eigen::MatrixXd d;             // T x N skew loadings
  Eigen::MatrixXd theta_parent;  // T x N standard-normal parents
  Eigen::MatrixXd tau;           // T x N, |theta_parent|

  static StatePath zero(int T, int n_vars);
  int rows() const { return static_cast<int>(h.rows()); }
  // Stacked transition state beta_t = (h_t) or (h_t; d_t).
  Eigen::VectorXd beta_at(const ModelSpec& spec, int t) const;
  void set_beta(const ModelSpec& spec, int t, const Eigen::VectorXd& beta);
  void validate(const ModelSpec& spec) const;
};

struct Dataset {
  Eigen::MatrixXd y;  // T x N
  std::vector<std::string> labels;
  std::vector<Quarter> dates;

  int rows() const { return static_cast<int>(y.rows()); }
  int cols() const { return static_cast<int>(y.cols()); }
  int row_of(Quarter q) const;  // -1 when absent
  Dataset through_row(int last_row) const;
  void validate(const ModelSpec& spec) const;
};

// Conditional mean of Y_t: c + sum_j B_j Y_{t-j} + sum_l b_l h_{t-l} + a_l d_{t-l}.
// Overload on raw matrices so forecast simulation can reuse it on buffers.
Eigen::VectorXd observation_mean(const ModelSpec& spec, const ParameterDraw& params,
                                 const Eigen::MatrixXd& y, const Eigen::MatrixXd& h,
                                 const Eigen::MatrixXd& d, int t);
Eigen::VectorXd observation_mean(const ModelSpec& spec, const ParameterDraw& params,
                                 const StatePath& states, const Dataset& data, int t);

// V_t = Y_t - mean, E_t = A V_t. Returned as (E_t, V_t).
std::pair<Eigen::VectorXd, Eigen::VectorXd> observation_residual(const ModelSpec& spec,
                                                                 const ParameterDraw& params,
                                                                 const StatePath& states,
                                                                 const Dataset& data, int t);

// Log density of Y_t given states and lags, N(mean + A^{-1}(d.*tau), Sigma_t)
// with Sigma_t = A^{-1} H_t A^{-1}'. Full normalized log density.
double conditional_loglik(const ModelSpec& spec, const ParameterDraw& params,
                          const StatePath& states, const Dataset& data, int t);

// Transition-equation intercept at t: alpha + sum_j d_j Y_{t-j}.
Eigen::VectorXd transition_intercept(const ModelSpec& spec, const ParameterDraw& params,
                                     const Eigen::MatrixXd& y, int t);

}  // namespace skewvar
