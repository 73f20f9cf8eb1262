#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "skewvar/model.hpp"
#include "skewvar/priors.hpp"
#include "skewvar/rng.hpp"

namespace skewvar {

// Layout of the stacked CPF-AS state F_t = (Theta_t, beta_t, ..., beta_{t-L}).
struct StackedLayout {
  int n = 0;  // N
  int k = 0;  // K
  int l = 0;  // L

  int dim() const { return n + k * (l + 1); }
  auto theta(Eigen::VectorXd& f) const { return f.segment(0, n); }
  auto theta(const Eigen::VectorXd& f) const { return f.segment(0, n); }
  // lag = 0 is the contemporaneous beta block.
  auto beta(Eigen::VectorXd& f, int lag) const { return f.segment(n + lag * k, k); }
  auto beta(const Eigen::VectorXd& f, int lag) const { return f.segment(n + lag * k, k); }
};

struct CpfOptions {
  // Likelihood override for the linearized special case: evaluate observation
  // densities at this fixed covariance instead of A^{-1} H_t A^{-1}'.
  std::optional<Eigen::MatrixXd> fixed_sigma;
};

struct CpfDiagnostics {
  double update_rate = 0.0;  // fraction of time indices where the path moved
  double min_ess = 0.0;      // smallest effective sample size across t
};

// Per-sweep precomputation for particle weighting and propagation.
class PgasContext {
 public:
  PgasContext(const ModelSpec& spec, const ParameterDraw& params, const Dataset& data,
              const CpfOptions& opts = {});

  const StackedLayout& layout() const { return layout_; }
  int t0() const { return t0_; }
  int rows() const { return static_cast<int>(data_->y.rows()); }
  const ModelSpec& spec() const { return *spec_; }
  const ParameterDraw& params() const { return *params_; }

  // Transition mean intercept alpha + sum_j d_j Y_{t-j}.
  const Eigen::VectorXd& ctrans(int t) const { return ctrans_[t]; }
  // Observation-equation lag mean c + sum_j B_j Y_{t-j}.
  const Eigen::VectorXd& m0(int t) const { return m0_[t]; }
  const Eigen::MatrixXd& chol_q() const { return chol_q_; }

  // log g(Y_t | F_t): conditional likelihood of the observation at t given the
  // particle's contemporaneous and lagged states.
  double obs_loglik(const Eigen::VectorXd& f, int t) const;
  // Same, with states spliced from a candidate history (indices <= t-1, read
  // from cand = F_{t-1}) and the reference path (indices >= t); evaluated at
  // time s >= t.
  double obs_loglik_spliced(const Eigen::VectorXd& cand, int t,
                            const std::vector<Eigen::VectorXd>& ref, int s) const;
  // log f((Theta_s, beta_s) | beta_{s-1}) on the nondegenerate subvector with
  // covariance blkdiag(I, Q).
  double trans_loglik(const Eigen::VectorXd& theta_s, const Eigen::VectorXd& beta_s,
                      const Eigen::VectorXd& beta_prev, int s) const;

 private:
  double core_loglik(const Eigen::VectorXd& resid, const Eigen::VectorXd& h) const;

  const ModelSpec* spec_;
  const ParameterDraw* params_;
  const Dataset* data_;
  StackedLayout layout_;
  int t0_;
  Eigen::MatrixXd a_inv_;
  std::vector<Eigen::VectorXd> m0_;
  std::vector<Eigen::VectorXd> ctrans_;
  Eigen::MatrixXd chol_q_;  // lower Cholesky factor of Qcov
  double q_logdet_ = 0.0;
  Eigen::MatrixXd fixed_sigma_chol_;
  double fixed_sigma_logdet_ = 0.0;
  bool use_fixed_sigma_ = false;
};

// One transition step: fresh Theta ~ N(0,I), beta_t = ctrans + theta beta_{t-1}
// + eta, lag blocks shifted deterministically.
Eigen::VectorXd propagate(const Eigen::VectorXd& particle, const PgasContext& ctx, int t,
                          RngHandle& rng);

// Ancestor weights for the reference particle (CPF-AS step 2d): probability
// proportional to w_{t-1}^{(j)} times the truncated product of transition and
// observation densities of the reference continuation given each candidate
// history.
Eigen::VectorXd ancestor_probabilities(const Eigen::MatrixXd& particles_prev,
                                       const Eigen::VectorXd& logw_prev, const PgasContext& ctx,
                                       const std::vector<Eigen::VectorXd>& ref, int t,
                                       int n_factors);
int ancestor_sample_reference(const Eigen::MatrixXd& particles_prev,
                              const Eigen::VectorXd& logw_prev, const PgasContext& ctx,
                              const std::vector<Eigen::VectorXd>& ref, int t, int n_factors,
                              RngHandle& rng);

// Full conditional particle filter with ancestor sampling; returns the
// selected trajectory unpacked into a StatePath.
StatePath cpf_as(const ModelSpec& spec, const ParameterDraw& params, const Dataset& data,
                 const StatePath& ref, const InitialStatePrior& init, RngHandle& rng,
                 CpfDiagnostics* diag = nullptr, const CpfOptions& opts = {});

}  // namespace skewvar
