#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "skewvar/model.hpp"
#include "skewvar/priors.hpp"
#include "skewvar/sampler.hpp"

namespace skewvar {

struct PredictiveDraws {
  Quarter origin;
  int horizon = 0;                     // H
  std::vector<Eigen::MatrixXd> draws;  // per h = 1..H: n_sim x N
  std::vector<bool> cumulated;         // per variable: cumulative-growth units
  std::vector<std::string> labels;

  int n_sim() const { return draws.empty() ? 0 : static_cast<int>(draws[0].rows()); }
};

// Everything one estimation needs besides the data window.
struct EstimationConfig {
  ModelSpec spec;
  DummyPriorConfig prior_cfg;  // gamma/s estimated per window
  PreModelConfig pre_model;
  // Hyperparameter training window: rows up to and including this quarter.
  // Unset (year 0) means the full estimation window.
  Quarter training_end{0, 1};
};

Chain estimate_model(const Dataset& data, const EstimationConfig& cfg, RngHandle& rng);

// Simulates the predictive density H quarters ahead from every retained draw.
PredictiveDraws simulate_forecast(const Chain& chain, const Dataset& data, int origin_row, int H,
                                  int paths_per_draw, RngHandle& rng);

// Replaces horizon-h values by running sums over horizons 1..h for masked
// variables (log-difference units -> cumulative growth).
PredictiveDraws cumulate_growth(PredictiveDraws pd, const std::vector<bool>& mask);

struct BacktestPlan {
  Quarter first_origin;
  Quarter final_origin;
  int horizon = 8;
  std::vector<Variant> variants;
  int paths_per_draw = 5;
  std::vector<bool> cumulate;  // growth-variable mask
  std::string out_dir;
  int workers = 1;
};

struct BacktestSummary {
  int n_tasks = 0;
  int n_done = 0;
  int n_skipped = 0;  // already archived
  std::vector<std::string> failures;
};

// Recursive pseudo-real-time backtest: re-estimates each variant at each
// origin and archives the predictive draws. Resumable (skips archived
// origins); origins run in parallel with per-task derived rng streams.
BacktestSummary run_backtest(const BacktestPlan& plan, const Dataset& data,
                             const EstimationConfig& cfg, std::uint64_t seed);

// Archive layout: <dir>/h<h>.csv plus manifest.json.
void write_predictive_draws(const std::string& dir, const PredictiveDraws& pd,
                            std::uint64_t seed, const std::string& spec_hash);
PredictiveDraws read_predictive_draws(const std::string& dir);
bool archive_entry_exists(const std::string& dir);

std::string spec_hash(const ModelSpec& spec);

}  // namespace skewvar
