#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "skewvar/dates.hpp"
#include "skewvar/model.hpp"

namespace skewvar {

enum class WeightKind { Uniform, BothTails, LeftTail, RightTail };

// Region-emphasis weight at a standardized point: BothTails 1 - phi(z)/phi(0),
// LeftTail 1 - Phi(z), RightTail Phi(z).
double weight_value(WeightKind kind, double z);

// Log scores are floored here so tail outliers cannot drive cumulative tables
// to -inf.
constexpr double kLogScoreFloor = -30.0;

double rmse(const Eigen::VectorXd& forecasts, const Eigen::VectorXd& realized);

// Gaussian-kernel density estimate at y, Silverman bandwidth.
double log_score(const Eigen::VectorXd& draws, double y);

// Energy form E|X-y| - 0.5 E|X-X'| via the O(n log n) sorted formula.
double crps(const Eigen::VectorXd& draws, double y);

// Threshold-weighted CRPS on a fixed 2001-node trapezoid grid spanning
// [min - 4 sd, max + 4 sd]; standardization by the draw mean/sd.
double weighted_crps(const Eigen::VectorXd& draws, double y, WeightKind kind);

// Scalar weighting at the standardized realization times the plain log score.
double weighted_log_score(const Eigen::VectorXd& draws, double y, WeightKind kind);

enum class Loss {
  Rmse,  // per-origin squared error; tables report root-mean ratios
  LogScore,
  Crps,
  WLogBoth,
  WLogLeft,
  WLogRight,
  WCrpsBoth,
  WCrpsLeft,
  WCrpsRight,
};

std::string to_string(Loss loss);
std::vector<Loss> all_losses();

// Time-indexed per-origin losses for one model/variable/horizon.
struct ScoreSeries {
  std::string model;
  std::string variable;
  int horizon = 0;
  Loss kind = Loss::LogScore;
  std::vector<Quarter> origins;
  std::vector<double> values;
};

// Per-origin losses for one archived model directory (<dir>/<origin>/h<h>.csv)
// against the realized dataset. Origins whose realization lies outside the
// dataset are dropped.
std::vector<ScoreSeries> compute_scores(const std::string& model_dir, const Dataset& realized,
                                        const std::vector<Loss>& losses);

struct PeriodWindow {
  std::string name;
  Quarter start;
  Quarter end;  // inclusive
};

// Formatted relative-performance tables (proposed = variants.front()).
struct TableBlock {
  std::string title;
  std::vector<std::string> col_names;
  std::vector<std::string> row_names;
  std::vector<std::vector<std::string>> cells;
};

std::vector<TableBlock> score_table(const std::string& archive_dir,
                                    const std::vector<std::string>& variants,
                                    const Dataset& realized, const std::vector<Loss>& losses,
                                    const std::vector<PeriodWindow>& periods);

void write_table_csv(const std::string& path, const TableBlock& block);

}  // namespace skewvar
