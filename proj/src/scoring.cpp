#include "skewvar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "skewvar/csv.hpp"
#include "skewvar/error.hpp"
#include "skewvar/forecast.hpp"
#include "skewvar/gwtest.hpp"
#include "skewvar/rng.hpp"

namespace fs = std::filesystem;

namespace skewvar {

double weight_value(WeightKind kind, double z) {
  switch (kind) {
    case WeightKind::Uniform: return 1.0;
    case WeightKind::BothTails: return 1.0 - std::exp(-0.5 * z * z);  // 1 - phi(z)/phi(0)
    case WeightKind::LeftTail: return 1.0 - std_normal_cdf(z);
    case WeightKind::RightTail: return std_normal_cdf(z);
  }
  return 1.0;
}

double rmse(const Eigen::VectorXd& forecasts, const Eigen::VectorXd& realized) {
  require(forecasts.size() > 0, "rmse of empty series");
  require(forecasts.size() == realized.size(), "rmse length mismatch: {} vs {}", forecasts.size(),
          realized.size());
  return std::sqrt((forecasts - realized).squaredNorm() / static_cast<double>(forecasts.size()));
}

namespace {

void draw_moments(const Eigen::VectorXd& draws, double& mean, double& sd) {
  mean = draws.mean();
  sd = std::sqrt((draws.array() - mean).square().sum() /
                 static_cast<double>(draws.size() - 1));
}

double silverman_bandwidth(Eigen::VectorXd sorted, double sd) {
  const auto n = sorted.size();
  double q25 = sorted(static_cast<Eigen::Index>(0.25 * (n - 1)));
  double q75 = sorted(static_cast<Eigen::Index>(0.75 * (n - 1)));
  double spread = std::min(sd, (q75 - q25) / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

}  // namespace

double log_score(const Eigen::VectorXd& draws, double y) {
  const auto n = draws.size();
  require(n >= 100, "log_score needs at least 100 draws, got {}", n);
  double mean, sd;
  draw_moments(draws, mean, sd);
  Eigen::VectorXd sorted = draws;
  std::sort(sorted.data(), sorted.data() + n);
  double bw = silverman_bandwidth(std::move(sorted), sd);
  require(bw > 0.0, "degenerate draws: zero kernel bandwidth");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += std_normal_pdf((y - draws(i)) / bw);
  double dens = acc / (static_cast<double>(n) * bw);
  double ls = dens > 0.0 ? std::log(dens) : kLogScoreFloor;
  return std::max(ls, kLogScoreFloor);
}

double crps(const Eigen::VectorXd& draws, double y) {
  const auto n = draws.size();
  require(n >= 2, "crps needs at least 2 draws, got {}", n);
  Eigen::VectorXd sorted = draws;
  std::sort(sorted.data(), sorted.data() + n);
  double e_xy = (sorted.array() - y).abs().sum() / static_cast<double>(n);
  double pair_sum = 0.0;  // sum_{i<j} (x_(j) - x_(i))
  for (Eigen::Index k = 0; k < n; ++k)
    pair_sum += (2.0 * static_cast<double>(k) - static_cast<double>(n) + 1.0) * sorted(k);
  return e_xy - pair_sum / (static_cast<double>(n) * static_cast<double>(n));
}

double weighted_crps(const Eigen::VectorXd& draws, double y, WeightKind kind) {
  const auto n = draws.size();
  require(n >= 2, "weighted_crps needs at least 2 draws, got {}", n);
  double mean, sd;
  draw_moments(draws, mean, sd);
  require(sd > 0.0, "weighted_crps: zero draw standard deviation");
  Eigen::VectorXd sorted = draws;
  std::sort(sorted.data(), sorted.data() + n);
  const double lo = std::min(sorted(0), y) - 4.0 * sd;
  const double hi = std::max(sorted(n - 1), y) + 4.0 * sd;
  const int nodes = 2001;
  const double step = (hi - lo) / (nodes - 1);
  double acc = 0.0;
  Eigen::Index idx = 0;
  for (int g = 0; g < nodes; ++g) {
    const double z = lo + g * step;
    while (idx < n && sorted(idx) <= z) ++idx;
    const double cdf = static_cast<double>(idx) / static_cast<double>(n);
    const double indicator = y <= z ? 1.0 : 0.0;
    const double w = weight_value(kind, (z - mean) / sd);
    const double val = w * (cdf - indicator) * (cdf - indicator);
    acc += (g == 0 || g == nodes - 1) ? 0.5 * val : val;
  }
  return acc * step;
}

double weighted_log_score(const Eigen::VectorXd& draws, double y, WeightKind kind) {
  double mean, sd;
  draw_moments(draws, mean, sd);
  require(sd > 0.0, "weighted_log_score: zero draw standard deviation");
  return weight_value(kind, (y - mean) / sd) * log_score(draws, y);
}

std::string to_string(Loss loss) {
  switch (loss) {
    case Loss::Rmse: return "rmse";
    case Loss::LogScore: return "log_score";
    case Loss::Crps: return "crps";
    case Loss::WLogBoth: return "wlog_both";
    case Loss::WLogLeft: return "wlog_left";
    case Loss::WLogRight: return "wlog_right";
    case Loss::WCrpsBoth: return "wcrps_both";
    case Loss::WCrpsLeft: return "wcrps_left";
    case Loss::WCrpsRight: return "wcrps_right";
  }
  return "?";
}

std::vector<Loss> all_losses() {
  return {Loss::Rmse,     Loss::LogScore, Loss::Crps,      Loss::WLogBoth, Loss::WLogLeft,
          Loss::WLogRight, Loss::WCrpsBoth, Loss::WCrpsLeft, Loss::WCrpsRight};
}

namespace {

double one_loss(Loss loss, const Eigen::VectorXd& draws, double realized) {
  switch (loss) {
    case Loss::Rmse: {
      double err = draws.mean() - realized;
      return err * err;  // per-origin squared error
    }
    case Loss::LogScore: return log_score(draws, realized);
    case Loss::Crps: return crps(draws, realized);
    case Loss::WLogBoth: return weighted_log_score(draws, realized, WeightKind::BothTails);
    case Loss::WLogLeft: return weighted_log_score(draws, realized, WeightKind::LeftTail);
    case Loss::WLogRight: return weighted_log_score(draws, realized, WeightKind::RightTail);
    case Loss::WCrpsBoth: return weighted_crps(draws, realized, WeightKind::BothTails);
    case Loss::WCrpsLeft: return weighted_crps(draws, realized, WeightKind::LeftTail);
    case Loss::WCrpsRight: return weighted_crps(draws, realized, WeightKind::RightTail);
  }
  fail("unknown loss");
}

// Higher-is-better losses (scores) vs lower-is-better (errors).
bool is_score(Loss loss) {
  return loss == Loss::LogScore || loss == Loss::WLogBoth || loss == Loss::WLogLeft ||
         loss == Loss::WLogRight;
}

}  // namespace

std::vector<ScoreSeries> compute_scores(const std::string& model_dir, const Dataset& realized,
                                        const std::vector<Loss>& losses) {
  require(fs::is_directory(model_dir), "archive directory '{}' does not exist", model_dir);
  std::vector<Quarter> origins;
  for (const auto& entry : fs::directory_iterator(model_dir)) {
    if (!entry.is_directory()) continue;
    if (!fs::exists(entry.path() / "manifest.json")) continue;
    origins.push_back(Quarter::parse(entry.path().filename().string()));
  }
  require(!origins.empty(), "no archived origins under '{}'", model_dir);
  std::sort(origins.begin(), origins.end());

  std::vector<ScoreSeries> out;
  std::map<std::string, size_t> index;
  std::string model_name = fs::path(model_dir).filename().string();

  for (const Quarter& origin : origins) {
    PredictiveDraws pd =
        read_predictive_draws((fs::path(model_dir) / origin.str()).string());
    int origin_row = realized.row_of(origin);
    require(origin_row >= 0, "archived origin {} missing from the realized dataset",
            origin.str());
    for (int h = 1; h <= pd.horizon; ++h) {
      int target = origin_row + h;
      if (target >= realized.rows()) continue;
      for (size_t v = 0; v < pd.labels.size(); ++v) {
        double actual;
        if (pd.cumulated[v]) {
          actual = 0.0;
          for (int s = origin_row + 1; s <= target; ++s)
            actual += realized.y(s, static_cast<Eigen::Index>(v));
        } else {
          actual = realized.y(target, static_cast<Eigen::Index>(v));
        }
        Eigen::VectorXd draws = pd.draws[h - 1].col(static_cast<Eigen::Index>(v));
        for (Loss loss : losses) {
          std::string key = fmt::format("{}|{}|{}", pd.labels[v], h, to_string(loss));
          auto it = index.find(key);
          if (it == index.end()) {
            ScoreSeries s;
            s.model = model_name;
            s.variable = pd.labels[v];
            s.horizon = h;
            s.kind = loss;
            index.emplace(key, out.size());
            out.push_back(std::move(s));
            it = index.find(key);
          }
          ScoreSeries& s = out[it->second];
          s.origins.push_back(origin);
          s.values.push_back(one_loss(loss, draws, actual));
        }
      }
    }
  }
  return out;
}

namespace {

const ScoreSeries* find_series(const std::vector<ScoreSeries>& all, const std::string& var,
                               int h, Loss loss) {
  for (const auto& s : all)
    if (s.variable == var && s.horizon == h && s.kind == loss) return &s;
  return nullptr;
}

// Align two series on common origins; returns per-origin (a, b) values.
void align(const ScoreSeries& a, const ScoreSeries& b, std::vector<Quarter>& origins,
           Eigen::VectorXd& va, Eigen::VectorXd& vb) {
  std::vector<double> xa, xb;
  origins.clear();
  size_t j = 0;
  for (size_t i = 0; i < a.origins.size(); ++i) {
    while (j < b.origins.size() && b.origins[j] < a.origins[i]) ++j;
    if (j < b.origins.size() && b.origins[j] == a.origins[i]) {
      origins.push_back(a.origins[i]);
      xa.push_back(a.values[i]);
      xb.push_back(b.values[j]);
    }
  }
  va = Eigen::Map<Eigen::VectorXd>(xa.data(), static_cast<Eigen::Index>(xa.size()));
  vb = Eigen::Map<Eigen::VectorXd>(xb.data(), static_cast<Eigen::Index>(xb.size()));
}

std::string format_cell(double value, const std::string& stars, int precision = 3) {
  return fmt::format("{:.{}f}{}", value, precision, stars);
}

}  // namespace

std::vector<TableBlock> score_table(const std::string& archive_dir,
                                    const std::vector<std::string>& variants,
                                    const Dataset& realized, const std::vector<Loss>& losses,
                                    const std::vector<PeriodWindow>& periods) {
  require(variants.size() >= 2, "score tables need the proposed model plus >= 1 competitor");
  std::map<std::string, std::vector<ScoreSeries>> scores;
  for (const auto& v : variants)
    scores[v] = compute_scores((fs::path(archive_dir) / v).string(), realized, losses);

  const auto& proposed = scores.at(variants[0]);
  std::vector<std::string> variables;
  int max_h = 0;
  for (const auto& s : proposed) {
    if (std::find(variables.begin(), variables.end(), s.variable) == variables.end())
      variables.push_back(s.variable);
    max_h = std::max(max_h, s.horizon);
  }

  std::vector<TableBlock> blocks;
  for (size_t c = 1; c < variants.size(); ++c) {
    const auto& competitor = scores.at(variants[c]);
    for (Loss loss : losses) {
      TableBlock block;
      block.title = fmt::format("{}_vs_{}", to_string(loss), variants[c]);
      for (int h = 1; h <= max_h; ++h) block.col_names.push_back(fmt::format("H{}", h));
      for (const auto& var : variables) {
        block.row_names.push_back(var);
        std::vector<std::string> row;
        for (int h = 1; h <= max_h; ++h) {
          const ScoreSeries* sa = find_series(proposed, var, h, loss);
          const ScoreSeries* sb = find_series(competitor, var, h, loss);
          if (!sa || !sb) {
            row.push_back("");
            continue;
          }
          std::vector<Quarter> common;
          Eigen::VectorXd va, vb;
          align(*sa, *sb, common, va, vb);
          if (va.size() < 10) {
            row.push_back("na");
            continue;
          }
          Eigen::VectorXd diff = va - vb;
          GwResult gw = gw_unconditional(diff, h);
          std::string stars = significance_stars(gw.p_value);
          if (loss == Loss::Rmse) {
            row.push_back(format_cell(std::sqrt(va.mean()) / std::sqrt(vb.mean()), stars));
          } else if (is_score(loss)) {
            double pct = 100.0 * (va.mean() - vb.mean()) / std::abs(vb.mean());
            row.push_back(format_cell(pct, stars, 1) + "%");
          } else {
            row.push_back(format_cell(va.mean() / vb.mean(), stars));
          }
        }
        block.cells.push_back(std::move(row));
      }
      blocks.push_back(std::move(block));

      // Conditional-test variant of the same table.
      TableBlock cond = blocks.back();
      cond.title += "_conditional";
      for (size_t r = 0; r < variables.size(); ++r) {
        for (int h = 1; h <= max_h; ++h) {
          const ScoreSeries* sa = find_series(proposed, variables[r], h, loss);
          const ScoreSeries* sb = find_series(competitor, variables[r], h, loss);
          if (!sa || !sb) continue;
          std::vector<Quarter> common;
          Eigen::VectorXd va, vb;
          align(*sa, *sb, common, va, vb);
          if (va.size() < 13) continue;
          Eigen::VectorXd diff = va - vb;
          GwResult gw = gw_conditional(diff, h);
          // Re-format the cell with conditional stars.
          std::string& cell = cond.cells[r][static_cast<size_t>(h - 1)];
          size_t cut = cell.find_first_of("*%");
          std::string base = cut == std::string::npos ? cell : cell.substr(0, cut);
          bool pct = cell.find('%') != std::string::npos;
          cell = base + (pct ? "%" : "") + significance_stars(gw.p_value);
        }
      }
      blocks.push_back(std::move(cond));
    }

    // Period table: cumulative weighted both-tails log-score differences and
    // weighted CRPS ratios, averaged across horizons.
    if (!periods.empty()) {
      TableBlock pblock;
      pblock.title = fmt::format("periods_vs_{}", variants[c]);
      for (const auto& var : variables) {
        pblock.col_names.push_back(var + "_cum_wlog");
        pblock.col_names.push_back(var + "_wcrps_ratio");
      }
      for (const auto& period : periods) {
        pblock.row_names.push_back(
            fmt::format("{} {}-{}", period.name, period.start.str(), period.end.str()));
        std::vector<std::string> row;
        for (const auto& var : variables) {
          // Per-origin differential averaged across horizons 1..max_h.
          std::map<int, std::pair<double, int>> diff_by_origin;   // wlog diffs
          std::map<int, std::pair<double, int>> ratio_by_origin;  // (a, b) sums
          std::map<int, double> ratio_b;
          for (int h = 1; h <= max_h; ++h) {
            const ScoreSeries* sa = find_series(proposed, var, h, Loss::WLogBoth);
            const ScoreSeries* sb = find_series(competitor, var, h, Loss::WLogBoth);
            const ScoreSeries* ca = find_series(proposed, var, h, Loss::WCrpsBoth);
            const ScoreSeries* cb = find_series(competitor, var, h, Loss::WCrpsBoth);
            if (!sa || !sb || !ca || !cb) continue;
            std::vector<Quarter> common;
            Eigen::VectorXd va, vb;
            align(*sa, *sb, common, va, vb);
            for (size_t i = 0; i < common.size(); ++i) {
              if (common[i] < period.start || period.end < common[i]) continue;
              auto& acc = diff_by_origin[common[i].index()];
              acc.first += va(static_cast<Eigen::Index>(i)) - vb(static_cast<Eigen::Index>(i));
              acc.second += 1;
            }
            align(*ca, *cb, common, va, vb);
            for (size_t i = 0; i < common.size(); ++i) {
              if (common[i] < period.start || period.end < common[i]) continue;
              auto& acc = ratio_by_origin[common[i].index()];
              acc.first += va(static_cast<Eigen::Index>(i));
              acc.second += 1;
              ratio_b[common[i].index()] += vb(static_cast<Eigen::Index>(i));
            }
          }
          if (diff_by_origin.empty()) {
            row.push_back("na");
            row.push_back("na");
            continue;
          }
          Eigen::VectorXd diffs(static_cast<Eigen::Index>(diff_by_origin.size()));
          Eigen::Index k = 0;
          double cum = 0.0;
          for (const auto& [idx, acc] : diff_by_origin) {
            diffs(k++) = acc.first / acc.second;
            cum += acc.first / acc.second;
          }
          std::string stars;
          if (diffs.size() >= 10)
            stars = significance_stars(gw_unconditional(diffs, max_h).p_value);
          row.push_back(fmt::format("{:.1f}{} ({:.1f})", cum, stars,
                                    cum / static_cast<double>(diffs.size())));
          double num = 0.0, den = 0.0;
          for (const auto& [idx, acc] : ratio_by_origin) num += acc.first;
          for (const auto& [idx, b] : ratio_b) den += b;
          row.push_back(den > 0 ? fmt::format("{:.3f}", num / den) : "na");
        }
        pblock.cells.push_back(std::move(row));
      }
      blocks.push_back(std::move(pblock));
    }
  }
  return blocks;
}

void write_table_csv(const std::string& path, const TableBlock& block) {
  std::ofstream out(path);
  require(out.good(), "cannot open '{}' for writing", path);
  out << block.title;
  for (const auto& c : block.col_names) out << "," << c;
  out << "\n";
  for (size_t r = 0; r < block.row_names.size(); ++r) {
    out << block.row_names[r];
    for (const auto& cell : block.cells[r]) out << "," << cell;
    out << "\n";
  }
}

}  // namespace skewvar
