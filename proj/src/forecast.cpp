#include "skewvar/forecast.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "skewvar/csv.hpp"
#include "skewvar/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace skewvar {

std::string spec_hash(const ModelSpec& spec) {
  std::string s = fmt::format("{}|{}|{}|{}|{}|{}|{}|{}|{}|{}", spec.n_vars, spec.p_obs_lags,
                              spec.q_state_lags, spec.l_inmean_lags, to_string(spec.variant),
                              spec.n_particles, spec.ancestor_factors, spec.n_draws, spec.n_burn,
                              spec.thin);
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

Chain estimate_model(const Dataset& data, const EstimationConfig& cfg, RngHandle& rng) {
  DummyPriorConfig prior_cfg = cfg.prior_cfg;
  int training_rows = data.rows();
  if (cfg.training_end.year != 0) {
    int row = data.row_of(cfg.training_end);
    if (row >= 0) training_rows = row + 1;
  }
  training_rows = std::min(training_rows, data.rows());
  AssembledPriors ap = assemble_priors(data, cfg.spec, prior_cfg, cfg.pre_model, training_rows,
                                       rng);
  return run_gibbs(cfg.spec, data, ap.priors, ap.init_path, rng);
}

PredictiveDraws simulate_forecast(const Chain& chain, const Dataset& data, int origin_row, int H,
                                  int paths_per_draw, RngHandle& rng) {
  const ModelSpec& spec = chain.spec;
  const int n = spec.n_vars;
  require(origin_row >= spec.first_usable() && origin_row < data.rows(),
          "forecast origin row {} outside the dataset (T = {})", origin_row, data.rows());
  require(chain.size() > 0, "empty chain");
  require(H >= 1 && paths_per_draw >= 1, "need H >= 1 and paths_per_draw >= 1");
  for (const auto& sp : chain.states)
    require(sp.rows() > origin_row, "chain states end before the forecast origin");

  PredictiveDraws pd;
  pd.origin = data.dates[static_cast<size_t>(origin_row)];
  pd.horizon = H;
  pd.labels = data.labels;
  pd.cumulated.assign(static_cast<size_t>(n), false);
  const int n_sim = chain.size() * paths_per_draw;
  pd.draws.assign(H, Eigen::MatrixXd::Zero(n_sim, n));

  const int buf_rows = origin_row + 1 + H;
  Eigen::MatrixXd ybuf(buf_rows, n), hbuf(buf_rows, n), dbuf(buf_rows, n);
  long rejects = 0, attempts = 0;

  int sim = 0;
  for (int i = 0; i < chain.size(); ++i) {
    const ParameterDraw& params = chain.params[i];
    const StatePath& states = chain.states[i];
    Eigen::LLT<Eigen::MatrixXd> qllt(params.Qcov);
    require(qllt.info() == Eigen::Success, "Qcov not SPD in draw {}", i);
    Eigen::MatrixXd chol_q = qllt.matrixL();
    // Rows up to the origin stay fixed for every path of this draw.
    ybuf.topRows(origin_row + 1) = data.y.topRows(origin_row + 1);
    hbuf.topRows(origin_row + 1) = states.h.topRows(origin_row + 1);
    dbuf.topRows(origin_row + 1) = states.d.topRows(origin_row + 1);
    for (int p = 0; p < paths_per_draw; ++p, ++sim) {
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        ++attempts;
        Eigen::VectorXd beta = states.beta_at(spec, origin_row);
        ok = true;
        for (int t = origin_row + 1; t <= origin_row + H; ++t) {
          beta = transition_intercept(spec, params, ybuf, t) + params.theta * beta +
                 chol_q * rng.normal_vec(spec.state_dim());
          if (beta.head(n).cwiseAbs().maxCoeff() > kLogVarClamp) {
            ok = false;
            ++rejects;
            break;
          }
          hbuf.row(t) = beta.head(n).transpose();
          if (spec.has_skew())
            dbuf.row(t) = beta.tail(n).transpose();
          else
            dbuf.row(t).setZero();
          Eigen::VectorXd tau = rng.normal_vec(n).cwiseAbs();
          Eigen::VectorXd e(n);
          for (int v = 0; v < n; ++v) e(v) = std::exp(0.5 * hbuf(t, v)) * rng.normal();
          Eigen::VectorXd big_e = e;
          if (spec.has_skew()) big_e += dbuf.row(t).transpose().cwiseProduct(tau);
          ybuf.row(t) = (observation_mean(spec, params, ybuf, hbuf, dbuf, t) +
                         params.A.triangularView<Eigen::Lower>().solve(big_e))
                            .transpose();
        }
      }
      require(ok, "forecast path from draw {} kept breaching the state clamp", i);
      for (int h = 1; h <= H; ++h) pd.draws[h - 1].row(sim) = ybuf.row(origin_row + h);
    }
  }
  require(rejects * 10 <= attempts,
          "state clamp rejected {} of {} forecast paths (more than 10%)", rejects, attempts);
  return pd;
}

PredictiveDraws cumulate_growth(PredictiveDraws pd, const std::vector<bool>& mask) {
  require(mask.size() == pd.labels.size(), "cumulate mask has {} entries for {} variables",
          mask.size(), pd.labels.size());
  for (size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) continue;
    for (int h = 1; h < pd.horizon; ++h)
      pd.draws[h].col(static_cast<Eigen::Index>(v)) +=
          pd.draws[h - 1].col(static_cast<Eigen::Index>(v));
    pd.cumulated[v] = true;
  }
  return pd;
}

bool archive_entry_exists(const std::string& dir) {
  return fs::exists(fs::path(dir) / "manifest.json");
}

void write_predictive_draws(const std::string& dir, const PredictiveDraws& pd,
                            std::uint64_t seed, const std::string& hash) {
  fs::path final_dir(dir);
  fs::path tmp_dir(dir + ".tmp");
  fs::remove_all(tmp_dir);
  fs::create_directories(tmp_dir);
  for (int h = 1; h <= pd.horizon; ++h)
    write_csv_file((tmp_dir / fmt::format("h{}.csv", h)).string(), pd.labels, pd.draws[h - 1]);
  json manifest;
  manifest["origin"] = pd.origin.str();
  manifest["horizon"] = pd.horizon;
  manifest["n_sim"] = pd.n_sim();
  manifest["labels"] = pd.labels;
  manifest["cumulated"] = pd.cumulated;
  manifest["seed"] = seed;
  manifest["spec_hash"] = hash;
  std::ofstream mf(tmp_dir / "manifest.json");
  mf << manifest.dump(2) << "\n";
  require(mf.good(), "failed writing manifest under '{}'", dir);
  mf.close();
  fs::remove_all(final_dir);
  fs::create_directories(final_dir.parent_path());
  fs::rename(tmp_dir, final_dir);
}

PredictiveDraws read_predictive_draws(const std::string& dir) {
  fs::path base(dir);
  std::ifstream mf(base / "manifest.json");
  require(mf.good(), "missing manifest.json under '{}'", dir);
  json manifest = json::parse(mf);
  PredictiveDraws pd;
  pd.origin = Quarter::parse(manifest.at("origin").get<std::string>());
  pd.horizon = manifest.at("horizon").get<int>();
  pd.labels = manifest.at("labels").get<std::vector<std::string>>();
  pd.cumulated = manifest.at("cumulated").get<std::vector<bool>>();
  const int n_sim = manifest.at("n_sim").get<int>();
  const int n = static_cast<int>(pd.labels.size());
  pd.draws.assign(pd.horizon, Eigen::MatrixXd::Zero(n_sim, n));
  for (int h = 1; h <= pd.horizon; ++h) {
    CsvTable t = read_csv_file((base / fmt::format("h{}.csv", h)).string());
    require(static_cast<int>(t.rows.size()) == n_sim, "h{}.csv has {} rows, expected {}", h,
            t.rows.size(), n_sim);
    for (int r = 0; r < n_sim; ++r)
      for (int c = 0; c < n; ++c)
        pd.draws[h - 1](r, c) = parse_double(t.rows[r][c], "archived draw");
  }
  return pd;
}

BacktestSummary run_backtest(const BacktestPlan& plan, const Dataset& data,
                             const EstimationConfig& cfg, std::uint64_t seed) {
  require(!plan.variants.empty(), "backtest plan lists no variants");
  require(plan.first_origin <= plan.final_origin, "origins must increase");
  require(!plan.out_dir.empty(), "backtest plan needs an output directory");
  std::vector<Quarter> origins = quarter_range(plan.first_origin, plan.final_origin);
  for (const Quarter& q : origins)
    require(data.row_of(q) >= 0, "origin {} not present in the dataset", q.str());

  struct Task {
    int variant_idx;
    int origin_idx;
  };
  std::vector<Task> tasks;
  for (int v = 0; v < static_cast<int>(plan.variants.size()); ++v)
    for (int o = 0; o < static_cast<int>(origins.size()); ++o) tasks.push_back({v, o});

  BacktestSummary summary;
  summary.n_tasks = static_cast<int>(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex mu;
  const int workers = std::max(1, plan.workers);

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const Quarter origin = origins[static_cast<size_t>(task.origin_idx)];
      Variant variant = plan.variants[static_cast<size_t>(task.variant_idx)];
      std::string dir = fmt::format("{}/{}/{}", plan.out_dir, to_string(variant), origin.str());
      try {
        if (archive_entry_exists(dir)) {
          std::lock_guard<std::mutex> lock(mu);
          ++summary.n_skipped;
          continue;
        }
        EstimationConfig task_cfg = cfg;
        task_cfg.spec.variant = variant;
        if (task_cfg.training_end.year == 0) task_cfg.training_end = plan.first_origin;
        // Stream derived from the task identity, not the schedule.
        std::uint64_t stream = (static_cast<std::uint64_t>(task.variant_idx) << 32) |
                               static_cast<std::uint64_t>(task.origin_idx);
        RngHandle rng(seed, stream);
        Dataset window = data.through_row(data.row_of(origin));
        Chain chain = estimate_model(window, task_cfg, rng);
        PredictiveDraws pd =
            simulate_forecast(chain, window, window.rows() - 1, plan.horizon,
                              plan.paths_per_draw, rng);
        if (!plan.cumulate.empty()) pd = cumulate_growth(std::move(pd), plan.cumulate);
        write_predictive_draws(dir, pd, seed, spec_hash(task_cfg.spec));
        std::lock_guard<std::mutex> lock(mu);
        ++summary.n_done;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        summary.failures.push_back(fmt::format("{}/{}: {}", to_string(variant), origin.str(),
                                               e.what()));
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (summary.failures.size() * 20 > tasks.size()) {
    std::string joined;
    for (const auto& f : summary.failures) joined += "\n  " + f;
    fail("backtest failed for {} of {} tasks:{}", summary.failures.size(), tasks.size(), joined);
  }
  return summary;
}

}  // namespace skewvar
