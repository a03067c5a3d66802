#pragma once

// Experiment drivers behind the CLI: single runs, lambda and ensemble-size
// sweeps, lambda calibration, the worst-case chain walkthrough and the
// cart-pole upsilon heatmap. Every driver writes CSV next to any SVG.

#include "spidr/envs/heatmap.hpp"
#include "spidr/harness/config.hpp"
#include "spidr/harness/output.hpp"
#include "spidr/solve/continuous_train.hpp"
#include "spidr/solve/policy_io.hpp"
#include "spidr/solve/tabular_train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace spidr::harness {

namespace fs = std::filesystem;

enum class RunStatus { safe, unsafe, infeasible, failed };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::safe: return "SAFE";
    case RunStatus::unsafe: return "UNSAFE";
    case RunStatus::infeasible: return "INFEASIBLE";
    case RunStatus::failed: return "FAILED";
  }
  return "unknown";
}

struct RunOutcome {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int n = 0;
  double budget = 0.0;
  std::vector<MetricsRecord> metrics;
  double j_eval = 0.0;
  double c_eval = 0.0;
  double c_train_raw = 0.0;
  double c_train_penalized = 0.0;
  double gap = 0.0;          // C_eval - C_train (raw)
  double sufficiency = 0.0;  // penalty value mass minus |gap|
  bool infeasible = false;
  UpsilonStats upsilon;
  double runtime = 0.0;  // seconds, monotonic clock
  PolicyFile policy;

  [[nodiscard]] RunStatus status() const {
    if (infeasible) return RunStatus::infeasible;
    return c_eval <= budget + 1e-9 ? RunStatus::safe : RunStatus::unsafe;
  }
};

struct RunOverrides {
  std::optional<double> lambda;
  std::optional<int> n;
  bool track_upsilon = true;  // probe siblings at lambda = 0 (continuous only)
};

namespace detail {

struct TabularSetup {
  TabularProblem problem;
  double budget = 0.0;
};

inline TabularSetup tabular_setup(const ExperimentConfig& cfg, std::uint64_t seed, const PenaltyConfig& penalty) {
  TabularSetup out;
  const EnsembleSpec ensemble{cfg.num_rollout_domains, penalty.ensemble_size, seed};
  switch (cfg.env) {
    case EnvKind::chain: {
      const envs::Example1 ex = envs::build_example1(cfg.chain);
      out.budget = cfg.budget.value_or(ex.budget);
      const DomainSample sample = sample_domains(ex.sim_family.distribution(Phase::train), ensemble, penalty.mode);
      out.problem = make_tabular_problem(ex.sim_family, sample, {ex.real_env}, out.budget);
      break;
    }
    case EnvKind::random_pair: {
      const envs::RandomPair pair = envs::build_random_pair(cfg.random_pair);
      out.budget = cfg.budget.value_or(pair.base.budget);
      const DomainSample sample = sample_domains(pair.family.distribution(Phase::train), ensemble, penalty.mode);
      out.problem = make_tabular_problem(pair.family, sample, {pair.real_env}, out.budget);
      break;
    }
    case EnvKind::tabular: {
      out.budget = cfg.budget.value_or(cfg.tabular_domains.front().budget);
      Rng rng = make_stream(seed, "tabular/explicit-domains");
      std::uniform_int_distribution<std::size_t> pick(0, cfg.tabular_domains.size() - 1);
      TabularProblem& p = out.problem;
      for (int i = 0; i < cfg.num_rollout_domains; ++i) {
        p.train_envs.push_back(cfg.tabular_domains[static_cast<std::size_t>(i) % cfg.tabular_domains.size()]);
        p.train_envs.back().budget = out.budget;
        std::vector<TabularCMDP> siblings;
        if (penalty.mode == UpsilonMode::exact) siblings = cfg.tabular_domains;
        else
          for (int j = 0; j < penalty.ensemble_size; ++j) siblings.push_back(cfg.tabular_domains[pick(rng)]);
        p.siblings.push_back(std::move(siblings));
      }
      p.eval_envs = cfg.tabular_eval;
      p.budget = out.budget;
      break;
    }
    default: throw std::logic_error("tabular_setup: not a tabular env");
  }
  return out;
}

inline DomainFamily<envs::PointGoalEnv> pointgoal_family_of(const ExperimentConfig& cfg) {
  return envs::pointgoal_family(cfg.pointgoal, cfg.domains);
}

inline DomainFamily<envs::CartpoleEnv> cartpole_family_of(const ExperimentConfig& cfg) {
  return envs::cartpole_family(cfg.cartpole, cfg.domains);
}

inline FeatureMap features_of(const ExperimentConfig& cfg) {
  if (cfg.env == EnvKind::pointgoal) return pointgoal_features(cfg.pointgoal.goal, cfg.pointgoal.arena_hi.maxCoeff());
  if (cfg.env == EnvKind::cartpole) return cartpole_features();
  throw std::logic_error("features_of: tabular env");
}

template <class Env>
void run_continuous(const ExperimentConfig& cfg, const DomainFamily<Env>& family, int horizon, SolverConfig solver,
                    const PenaltyConfig& penalty, bool track, RunOutcome& out) {
  ContinuousTask task;
  task.budget = out.budget;
  task.discount = cfg.discount;
  task.horizon = horizon;
  task.num_rollout_domains = cfg.num_rollout_domains;
  task.track_upsilon = track;
  auto policy = LinearGaussianPolicy::zeros(features_of(cfg), Env::action_dim, solver.initial_std);
  const ContinuousRun run = train_continuous(solver, family, task, penalty, std::move(policy));
  out.metrics = run.metrics;
  out.infeasible = run.infeasible;
  out.upsilon = run.upsilon;
  out.policy = to_policy_file(run.policy);
}

}  // namespace detail

/// One training run at `seed`; the last iterate is evaluated on the eval side.
inline RunOutcome run_once(const ExperimentConfig& cfg, std::uint64_t seed, const RunOverrides& overrides = {}) {
  PenaltyConfig penalty = cfg.penalty;
  if (overrides.lambda) penalty.lambda = *overrides.lambda;
  if (overrides.n) penalty.ensemble_size = *overrides.n;
  penalty.validate();
  SolverConfig solver = cfg.solver;
  solver.seed = seed;

  RunOutcome out;
  out.seed = seed;
  out.lambda = penalty.lambda;
  out.n = penalty.ensemble_size;
  const auto start = std::chrono::steady_clock::now();
  if (is_tabular(cfg.env)) {
    const detail::TabularSetup setup = detail::tabular_setup(cfg, seed, penalty);
    out.budget = setup.budget;
    const TabularRun run = train_tabular(solver, setup.problem, penalty);
    out.metrics = run.metrics;
    out.infeasible = run.infeasible;
    out.policy = to_policy_file(run.policy, &run.logits);
    out.upsilon = spidr::detail::visited_upsilon(setup.problem, run.upsilon, run.policy);
  } else {
    out.budget = cfg.effective_budget();
    if (cfg.env == EnvKind::pointgoal)
      detail::run_continuous(cfg, detail::pointgoal_family_of(cfg), cfg.pointgoal.horizon, solver, penalty,
                             overrides.track_upsilon, out);
    else
      detail::run_continuous(cfg, detail::cartpole_family_of(cfg), cfg.cartpole.horizon, solver, penalty,
                             overrides.track_upsilon, out);
  }
  out.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const MetricsRecord& last = out.metrics.back();
  out.j_eval = last.j_eval;
  out.c_eval = last.c_eval;
  out.c_train_raw = last.c_train_raw;
  out.c_train_penalized = last.c_train_penalized;
  out.gap = out.c_eval - out.c_train_raw;
  out.sufficiency = (out.c_train_penalized - out.c_train_raw) - std::abs(out.gap);
  return out;
}

inline Summary run_summary(const ExperimentConfig& cfg, const RunOutcome& r, const std::string& config_hash) {
  Summary s;
  s.add("name", cfg.name);
  s.add("env", to_string(cfg.env));
  s.add("algorithm", to_string(cfg.solver.algorithm));
  s.add("upsilon_mode", cfg.penalty.mode == UpsilonMode::exact ? "exact" : "sampled");
  s.add("seed", std::to_string(r.seed));
  s.add("lambda", r.lambda);
  s.add("n", std::to_string(r.n));
  s.add("N", std::to_string(cfg.num_rollout_domains));
  s.add("budget", r.budget);
  s.add("J_eval", r.j_eval);
  s.add("C_eval", r.c_eval);
  s.add("C_train_raw", r.c_train_raw);
  s.add("C_train_penalized", r.c_train_penalized);
  s.add("underestimation_gap", r.gap);
  s.add("penalty_sufficiency", r.sufficiency);
  s.add("mean_upsilon", r.upsilon.mean);
  s.add("max_upsilon", r.upsilon.max);
  s.add("infeasible", r.infeasible ? "true" : "false");
  s.add("status", to_string(r.status()));
  s.add("runtime_seconds", r.runtime);
  s.add("config_hash", config_hash);
  s.add("environment", environment_fingerprint());
  return s;
}

inline void write_charts(const fs::path& dir, const std::vector<MetricsRecord>& metrics, double budget,
                         const std::string& title) {
  const auto [objective, constraint] = metrics_charts(metrics, budget, title);
  write_text(dir / "objective.svg", render_line_chart(objective));
  write_text(dir / "constraint.svg", render_line_chart(constraint));
}

/// Config copy, metrics.csv, summary.csv, policy.txt and the two charts.
inline Summary write_run(const fs::path& dir, const ExperimentConfig& cfg, const RunOutcome& r) {
  fs::create_directories(dir);
  const std::string copy = emit_config(cfg);
  write_text(dir / "config.yaml", copy);
  std::ostringstream metrics;
  write_metrics_csv(metrics, r.metrics);
  write_text(dir / "metrics.csv", metrics.str());
  const Summary summary = run_summary(cfg, r, hex64(fnv1a(copy)));
  std::ostringstream s;
  write_summary_csv(s, summary);
  write_text(dir / "summary.csv", s.str());
  save_policy((dir / "policy.txt").string(), r.policy);
  write_charts(dir, r.metrics, r.budget, cfg.name);
  return summary;
}

// ---------------------------------------------------------------------------
// Multi-seed aggregation

struct Aggregate {
  double lambda = 0.0;
  int n = 0;
  int runs = 0;
  int infeasible = 0;
  double j_mean = 0.0, j_se = 0.0;
  double c_mean = 0.0, c_se = 0.0;
  double runtime_mean = 0.0;
  double upsilon_mean = 0.0;
  double budget = 0.0;
  std::string error;  // non-empty when the configuration failed

  [[nodiscard]] RunStatus status() const {
    if (!error.empty()) return RunStatus::failed;
    if (infeasible > 0) return RunStatus::infeasible;
    return c_mean <= budget + 1e-9 ? RunStatus::safe : RunStatus::unsafe;
  }
};

inline std::pair<double, double> mean_se(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()))};
}

inline Aggregate aggregate(const std::vector<RunOutcome>& runs) {
  Aggregate a;
  std::vector<double> j, c;
  for (const auto& r : runs) {
    j.push_back(r.j_eval);
    c.push_back(r.c_eval);
    a.infeasible += r.infeasible ? 1 : 0;
    a.runtime_mean += r.runtime;
    a.upsilon_mean += r.upsilon.mean;
  }
  a.runs = static_cast<int>(runs.size());
  if (!runs.empty()) {
    a.lambda = runs.front().lambda;
    a.n = runs.front().n;
    a.budget = runs.front().budget;
    a.runtime_mean /= a.runs;
    a.upsilon_mean /= a.runs;
  }
  std::tie(a.j_mean, a.j_se) = mean_se(j);
  std::tie(a.c_mean, a.c_se) = mean_se(c);
  return a;
}

using Progress = std::function<void(const std::string&)>;

inline Aggregate run_seeds(const ExperimentConfig& cfg, const RunOverrides& overrides, const Progress& progress = {},
                           std::vector<RunOutcome>* keep = nullptr) {
  std::vector<RunOutcome> runs;
  for (std::uint64_t seed : cfg.seeds) {
    runs.push_back(run_once(cfg, seed, overrides));
    if (progress) {
      std::ostringstream os;
      os << "  seed " << seed << ": lambda " << runs.back().lambda << ", n " << runs.back().n << ", J_eval "
         << runs.back().j_eval << ", C_eval " << runs.back().c_eval << " (" << to_string(runs.back().status()) << ", "
         << std::setprecision(3) << runs.back().runtime << " s)";
      progress(os.str());
    }
  }
  if (keep) *keep = runs;
  return aggregate(runs);
}

// ---------------------------------------------------------------------------
// Lambda calibration

struct CalibrationOutcome {
  double c_max = 0.0;
  Aggregate baseline;  // lambda = 0
  LambdaCalibration calibration;
  std::vector<double> grid;  // descending candidates
  std::vector<Aggregate> evaluated;
  double chosen = 0.0;
  std::string decision;
};

/// Per-step cost scale used by the heuristic: the configured c_max, else the
/// average per-step cost that exactly exhausts the budget.
inline double calibration_cost_scale(const ExperimentConfig& cfg, double budget) {
  return cfg.c_max.value_or(budget * (1.0 - cfg.gamma()));
}

/// lambda = 0 runs give the upsilon scale; the suggestion is then checked on the
/// eval side and moved by one grid point: down if it is safe and the next point
/// stays safe, up if it is unsafe.
inline CalibrationOutcome calibrate_and_refine(const ExperimentConfig& cfg, const Progress& progress = {},
                                               const Aggregate* baseline = nullptr) {
  CalibrationOutcome out;
  out.baseline = baseline ? *baseline : run_seeds(cfg, RunOverrides{0.0, std::nullopt, true}, progress);
  out.c_max = calibration_cost_scale(cfg, out.baseline.budget);
  out.calibration = calibrate_lambda({out.baseline.upsilon_mean, 0.0, 1}, out.c_max);
  if (out.calibration.no_signal) {
    out.chosen = 0.0;
    out.decision = "no upsilon signal; lambda = 0";
    return out;
  }
  out.grid = out.calibration.candidates(cfg.calibration_candidates);
  std::size_t mid = 0;
  for (std::size_t k = 1; k < out.grid.size(); ++k)
    if (std::abs(std::log(out.grid[k] / out.calibration.suggested)) <
        std::abs(std::log(out.grid[mid] / out.calibration.suggested)))
      mid = k;
  auto eval = [&](double lambda) {
    if (progress) progress("calibration: evaluating lambda " + format_number(lambda));
    out.evaluated.push_back(run_seeds(cfg, RunOverrides{lambda, std::nullopt, true}, progress));
    return out.evaluated.back();
  };
  const Aggregate at_suggested = eval(out.grid[mid]);
  if (at_suggested.status() == RunStatus::safe) {
    if (mid + 1 < out.grid.size()) {
      const Aggregate lower = eval(out.grid[mid + 1]);
      if (lower.status() == RunStatus::safe) {
        out.chosen = out.grid[mid + 1];
        out.decision = "suggested lambda safe; one grid point lower also safe, adopted";
      } else {
        out.chosen = out.grid[mid];
        out.decision = "suggested lambda safe; one grid point lower unsafe, kept suggestion";
      }
    } else {
      out.chosen = out.grid[mid];
      out.decision = "suggested lambda safe; no lower grid point";
    }
  } else {
    out.chosen = mid > 0 ? out.grid[mid - 1] : out.grid[mid];
    out.decision = mid > 0 ? "suggested lambda unsafe; moved one grid point up" : "suggested lambda unsafe; already at top";
    if (mid > 0) eval(out.chosen);
  }
  return out;
}

inline const Aggregate* find_evaluated(const CalibrationOutcome& c, double lambda) {
  for (const auto& a : c.evaluated)
    if (a.lambda == lambda) return &a;
  return nullptr;
}

inline std::string describe(const CalibrationOutcome& c) {
  std::ostringstream os;
  os << "calibration: c_max " << c.c_max << ", mean upsilon (lambda = 0) " << c.baseline.upsilon_mean;
  if (c.calibration.no_signal) return os.str() + ", no signal";
  os << ", suggested " << c.calibration.suggested << ", range [" << c.calibration.range.lo << ", "
     << c.calibration.range.hi << "], chosen " << c.chosen << " (" << c.decision << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Sweeps

inline const char* kEvalStandIn =
    "eval-range domains stand in for the real system; this is a sim-to-sim refinement, not a hardware trial";

inline std::string aggregate_csv_header() {
  return "lambda,n,runs,J_eval_mean,J_eval_se,C_eval_mean,C_eval_se,infeasible_runs,status,runtime_mean,"
         "mean_upsilon,error";
}

inline std::string aggregate_csv_row(const Aggregate& a) {
  std::ostringstream os;
  os << format_number(a.lambda) << ',' << a.n << ',' << a.runs << ',' << format_number(a.j_mean) << ','
     << format_number(a.j_se) << ',' << format_number(a.c_mean) << ',' << format_number(a.c_se) << ',' << a.infeasible
     << ',' << to_string(a.status()) << ',' << format_number(a.runtime_mean) << ',' << format_number(a.upsilon_mean)
     << ',' << csv_escape(a.error);
  return os.str();
}

struct LambdaSweep {
  std::vector<Aggregate> rows;  // largest lambda first
  std::optional<CalibrationOutcome> calibration;
};

inline LambdaSweep sweep_lambda(const ExperimentConfig& cfg, std::vector<double> lambdas, const fs::path& dir,
                                const Progress& progress = {}) {
  if (lambdas.empty()) throw ConfigError("sweep-lambda needs at least one lambda (sweep.lambdas)", 0, 0);
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  fs::create_directories(dir);
  write_text(dir / "config.yaml", emit_config(cfg));
  LambdaSweep sweep;
  for (double lambda : lambdas) {
    if (progress) progress("lambda " + format_number(lambda));
    try {
      std::vector<RunOutcome> runs;
      sweep.rows.push_back(run_seeds(cfg, RunOverrides{lambda, std::nullopt, true}, progress, &runs));
      if (lambdas.size() == 1) write_run(dir / "run", cfg, runs.front());
    } catch (const std::exception& err) {
      Aggregate failed;
      failed.lambda = lambda;
      failed.n = cfg.penalty.ensemble_size;
      failed.error = err.what();
      sweep.rows.push_back(failed);
      if (progress) progress(std::string("  failed: ") + err.what());
    }
  }
  const Aggregate* zero = nullptr;
  for (const auto& a : sweep.rows)
    if (a.lambda == 0.0 && a.error.empty()) zero = &a;
  if (zero && zero->upsilon_mean > 0.0) {
    CalibrationOutcome c;
    c.baseline = *zero;
    c.c_max = calibration_cost_scale(cfg, zero->budget);
    c.calibration = calibrate_lambda({zero->upsilon_mean, 0.0, 1}, c.c_max);
    c.grid = c.calibration.candidates(cfg.calibration_candidates);
    c.chosen = c.calibration.suggested;
    c.decision = "heuristic suggestion only";
    sweep.calibration = c;
  }

  std::ostringstream csv;
  csv << aggregate_csv_header() << '\n';
  for (const auto& a : sweep.rows) csv << aggregate_csv_row(a) << '\n';
  write_text(dir / "sweep_lambda.csv", csv.str());

  std::ostringstream report;
  report << "# lambda sweep: " << cfg.name << "\n# " << kEvalStandIn << "\n";
  if (sweep.calibration) report << "# " << describe(*sweep.calibration) << "\n";
  report << "# rows: mean and standard error over " << cfg.seeds.size() << " seed(s), largest lambda first\n";
  report << csv.str();
  write_text(dir / "sweep_lambda_report.txt", report.str());

  LineChart chart{cfg.name + ": eval constraint vs lambda", "lambda", "value", {}, std::nullopt, false};
  Series c{"C eval", "#d62728", {}, {}, {}}, j{"J eval", "#1f77b4", {}, {}, {}};
  for (auto it = sweep.rows.rbegin(); it != sweep.rows.rend(); ++it) {
    if (!it->error.empty()) continue;
    c.x.push_back(it->lambda), c.y.push_back(it->c_mean), c.err.push_back(it->c_se);
    j.x.push_back(it->lambda), j.y.push_back(it->j_mean), j.err.push_back(it->j_se);
  }
  chart.series = {c, j};
  if (!sweep.rows.empty()) chart.budget = sweep.rows.front().budget;
  write_text(dir / "sweep_lambda.svg", render_line_chart(chart));
  return sweep;
}

struct NSweepRow {
  int n = 0;
  bool valid = true;
  Aggregate stats;
  double relative_runtime = 0.0;
  std::string note;
};

struct NSweep {
  double lambda = 0.0;
  Aggregate baseline;  // lambda = 0, no sibling probes
  std::vector<NSweepRow> rows;
  std::optional<CalibrationOutcome> calibration;
  bool timing_warning = false;
};

inline NSweep sweep_n(const ExperimentConfig& cfg, const fs::path& dir, const Progress& progress = {}) {
  if (cfg.penalty.mode != UpsilonMode::sampled) throw ConfigError("sweep-n needs penalty.mode: sampled", 0, 0);
  fs::create_directories(dir);
  write_text(dir / "config.yaml", emit_config(cfg));
  NSweep out;
  if (progress) progress("baseline: lambda 0 without sibling probes");
  out.baseline = run_seeds(cfg, RunOverrides{0.0, std::nullopt, false}, progress);
  out.timing_warning = out.baseline.runtime_mean < 1.0;
  if (cfg.calibrate) {
    out.calibration = calibrate_and_refine(cfg, progress);
    out.lambda = out.calibration->chosen;
  } else {
    out.lambda = cfg.penalty.lambda;
  }
  for (int n : cfg.sweep_n) {
    NSweepRow row;
    row.n = n;
    if (n < 2) {
      row.valid = false;
      row.note = "invalid: sampled upsilon needs n >= 2";
      row.stats.n = n;
      row.stats.lambda = out.lambda;
      row.stats.error = row.note;
      out.rows.push_back(row);
      continue;
    }
    if (progress) progress("n " + std::to_string(n));
    try {
      row.stats = run_seeds(cfg, RunOverrides{out.lambda, n, true}, progress);
      row.relative_runtime = row.stats.runtime_mean / out.baseline.runtime_mean;
      if (out.timing_warning) row.note = "warning: baseline runtime under 1 s, timing is noise-dominated";
    } catch (const std::exception& err) {
      row.valid = false;
      row.stats.n = n;
      row.stats.lambda = out.lambda;
      row.stats.error = err.what();
      row.note = err.what();
    }
    out.rows.push_back(row);
  }

  std::ostringstream csv;
  csv << "n,lambda,valid,J_eval_mean,J_eval_se,C_eval_mean,C_eval_se,status,runtime_mean,relative_runtime,note\n";
  for (const auto& r : out.rows)
    csv << r.n << ',' << format_number(out.lambda) << ',' << (r.valid ? "true" : "false") << ','
        << format_number(r.valid ? r.stats.j_mean : std::nan("")) << ',' << format_number(r.valid ? r.stats.j_se : std::nan(""))
        << ',' << format_number(r.valid ? r.stats.c_mean : std::nan("")) << ','
        << format_number(r.valid ? r.stats.c_se : std::nan("")) << ',' << (r.valid ? to_string(r.stats.status()) : "INVALID")
        << ',' << format_number(r.valid ? r.stats.runtime_mean : std::nan("")) << ','
        << format_number(r.valid ? r.relative_runtime : std::nan("")) << ',' << csv_escape(r.note) << '\n';
  write_text(dir / "sweep_n.csv", csv.str());

  std::ostringstream report;
  report << "# ensemble-size sweep: " << cfg.name << "\n# lambda " << out.lambda << "; baseline lambda 0 without probes: J_eval "
         << out.baseline.j_mean << ", C_eval " << out.baseline.c_mean << ", runtime " << out.baseline.runtime_mean << " s\n";
  if (out.calibration) report << "# " << describe(*out.calibration) << "\n";
  if (out.timing_warning) report << "# warning: baseline runtime under 1 s; relative runtimes are noise-dominated\n";
  report << csv.str();
  write_text(dir / "sweep_n_report.txt", report.str());

  LineChart chart{cfg.name + ": eval constraint vs n", "n", "C eval", {}, out.baseline.budget, true};
  Series c{"C eval", "#d62728", {}, {}, {}};
  for (const auto& r : out.rows)
    if (r.valid) c.x.push_back(r.n), c.y.push_back(r.stats.c_mean), c.err.push_back(r.stats.c_se);
  chart.series = {c};
  write_text(dir / "sweep_n.svg", render_line_chart(chart));
  LineChart runtime{cfg.name + ": runtime relative to lambda 0", "n", "relative runtime", {}, std::nullopt, true};
  Series t{"runtime", "#1f77b4", {}, {}, {}};
  for (const auto& r : out.rows)
    if (r.valid) t.x.push_back(r.n), t.y.push_back(r.relative_runtime);
  runtime.series = {t};
  write_text(dir / "sweep_n_runtime.svg", render_line_chart(runtime));
  return out;
}

// ---------------------------------------------------------------------------
// Worst-case chain walkthrough

struct ChainRow {
  double lambda = 0.0;
  double greedy_mass = 0.0;  // pi(a1 | s0)
  double penalized_constraint = 0.0;
  double sim_constraint = 0.0;
  double real_constraint = 0.0;
  bool infeasible = false;
  RunStatus status = RunStatus::safe;
};

struct ChainReport {
  double budget = 0.0;
  double dr_greedy_mass = 0.0;
  double dr_sim_constraint = 0.0;
  double dr_real_constraint = 0.0;
  double telescoping_residual = 0.0;
  double real_minus_sim = 0.0;
  std::vector<ChainRow> rows;
};

inline ChainReport example1(const ExperimentConfig& cfg, const fs::path& dir) {
  if (cfg.env != EnvKind::chain) throw ConfigError("example1 needs env.type: chain", 0, 0);
  const envs::Example1 ex = envs::build_example1(cfg.chain);
  ChainReport out;
  out.budget = ex.budget;
  TabularCMDP sim = ex.sim_family.nominal();
  sim.budget = ex.budget;
  const CmdpLpResult dr = solve_cmdp_lp(sim);
  if (!dr.feasible()) throw std::runtime_error("example1: the simulated chain LP is not feasible");
  out.dr_greedy_mass = dr.policy.probs(envs::kChainStart, envs::kChainGreedyAction);
  out.dr_sim_constraint = evaluate_policy(sim, dr.policy).constraint;
  out.dr_real_constraint = evaluate_policy(ex.real_env, dr.policy).constraint;
  out.real_minus_sim = out.dr_real_constraint - out.dr_sim_constraint;
  out.telescoping_residual = telescoping_residual(sim, ex.real_env, dr.policy);

  std::vector<double> lambdas = cfg.sweep_lambdas.empty() ? std::vector<double>{0, 2, 4, 8, 9, 12} : cfg.sweep_lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  ExperimentConfig exact = cfg;
  exact.penalty.mode = UpsilonMode::exact;
  exact.solver.algorithm = SolverAlgorithm::lp;
  exact.num_rollout_domains = 1;
  for (double lambda : lambdas) {
    const RunOutcome r = run_once(exact, cfg.seeds.front(), RunOverrides{lambda, std::nullopt, true});
    ChainRow row;
    row.lambda = lambda;
    const TabularPolicy pi = tabular_from_file(r.policy);
    row.greedy_mass = pi.probs(envs::kChainStart, envs::kChainGreedyAction);
    row.penalized_constraint = r.c_train_penalized;
    row.sim_constraint = r.c_train_raw;
    row.real_constraint = r.c_eval;
    row.infeasible = r.infeasible;
    row.status = r.status();
    out.rows.push_back(row);
  }

  fs::create_directories(dir);
  write_text(dir / "config.yaml", emit_config(cfg));
  std::ostringstream csv;
  csv << "lambda,greedy_mass,C_penalized,C_sim,C_real,budget,status\n";
  for (const auto& r : out.rows)
    csv << format_number(r.lambda) << ',' << format_number(r.greedy_mass) << ',' << format_number(r.penalized_constraint)
        << ',' << format_number(r.sim_constraint) << ',' << format_number(r.real_constraint) << ','
        << format_number(out.budget) << ',' << to_string(r.status) << '\n';
  write_text(dir / "example1.csv", csv.str());
  Summary s;
  s.add("budget", out.budget);
  s.add("dr_greedy_mass", out.dr_greedy_mass);
  s.add("dr_C_sim", out.dr_sim_constraint);
  s.add("dr_C_real", out.dr_real_constraint);
  s.add("dr_violation_ratio", out.dr_real_constraint / out.budget);
  s.add("real_minus_sim", out.real_minus_sim);
  s.add("telescoping_residual", out.telescoping_residual);
  std::ostringstream sum;
  write_summary_csv(sum, s);
  write_text(dir / "summary.csv", sum.str());

  LineChart chart{"worst-case chain: cost vs lambda", "lambda", "discounted cost", {}, out.budget, false};
  Series real{"C real", "#d62728", {}, {}, {}}, pen{"C penalized (sim)", "#2ca02c", {}, {}, {}};
  for (const auto& r : out.rows) {
    real.x.push_back(r.lambda), real.y.push_back(r.real_constraint);
    pen.x.push_back(r.lambda), pen.y.push_back(r.infeasible ? std::nan("") : r.penalized_constraint);
  }
  chart.series = {real, pen};
  write_text(dir / "example1.svg", render_line_chart(chart));
  return out;
}

// ---------------------------------------------------------------------------
// Cart-pole heatmap

inline envs::HeatmapGrid heatmap(const ExperimentConfig& cfg, const fs::path& dir) {
  if (cfg.env != EnvKind::cartpole) throw ConfigError("heatmap needs env.type: cartpole", 0, 0);
  const auto family = detail::cartpole_family_of(cfg);
  const envs::HeatmapGrid grid = envs::upsilon_heatmap(family, cfg.heatmap.angle_cells, cfg.heatmap.velocity_cells,
                                                       cfg.heatmap.max_velocity, cfg.heatmap.siblings, cfg.seeds.front());
  fs::create_directories(dir);
  write_text(dir / "config.yaml", emit_config(cfg));
  std::ostringstream csv;
  envs::write_csv(csv, grid);
  write_text(dir / "heatmap.csv", csv.str());
  write_text(dir / "heatmap.svg", render_heatmap(grid, "cart-pole upsilon"));
  Summary s;
  for (std::size_t a = 0; a < grid.actions.size(); ++a) {
    const std::string tag = "a=" + format_number(grid.actions[a]);
    s.add("mean_upsilon_" + tag, grid.mean_for_action(a));
    s.add("upsilon_near_top_" + tag, grid.mean_near_angle(a, std::numbers::pi));
    s.add("upsilon_near_bottom_" + tag, grid.mean_near_angle(a, 0.0));
  }
  std::ostringstream sum;
  write_summary_csv(sum, s);
  write_text(dir / "summary.csv", sum.str());
  return grid;
}

}  // namespace spidr::harness
