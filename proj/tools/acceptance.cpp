// Acceptance run: one PASS/FAIL line per criterion, artifacts under --out.
// Exit status 0 when every criterion passes, 2 otherwise.

#include "spidr/harness/experiments.hpp"
#include "spidr/harness/verify.hpp"

#include <CLI11.hpp>

#include <iostream>

#ifndef SPIDR_CONFIG_DIR
#define SPIDR_CONFIG_DIR "configs"
#endif

namespace {

using namespace spidr;
using namespace spidr::harness;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Tally {
  int passed = 0;
  int failed = 0;

  void line(int id, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
    (ok ? passed : failed) += 1;
  }
};

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

void suite_line(Tally& t, int id, const SuiteResult& r, double time_limit) {
  std::ostringstream os;
  os << r.name << ": " << r.cases - r.failures << "/" << r.cases << " cases, " << r.measure << " " << r.worst
     << " (tolerance " << r.tolerance << "), " << fmt(r.seconds) << " s";
  if (!r.note.empty()) os << "; " << r.note;
  const bool in_time = time_limit <= 0.0 || r.seconds < time_limit;
  if (!in_time) os << "; over the " << time_limit << " s limit";
  t.line(id, r.passed() && in_time, os.str());
}

void chain_dr_failure(Tally& t, const ExperimentConfig& cfg, const fs::path& out) {
  const auto start = Clock::now();
  const ChainReport r = example1(cfg, out / "example1");
  const double elapsed = seconds_since(start);
  const double ratio = r.dr_real_constraint / r.budget;
  const bool ok = r.dr_greedy_mass >= 0.99 && std::abs(r.dr_real_constraint - 9.0) <= 1e-6 &&
                  std::abs(ratio - 4.0 / 3.0) <= 1e-9 && elapsed < 1.0;
  t.line(1, ok,
         "pi(a1|s0) " + fmt(r.dr_greedy_mass) + ", real cost " + fmt(r.dr_real_constraint) + " (target 9 +- 1e-6), ratio " +
             fmt(ratio) + ", " + fmt(elapsed) + " s");
}

void chain_penalty_success(Tally& t, ExperimentConfig cfg) {
  cfg.penalty.mode = UpsilonMode::exact;
  cfg.solver.algorithm = SolverAlgorithm::lp;
  cfg.num_rollout_domains = 1;
  bool ok = true;
  std::ostringstream detail;
  for (double lambda : {2.0, 4.0, 8.0, 12.0}) {
    const auto start = Clock::now();
    const RunOutcome r = run_once(cfg, cfg.seeds.front(), RunOverrides{lambda, std::nullopt, true});
    const double elapsed = seconds_since(start);
    const double cautious = tabular_from_file(r.policy).probs(envs::kChainStart, envs::kChainCautiousAction);
    bool row_ok = elapsed < 5.0;
    if (lambda == 12.0) row_ok = row_ok && r.infeasible;
    else row_ok = row_ok && !r.infeasible && cautious >= 0.99 && r.c_eval <= 6.75 + 1e-6;
    ok = ok && row_ok;
    detail << "lambda " << lambda << ": pi(a2|s0) " << fmt(cautious) << ", real cost " << fmt(r.c_eval)
           << (r.infeasible ? ", infeasible" : "") << (row_ok ? "" : " [fails]") << "; ";
  }
  detail << "optimum of the penalized chain is interior for lambda < 9";
  t.line(2, ok, detail.str());
}

void pointgoal_properties(Tally& t, ExperimentConfig cfg, const fs::path& out) {
  cfg.sweep_n = {8, 16, 32, 64, 128};
  cfg.calibrate = true;
  const auto start = Clock::now();
  const NSweep sweep = sweep_n(cfg, out / "pointgoal_n", [](const std::string& s) { std::cerr << s << '\n'; });
  const double elapsed = seconds_since(start);
  const CalibrationOutcome& cal = *sweep.calibration;
  const Aggregate& zero = cal.baseline;
  const Aggregate* chosen = find_evaluated(cal, cal.chosen);
  const double budget = zero.budget;
  {
    bool ok = zero.c_mean > budget && chosen != nullptr && chosen->c_mean <= budget &&
              chosen->j_mean >= 0.6 * zero.j_mean;
    std::ostringstream d;
    d << "lambda 0: C_eval " << fmt(zero.c_mean) << " +- " << fmt(zero.c_se) << ", J_eval " << fmt(zero.j_mean)
      << "; calibrated lambda " << fmt(cal.chosen);
    if (chosen) d << ": C_eval " << fmt(chosen->c_mean) << " +- " << fmt(chosen->c_se) << ", J_eval " << fmt(chosen->j_mean)
                  << " (" << fmt(100.0 * chosen->j_mean / zero.j_mean) << "% of lambda 0)";
    d << "; budget " << fmt(budget) << "; total " << fmt(elapsed) << " s";
    ok = ok && elapsed < 15 * 60;
    t.line(9, ok, d.str());
  }
  {
    bool ok = true;
    double ratio32 = std::nan("");
    std::ostringstream d;
    for (const auto& row : sweep.rows) {
      ok = ok && row.valid && row.stats.c_mean <= budget;
      d << "n " << row.n << ": C_eval " << fmt(row.stats.c_mean) << "; ";
      if (row.n == 32) ratio32 = row.relative_runtime;
    }
    ok = ok && ratio32 < 2.0;
    d << "runtime at n 32 is " << fmt(ratio32) << "x the lambda 0 baseline (" << fmt(sweep.baseline.runtime_mean) << " s)";
    t.line(10, ok, d.str());
  }
}

void heatmap_property(Tally& t, const ExperimentConfig& cfg, const fs::path& out) {
  const envs::HeatmapGrid grid = heatmap(cfg, out / "heatmap");
  bool ok = true;
  std::ostringstream d;
  d << "mean upsilon by action";
  for (std::size_t a = 0; a < grid.actions.size(); ++a) {
    d << ' ' << fmt(grid.mean_for_action(a));
    if (a > 0) ok = ok && grid.mean_for_action(a) >= grid.mean_for_action(a - 1);
  }
  const std::size_t last = grid.actions.size() - 1;
  const double top = grid.mean_near_angle(last, std::numbers::pi);
  const double bottom = grid.mean_near_angle(last, 0.0);
  ok = ok && top > bottom;
  d << "; at a = " << grid.actions[last] << " near top " << fmt(top) << " vs near bottom " << fmt(bottom);
  t.line(11, ok, d.str());
}

void determinism(Tally& t, const std::vector<ExperimentConfig>& configs) {
  bool ok = true;
  std::ostringstream d;
  for (const auto& cfg : configs) {
    auto csv = [&] {
      std::ostringstream os;
      write_metrics_csv(os, run_once(cfg, cfg.seeds.front()).metrics);
      return os.str();
    };
    const std::string a = csv();
    const std::string b = csv();
    ok = ok && a == b && !a.empty();
    d << cfg.name << " (" << to_string(cfg.solver.algorithm) << "): " << (a == b ? "identical" : "differs") << ", "
      << a.size() << " bytes; ";
  }
  d << "exact mode, repeated with the same config and seed";
  t.line(12, ok, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spidr acceptance run"};
  std::string out = "acceptance_out";
  std::string configs = SPIDR_CONFIG_DIR;
  app.add_option("--out", out, "artifact directory");
  app.add_option("--configs", configs, "directory holding the preset configs");
  CLI11_PARSE(app, argc, argv);

  Tally t;
  try {
    const fs::path dir(configs);
    const fs::path root(out);
    fs::create_directories(root);
    const ExperimentConfig chain = load_config((dir / "example1.yaml").string());
    const ExperimentConfig chain_crpo = load_config((dir / "example1_crpo.yaml").string());
    chain_dr_failure(t, chain, root);
    chain_penalty_success(t, chain);
    suite_line(t, 3, suite_telescoping(50), 10.0);
    suite_line(t, 4, suite_transport_bound(50, 0.05), 60.0);
    suite_line(t, 5, suite_oracle(10, 100), 0.0);
    suite_line(t, 6, suite_wasserstein(100, 100), 0.0);
    suite_line(t, 7, suite_estimator(10, 10000, 0.02), 0.0);
    suite_line(t, 8, suite_gradient(20, 1e-5), 0.0);
    pointgoal_properties(t, load_config((dir / "pointgoal.yaml").string()), root);
    heatmap_property(t, load_config((dir / "cartpole.yaml").string()), root);
    determinism(t, {chain, chain_crpo});
  } catch (const std::exception& err) {
    std::cout << "FAIL acceptance aborted: " << err.what() << std::endl;
    return 2;
  }
  std::cout << t.passed << " passed, " << t.failed << " failed" << std::endl;
  return t.failed == 0 ? 0 : 2;
}
