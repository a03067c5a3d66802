// Command-line front end: run, sweep-lambda, sweep-n, example1, heatmap,
// verify, report. Exit status 0 on success, 1 on configuration errors,
// 2 when a verification suite fails.

#include "spidr/harness/experiments.hpp"
#include "spidr/harness/verify.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace spidr;
using namespace spidr::harness;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitVerify = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  bool inject_bad_row = false;
};

const char* kDefaultChainConfig = R"(name: example1
env: {type: chain, epsilon: 0.25, gamma: 0.9}
solver: {algorithm: lp}
penalty: {lambda: 0, mode: exact}
seeds: [0]
output: out/example1
sweep: {lambdas: [0, 2, 4, 8, 9, 12]}
)";

ExperimentConfig load(const Options& o, const char* fallback = nullptr) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  else if (fallback != nullptr) cfg = parse_config_text(fallback);
  else throw ConfigError("--config is required for this command", 0, 0);
  std::optional<UpsilonMode> mode;
  if (o.mode) mode = *o.mode == "exact" ? UpsilonMode::exact : UpsilonMode::sampled;
  apply_overrides(cfg, o.seed, mode, o.out);
  return cfg;
}

void progress(const std::string& line) { std::cerr << line << '\n'; }

void print_summary(const Summary& s) {
  for (const auto& [key, value] : s.rows) std::cout << "  " << key << ": " << value << '\n';
}

int cmd_run(const Options& o) {
  ExperimentConfig cfg = load(o);
  RunOverrides overrides;
  if (cfg.calibrate) {
    const CalibrationOutcome c = calibrate_and_refine(cfg, progress);
    std::cout << describe(c) << '\n';
    overrides.lambda = c.chosen;
  }
  const RunOutcome r = run_once(cfg, cfg.seeds.front(), overrides);
  const Summary s = write_run(cfg.output, cfg, r);
  std::cout << "run " << cfg.name << " -> " << cfg.output << '\n';
  print_summary(s);
  return kExitOk;
}

int cmd_sweep_lambda(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const LambdaSweep sweep = sweep_lambda(cfg, cfg.sweep_lambdas, cfg.output, progress);
  std::cout << aggregate_csv_header() << '\n';
  for (const auto& a : sweep.rows) std::cout << aggregate_csv_row(a) << '\n';
  if (sweep.calibration) std::cout << describe(*sweep.calibration) << '\n';
  std::cout << "# " << kEvalStandIn << "\nwritten to " << cfg.output << '\n';
  return kExitOk;
}

int cmd_sweep_n(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const NSweep sweep = sweep_n(cfg, cfg.output, progress);
  std::cout << read_text(fs::path(cfg.output) / "sweep_n_report.txt");
  (void)sweep;
  return kExitOk;
}

int cmd_example1(const Options& o) {
  const ExperimentConfig cfg = load(o, kDefaultChainConfig);
  const ChainReport r = example1(cfg, cfg.output);
  std::cout << "plain randomization: pi(a1|s0) " << r.dr_greedy_mass << ", simulated cost " << r.dr_sim_constraint
            << ", real cost " << r.dr_real_constraint << " vs budget " << r.budget << " (ratio "
            << r.dr_real_constraint / r.budget << "), telescoping residual " << r.telescoping_residual << '\n';
  for (const auto& row : r.rows)
    std::cout << "lambda " << row.lambda << ": pi(a1|s0) " << row.greedy_mass << ", real cost " << row.real_constraint
              << ", " << to_string(row.status) << '\n';
  std::cout << "written to " << cfg.output << '\n';
  return kExitOk;
}

int cmd_heatmap(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const envs::HeatmapGrid grid = heatmap(cfg, cfg.output);
  for (std::size_t a = 0; a < grid.actions.size(); ++a)
    std::cout << "action " << grid.actions[a] << ": mean upsilon " << grid.mean_for_action(a) << ", near top "
              << grid.mean_near_angle(a, std::numbers::pi) << ", near bottom " << grid.mean_near_angle(a, 0.0) << '\n';
  std::cout << "written to " << cfg.output << '\n';
  return kExitOk;
}

int cmd_verify(const Options& o) {
  bool ok = true;
  for (const SuiteResult& r : run_verification({o.inject_bad_row})) {
    std::cout << r << '\n';
    ok = ok && r.passed();
  }
  std::cout << (ok ? "all suites passed" : "verification FAILED") << '\n';
  return ok ? kExitOk : kExitVerify;
}

int cmd_report(const Options& o) {
  if (!o.out) throw ConfigError("report needs --out pointing at a run directory", 0, 0);
  const fs::path dir = *o.out;
  std::istringstream summary_text(read_text(dir / "summary.csv"));
  const Summary s = read_summary_csv(summary_text);
  std::istringstream metrics_text(read_text(dir / "metrics.csv"));
  const auto metrics = read_metrics_csv(metrics_text);
  const double budget = std::stod(s.get("budget"));
  write_charts(dir, metrics, budget, s.get("name"));
  std::cout << "report for " << dir.string() << " (" << metrics.size() << " metric rows)\n";
  print_summary(s);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spidr: pessimistic domain randomization for tabular and continuous CMDPs"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool config) {
    if (config) sub->add_option("--config", o.config, "experiment YAML file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "single seed replacing the configured list");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--mode", o.mode, "upsilon mode")->check(CLI::IsMember({"exact", "sampled"}));
  };
  CLI::App* run = app.add_subcommand("run", "train once and write metrics, summary, policy and charts");
  CLI::App* sweep_l = app.add_subcommand("sweep-lambda", "train over the configured lambda list");
  CLI::App* sweep_n = app.add_subcommand("sweep-n", "train over the configured sibling counts");
  CLI::App* ex1 = app.add_subcommand("example1", "worst-case chain: plain randomization vs exact-upsilon penalty");
  CLI::App* heat = app.add_subcommand("heatmap", "cart-pole upsilon over angle, angular velocity and action");
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
  CLI::App* report = app.add_subcommand("report", "re-render charts from an existing run directory");
  for (CLI::App* sub : {run, sweep_l, sweep_n, ex1, heat}) common(sub, true);
  verify->add_flag("--inject-bad-row", o.inject_bad_row, "negative control: break one kernel row");
  report->add_option("--out", o.out, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (*run) return cmd_run(o);
    if (*sweep_l) return cmd_sweep_lambda(o);
    if (*sweep_n) return cmd_sweep_n(o);
    if (*ex1) return cmd_example1(o);
    if (*heat) return cmd_heatmap(o);
    if (*verify) return cmd_verify(o);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
