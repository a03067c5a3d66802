#pragma once

// YAML experiment configuration. Every key is checked against the schema and
// every error carries the line and column of the offending node.

#include "spidr/cmdp.hpp"
#include "spidr/envs/cartpole.hpp"
#include "spidr/envs/chain.hpp"
#include "spidr/envs/point_goal.hpp"
#include "spidr/envs/random_pair.hpp"
#include "spidr/pessimize.hpp"
#include "spidr/randomize.hpp"
#include "spidr/solve/updates.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace spidr::harness {

struct ConfigError : std::runtime_error {
  int line = 0;  // 1-based; 0 when unknown
  int column = 0;
  ConfigError(const std::string& what, int line_, int column_)
      : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ", column " + std::to_string(column_) + ": " + what
                                     : what),
        line(line_),
        column(column_) {}
};

enum class EnvKind { chain, random_pair, tabular, pointgoal, cartpole };

inline const char* to_string(EnvKind k) {
  switch (k) {
    case EnvKind::chain: return "chain";
    case EnvKind::random_pair: return "random_pair";
    case EnvKind::tabular: return "tabular";
    case EnvKind::pointgoal: return "pointgoal";
    case EnvKind::cartpole: return "cartpole";
  }
  return "unknown";
}

inline bool is_tabular(EnvKind k) { return k == EnvKind::chain || k == EnvKind::random_pair || k == EnvKind::tabular; }

struct HeatmapSettings {
  int angle_cells = 25;
  int velocity_cells = 11;
  double max_velocity = 8.0;
  int siblings = 16;
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvKind env = EnvKind::chain;
  envs::ChainExampleSpec chain;
  envs::RandomCmdpSpec random_pair;
  std::vector<TabularCMDP> tabular_domains;  // explicit tabular family
  std::vector<TabularCMDP> tabular_eval;
  envs::PointGoalSpec pointgoal;
  envs::CartpoleSpec cartpole;
  std::vector<DomainParamSpec> domains;

  SolverConfig solver;
  PenaltyConfig penalty;
  bool calibrate = false;  // penalty.lambda: calibrate
  int num_rollout_domains = 1;
  std::optional<double> budget;
  double discount = 0.99;  // continuous envs
  std::optional<double> c_max;
  int calibration_candidates = 5;

  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string output = "out";
  std::vector<double> sweep_lambdas;
  std::vector<int> sweep_n{1, 2, 4, 8, 16, 32, 64, 128};
  HeatmapSettings heatmap;

  YAML::Node tree;  // effective configuration, re-emitted as the config copy

  [[nodiscard]] double effective_budget() const {
    if (budget) return *budget;
    if (env == EnvKind::chain) return chain.budget();
    throw ConfigError("budget is required for env '" + std::string(to_string(env)) + "'", 0, 0);
  }

  [[nodiscard]] double gamma() const {
    switch (env) {
      case EnvKind::chain: return chain.gamma;
      case EnvKind::random_pair: return random_pair.gamma;
      case EnvKind::tabular: return tabular_domains.front().discount;
      default: return discount;
    }
  }
};

namespace detail {

[[noreturn]] inline void fail_at(const YAML::Node& node, const std::string& what) {
  if (!node) throw ConfigError(what, 0, 0);
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) throw ConfigError(what, 0, 0);
  throw ConfigError(what, mark.line + 1, mark.column + 1);
}

inline void require_map(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) fail_at(node, "'" + where + "' must be a mapping");
}

inline void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  require_map(node, where);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) fail_at(kv.first, "unknown key '" + key + "' in '" + where + "'");
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) fail_at(node, "'" + what + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(node, "'" + what + "' has an invalid value '" + node.Scalar() + "'");
  }
}

template <class T>
void read(const YAML::Node& parent, const std::string& key, T& out, const std::string& where) {
  if (const YAML::Node node = parent[key]) out = scalar<T>(node, where + "." + key);
}

inline std::vector<double> number_list(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail_at(node, "'" + what + "' must be a list");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(scalar<double>(item, what));
  return out;
}

inline Interval interval(const YAML::Node& node, const std::string& what) {
  const auto v = number_list(node, what);
  if (v.size() != 2) fail_at(node, "'" + what + "' must be a two-element [lo, hi] list");
  return {v[0], v[1]};
}

inline Matrix matrix(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() == 0) fail_at(node, "'" + what + "' must be a nonempty list of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : node) rows.push_back(number_list(row, what));
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) fail_at(node[r], "'" + what + "' rows have different lengths");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

inline YAML::Node matrix_node(const Matrix& m) {
  YAML::Node node(YAML::NodeType::Sequence);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    YAML::Node row(YAML::NodeType::Sequence);
    row.SetStyle(YAML::EmitterStyle::Flow);
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    node.push_back(row);
  }
  return node;
}

}  // namespace detail

/// Tabular CMDP tree: states, actions, discount, budget, r_max, c_max, initial,
/// embedding (one row per state), reward/cost (S x A), transition ((S*A) x S).
inline TabularCMDP cmdp_from_yaml(const YAML::Node& node, const std::string& where) {
  detail::check_keys(node, where, {"states", "actions", "discount", "budget", "r_max", "c_max", "initial", "embedding",
                                   "reward", "cost", "transition"});
  for (const char* key : {"states", "actions", "initial", "embedding", "reward", "cost", "transition"})
    if (!node[key]) detail::fail_at(node, "'" + where + "' is missing '" + key + "'");
  const int states = detail::scalar<int>(node["states"], where + ".states");
  const int actions = detail::scalar<int>(node["actions"], where + ".actions");
  if (states < 1 || actions < 1) detail::fail_at(node, "'" + where + "' needs positive state and action counts");
  const Matrix embedding = detail::matrix(node["embedding"], where + ".embedding");
  TabularCMDP m(states, actions, static_cast<int>(embedding.cols()));
  detail::read(node, "discount", m.discount, where);
  detail::read(node, "budget", m.budget, where);
  detail::read(node, "r_max", m.r_max, where);
  detail::read(node, "c_max", m.c_max, where);
  const auto initial = detail::number_list(node["initial"], where + ".initial");
  if (static_cast<int>(initial.size()) != states) detail::fail_at(node["initial"], "'" + where + ".initial' needs one entry per state");
  m.initial = Eigen::Map<const Vector>(initial.data(), states);
  auto shaped = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    const Matrix v = detail::matrix(node[key], where + "." + key);
    if (v.rows() != rows || v.cols() != cols)
      detail::fail_at(node[key], "'" + where + "." + key + "' must be " + std::to_string(rows) + " x " + std::to_string(cols));
    return v;
  };
  m.embedding = shaped("embedding", states, embedding.cols());
  m.reward = shaped("reward", states, actions);
  m.cost = shaped("cost", states, actions);
  m.transition = shaped("transition", static_cast<Eigen::Index>(states) * actions, states);
  try {
    m.validate();
  } catch (const std::invalid_argument& err) {
    detail::fail_at(node, "'" + where + "': " + err.what());
  }
  return m;
}

inline YAML::Node cmdp_to_yaml(const TabularCMDP& m) {
  YAML::Node node;
  node["states"] = m.num_states;
  node["actions"] = m.num_actions;
  node["discount"] = m.discount;
  node["budget"] = m.budget;
  node["r_max"] = m.r_max;
  node["c_max"] = m.c_max;
  YAML::Node initial(YAML::NodeType::Sequence);
  initial.SetStyle(YAML::EmitterStyle::Flow);
  for (Eigen::Index s = 0; s < m.initial.size(); ++s) initial.push_back(m.initial(s));
  node["initial"] = initial;
  node["embedding"] = detail::matrix_node(m.embedding);
  node["reward"] = detail::matrix_node(m.reward);
  node["cost"] = detail::matrix_node(m.cost);
  node["transition"] = detail::matrix_node(m.transition);
  return node;
}

namespace detail {

inline void parse_env(const YAML::Node& node, ExperimentConfig& cfg) {
  require_map(node, "env");
  if (!node["type"]) fail_at(node, "'env.type' is required");
  const auto type = scalar<std::string>(node["type"], "env.type");
  if (type == "chain") {
    check_keys(node, "env", {"type", "epsilon", "gamma"});
    cfg.env = EnvKind::chain;
    read(node, "epsilon", cfg.chain.epsilon, "env");
    read(node, "gamma", cfg.chain.gamma, "env");
    try {
      cfg.chain.validate();
    } catch (const std::invalid_argument& err) {
      fail_at(node, err.what());
    }
  } else if (type == "random_pair") {
    check_keys(node, "env", {"type", "states", "actions", "embedding_dim", "concentration", "kl_radius", "instance_seed",
                             "modes", "gamma"});
    cfg.env = EnvKind::random_pair;
    auto& r = cfg.random_pair;
    read(node, "states", r.num_states, "env");
    read(node, "actions", r.num_actions, "env");
    read(node, "embedding_dim", r.embedding_dim, "env");
    read(node, "concentration", r.kernel_concentration, "env");
    read(node, "kl_radius", r.kl_radius, "env");
    read(node, "instance_seed", r.seed, "env");
    read(node, "modes", r.num_modes, "env");
    read(node, "gamma", r.gamma, "env");
    try {
      r.validate();
    } catch (const std::invalid_argument& err) {
      fail_at(node, err.what());
    }
  } else if (type == "tabular") {
    check_keys(node, "env", {"type", "domains", "eval"});
    cfg.env = EnvKind::tabular;
    for (const char* key : {"domains", "eval"}) {
      const YAML::Node list = node[key];
      if (!list || !list.IsSequence() || list.size() == 0) fail_at(list ? list : node, "'env." + std::string(key) + "' must be a nonempty list");
      auto& target = std::string(key) == "domains" ? cfg.tabular_domains : cfg.tabular_eval;
      for (std::size_t i = 0; i < list.size(); ++i)
        target.push_back(cmdp_from_yaml(list[i], "env." + std::string(key) + "[" + std::to_string(i) + "]"));
    }
    for (const auto& m : cfg.tabular_domains)
      try {
        check_same_structure(cfg.tabular_domains.front(), m);
      } catch (const std::invalid_argument& err) {
        fail_at(node["domains"], std::string("'env.domains': ") + err.what());
      }
  } else if (type == "pointgoal") {
    check_keys(node, "env", {"type", "goal", "goal_radius", "hazards", "arena", "start", "start_noise", "control_penalty",
                             "smoothness_penalty", "dt", "horizon"});
    cfg.env = EnvKind::pointgoal;
    auto& p = cfg.pointgoal;
    auto vec2 = [&](const char* key, Eigen::Vector2d& out) {
      if (const YAML::Node v = node[key]) {
        const auto xs = number_list(v, std::string("env.") + key);
        if (xs.size() != 2) fail_at(v, std::string("'env.") + key + "' must be [x, y]");
        out = {xs[0], xs[1]};
      }
    };
    vec2("goal", p.goal);
    vec2("start", p.start);
    read(node, "goal_radius", p.goal_radius, "env");
    read(node, "start_noise", p.start_noise, "env");
    read(node, "control_penalty", p.control_penalty, "env");
    read(node, "smoothness_penalty", p.smoothness_penalty, "env");
    read(node, "dt", p.dt, "env");
    read(node, "horizon", p.horizon, "env");
    if (const YAML::Node arena = node["arena"]) {
      const double half = scalar<double>(arena, "env.arena");
      p.arena_lo = {-half, -half};
      p.arena_hi = {half, half};
    }
    if (const YAML::Node hazards = node["hazards"]) {
      if (!hazards.IsSequence()) fail_at(hazards, "'env.hazards' must be a list");
      for (const auto& h : hazards) {
        check_keys(h, "env.hazards[]", {"center", "radius"});
        const auto c = number_list(h["center"], "env.hazards[].center");
        if (c.size() != 2) fail_at(h["center"], "hazard center must be [x, y]");
        p.hazards.push_back({{c[0], c[1]}, scalar<double>(h["radius"], "env.hazards[].radius")});
      }
    }
    try {
      p.validate();
    } catch (const std::invalid_argument& err) {
      fail_at(node, err.what());
    }
  } else if (type == "cartpole") {
    check_keys(node, "env", {"type", "cart_mass", "pole_mass", "half_length", "gear", "x_max", "dt", "horizon",
                             "start_noise"});
    cfg.env = EnvKind::cartpole;
    auto& c = cfg.cartpole;
    read(node, "cart_mass", c.cart_mass, "env");
    read(node, "pole_mass", c.pole_mass, "env");
    read(node, "half_length", c.half_length, "env");
    read(node, "gear", c.gear, "env");
    read(node, "x_max", c.x_max, "env");
    read(node, "dt", c.dt, "env");
    read(node, "horizon", c.horizon, "env");
    read(node, "start_noise", c.start_noise, "env");
    try {
      c.validate();
    } catch (const std::invalid_argument& err) {
      fail_at(node, err.what());
    }
  } else {
    fail_at(node["type"], "unknown env type '" + type + "' (chain, random_pair, tabular, pointgoal, cartpole)");
  }
}

inline void parse_domains(const YAML::Node& node, ExperimentConfig& cfg) {
  if (!node.IsSequence()) fail_at(node, "'domains' must be a list");
  for (const auto& item : node) {
    check_keys(item, "domains[]", {"name", "train", "eval", "mode"});
    for (const char* key : {"name", "train", "eval"})
      if (!item[key]) fail_at(item, std::string("domain entry is missing '") + key + "'");
    DomainParamSpec p;
    p.name = scalar<std::string>(item["name"], "domains[].name");
    p.train_range = interval(item["train"], "domains[].train");
    p.eval_range = interval(item["eval"], "domains[].eval");
    const std::string mode = item["mode"] ? scalar<std::string>(item["mode"], "domains[].mode") : "multiplicative";
    if (mode == "additive") p.mode = Perturbation::additive;
    else if (mode == "multiplicative") p.mode = Perturbation::multiplicative;
    else fail_at(item["mode"], "domain mode must be 'additive' or 'multiplicative'");
    try {
      p.validate();
    } catch (const std::invalid_argument& err) {
      fail_at(item, err.what());
    }
    cfg.domains.push_back(p);
  }
}

inline void parse_solver(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "solver", {"algorithm", "step_size", "dual_step_size", "iterations", "batch", "crpo_tolerance",
                              "eval_every", "eval_domains", "eval_episodes", "threads", "initial_std", "min_std",
                              "learn_std", "baseline_ridge"});
  auto& s = cfg.solver;
  if (const YAML::Node a = node["algorithm"]) {
    const auto name = scalar<std::string>(a, "solver.algorithm");
    if (name == "crpo") s.algorithm = SolverAlgorithm::crpo;
    else if (name == "primal-dual" || name == "primal_dual") s.algorithm = SolverAlgorithm::primal_dual;
    else if (name == "lp") s.algorithm = SolverAlgorithm::lp;
    else fail_at(a, "solver.algorithm must be crpo, primal-dual or lp");
  }
  read(node, "step_size", s.step_size, "solver");
  read(node, "dual_step_size", s.dual_step_size, "solver");
  read(node, "iterations", s.iterations, "solver");
  read(node, "batch", s.batch, "solver");
  read(node, "crpo_tolerance", s.crpo_tolerance, "solver");
  read(node, "eval_every", s.eval_every, "solver");
  read(node, "eval_domains", s.eval_domains, "solver");
  read(node, "eval_episodes", s.eval_episodes, "solver");
  read(node, "threads", s.threads, "solver");
  read(node, "initial_std", s.initial_std, "solver");
  read(node, "min_std", s.min_std, "solver");
  read(node, "learn_std", s.learn_std, "solver");
  read(node, "baseline_ridge", s.baseline_ridge, "solver");
  try {
    s.validate();
  } catch (const std::invalid_argument& err) {
    fail_at(node, err.what());
  }
}

inline void parse_penalty(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "penalty", {"lambda", "n", "mode", "c_max", "candidates"});
  if (const YAML::Node l = node["lambda"]) {
    if (l.IsScalar() && l.Scalar() == "calibrate") cfg.calibrate = true;
    else cfg.penalty.lambda = scalar<double>(l, "penalty.lambda");
  }
  read(node, "n", cfg.penalty.ensemble_size, "penalty");
  if (const YAML::Node m = node["mode"]) {
    const auto mode = scalar<std::string>(m, "penalty.mode");
    if (mode == "exact") cfg.penalty.mode = UpsilonMode::exact;
    else if (mode == "sampled") cfg.penalty.mode = UpsilonMode::sampled;
    else fail_at(m, "penalty.mode must be exact or sampled");
  }
  if (const YAML::Node c = node["c_max"]) cfg.c_max = scalar<double>(c, "penalty.c_max");
  read(node, "candidates", cfg.calibration_candidates, "penalty");
  if (cfg.calibration_candidates < 2) fail_at(node, "penalty.candidates must be >= 2");
}

}  // namespace detail

/// Checks cross-field consistency once all sections are read.
inline void validate_config(const ExperimentConfig& cfg, const YAML::Node& root) {
  using detail::fail_at;
  if (cfg.seeds.empty()) fail_at(root, "at least one seed is required");
  if (cfg.num_rollout_domains < 1) fail_at(root, "ensemble.N must be >= 1");
  try {
    cfg.penalty.validate();
  } catch (const std::invalid_argument& err) {
    fail_at(root["penalty"] ? root["penalty"] : root, err.what());
  }
  if (!is_tabular(cfg.env)) {
    if (cfg.penalty.mode == UpsilonMode::exact) fail_at(root["penalty"], "exact upsilon needs a tabular env");
    if (cfg.solver.algorithm == SolverAlgorithm::lp) fail_at(root["solver"], "the lp solver needs a tabular env");
    if (!cfg.budget) fail_at(root, "'budget' is required for continuous envs");
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) fail_at(root["discount"], "discount must lie in (0, 1)");
  } else if (!cfg.domains.empty()) {
    fail_at(root["domains"], "domain ranges apply to continuous envs only");
  }
  const std::set<std::string> known = cfg.env == EnvKind::pointgoal ? std::set<std::string>{"mass", "damping", "gear"}
                                      : cfg.env == EnvKind::cartpole ? std::set<std::string>{"pole_length", "gear"}
                                                                     : std::set<std::string>{};
  for (std::size_t i = 0; i < cfg.domains.size(); ++i) {
    if (!known.contains(cfg.domains[i].name))
      fail_at(root["domains"][i]["name"], "domain parameter '" + cfg.domains[i].name + "' does not exist for env '" +
                                              to_string(cfg.env) + "'");
    if (cfg.env == EnvKind::cartpole && cfg.domains[i].mode != Perturbation::additive)
      fail_at(root["domains"][i], "cartpole parameters are additive offsets");
  }
  for (int n : cfg.sweep_n)
    if (n < 1) fail_at(root["sweep"], "sweep.n entries must be >= 1");
}

inline ExperimentConfig parse_config(const YAML::Node& root) {
  using namespace detail;
  check_keys(root, "<root>", {"name", "env", "domains", "solver", "penalty", "ensemble", "budget", "discount", "seeds",
                              "output", "sweep", "heatmap"});
  ExperimentConfig cfg;
  read(root, "name", cfg.name, "<root>");
  if (!root["env"]) fail_at(root, "'env' section is required");
  parse_env(root["env"], cfg);
  if (root["domains"]) parse_domains(root["domains"], cfg);
  if (root["solver"]) parse_solver(root["solver"], cfg);
  if (root["penalty"]) parse_penalty(root["penalty"], cfg);
  if (const YAML::Node e = root["ensemble"]) {
    check_keys(e, "ensemble", {"N"});
    read(e, "N", cfg.num_rollout_domains, "ensemble");
  }
  if (const YAML::Node b = root["budget"]) cfg.budget = scalar<double>(b, "budget");
  read(root, "discount", cfg.discount, "<root>");
  if (const YAML::Node seeds = root["seeds"]) {
    if (!seeds.IsSequence()) fail_at(seeds, "'seeds' must be a list");
    cfg.seeds.clear();
    for (const auto& s : seeds) cfg.seeds.push_back(scalar<std::uint64_t>(s, "seeds"));
  }
  read(root, "output", cfg.output, "<root>");
  if (const YAML::Node sweep = root["sweep"]) {
    check_keys(sweep, "sweep", {"lambdas", "n"});
    if (sweep["lambdas"]) cfg.sweep_lambdas = number_list(sweep["lambdas"], "sweep.lambdas");
    if (sweep["n"]) {
      cfg.sweep_n.clear();
      for (double v : number_list(sweep["n"], "sweep.n")) cfg.sweep_n.push_back(static_cast<int>(v));
    }
  }
  if (const YAML::Node h = root["heatmap"]) {
    check_keys(h, "heatmap", {"angle_cells", "velocity_cells", "max_velocity", "siblings"});
    read(h, "angle_cells", cfg.heatmap.angle_cells, "heatmap");
    read(h, "velocity_cells", cfg.heatmap.velocity_cells, "heatmap");
    read(h, "max_velocity", cfg.heatmap.max_velocity, "heatmap");
    read(h, "siblings", cfg.heatmap.siblings, "heatmap");
  }
  validate_config(cfg, root);
  cfg.tree = YAML::Clone(root);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& err) {
    throw ConfigError(err.msg, err.mark.line + 1, err.mark.column + 1);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", 1, 1);
  return parse_config(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read config file '" + path + "'", 0, 0);
  } catch (const YAML::ParserException& err) {
    throw ConfigError(err.msg, err.mark.line + 1, err.mark.column + 1);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", 1, 1);
  return parse_config(root);
}

/// Command-line overrides, mirrored into the effective tree.
inline void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<UpsilonMode> mode,
                            const std::optional<std::string>& output) {
  if (seed) {
    cfg.seeds = {*seed};
    YAML::Node seeds(YAML::NodeType::Sequence);
    seeds.SetStyle(YAML::EmitterStyle::Flow);
    seeds.push_back(*seed);
    cfg.tree["seeds"] = seeds;
  }
  if (mode) {
    if (*mode == UpsilonMode::exact && !is_tabular(cfg.env)) throw ConfigError("--mode exact needs a tabular env", 0, 0);
    cfg.penalty.mode = *mode;
    cfg.tree["penalty"]["mode"] = *mode == UpsilonMode::exact ? "exact" : "sampled";
    try {
      cfg.penalty.validate();
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what(), 0, 0);
    }
  }
  if (output) {
    cfg.output = *output;
    cfg.tree["output"] = *output;
  }
}

inline std::string emit_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << cfg.tree;
  return std::string(out.c_str()) + "\n";
}

}  // namespace spidr::harness
