#pragma once

// Pessimistic cost machinery: the ensemble-disagreement estimator upsilon,
// penalized costs, exact Wasserstein distances between next-state laws,
// the simulation-to-real cost bound and the diagnostics built on them.

#include "spidr/cmdp.hpp"
#include "spidr/randomize.hpp"
#include "spidr/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace spidr {

struct PenaltyConfig {
  double lambda = 0.0;
  int ensemble_size = 2;
  UpsilonMode mode = UpsilonMode::sampled;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("PenaltyConfig: lambda must be >= 0");
    if (ensemble_size < (mode == UpsilonMode::sampled ? 2 : 1))
      throw std::invalid_argument("PenaltyConfig: ensemble size too small for the upsilon mode");
  }
};

// ---------------------------------------------------------------------------
// upsilon

/// Sum over coordinates of the population variance (divisor n) of the rows of
/// an n x k matrix of predicted next states.
inline double upsilon_sampled(const Matrix& next_states) {
  if (next_states.rows() < 2) throw std::invalid_argument("upsilon_sampled: need at least two predictions");
  const Eigen::RowVectorXd mean = next_states.colwise().mean();
  return (next_states.rowwise() - mean).array().square().sum() / static_cast<double>(next_states.rows());
}

/// Infinite-ensemble limit: total variance of the embedded next state when xi is
/// drawn uniformly from the domain set and then s' ~ p_xi(.|s,a).
inline double upsilon_exact_tabular(std::span<const TabularCMDP> envs, int s, int a, const Matrix& embedding) {
  const Vector law = mixture_kernel(envs, s, a);
  const Eigen::RowVectorXd mean = law.transpose() * embedding;
  double total = 0.0;
  for (Eigen::Index k = 0; k < law.size(); ++k)
    if (law(k) > 0.0) total += law(k) * (embedding.row(k) - mean).squaredNorm();
  return total;
}

inline Matrix upsilon_exact_matrix(std::span<const TabularCMDP> envs, const Matrix& embedding) {
  const TabularCMDP& ref = envs.front();
  Matrix out(ref.num_states, ref.num_actions);
  for (int s = 0; s < ref.num_states; ++s)
    for (int a = 0; a < ref.num_actions; ++a) out(s, a) = upsilon_exact_tabular(envs, s, a, embedding);
  return out;
}

inline int sample_next_state(const TabularCMDP& env, int s, int a, Rng& rng) {
  const auto row = env.next_row(s, a);
  double u = uniform01(rng);
  for (int k = 0; k < env.num_states; ++k) {
    u -= row(k);
    if (u < 0.0) return k;
  }
  for (int k = env.num_states - 1; k >= 0; --k)
    if (row(k) > 0.0) return k;
  return env.num_states - 1;
}

/// One-step probe of every sibling at (s, a), then the sampled estimator.
inline double upsilon_sampled_tabular(std::span<const TabularCMDP> siblings, int s, int a, Rng& rng) {
  Matrix predictions(static_cast<Eigen::Index>(siblings.size()), siblings.front().embedding_dim());
  for (std::size_t j = 0; j < siblings.size(); ++j)
    predictions.row(static_cast<Eigen::Index>(j)) =
        siblings[j].embedding.row(sample_next_state(siblings[j], s, a, rng));
  return upsilon_sampled(predictions);
}

/// One-step probe of continuous sibling environments from a shared (state, action).
/// Sibling rollouts never advance past this single step.
template <class Env>
double upsilon_one_step(std::span<const Env> siblings, const typename Env::State& state,
                        const typename Env::Action& action) {
  Matrix predictions(static_cast<Eigen::Index>(siblings.size()), Env::state_dim);
  for (std::size_t j = 0; j < siblings.size(); ++j)
    predictions.row(static_cast<Eigen::Index>(j)) = siblings[j].step(state, action).next.transpose();
  return upsilon_sampled(predictions);
}

/// c + lambda * upsilon.
inline double penalize_cost(double cost, double upsilon, double lambda) { return cost + lambda * upsilon; }

inline Matrix penalize_cost(const Matrix& cost, const Matrix& upsilon, double lambda) {
  return cost + lambda * upsilon;
}

// ---------------------------------------------------------------------------
// Wasserstein distances

/// 1-D L1 transport via the integrated CDF difference over a sorted support.
inline double wasserstein_1d(const Vector& p, const Vector& q, const Vector& support) {
  if (p.size() != q.size() || p.size() != support.size())
    throw std::invalid_argument("wasserstein_1d: mismatched support");
  for (Eigen::Index k = 1; k < support.size(); ++k)
    if (support(k) < support(k - 1)) throw std::invalid_argument("wasserstein_1d: support must be sorted");
  double cdf_gap = 0.0;
  double total = 0.0;
  for (Eigen::Index k = 0; k + 1 < support.size(); ++k) {
    cdf_gap += p(k) - q(k);
    total += std::abs(cdf_gap) * (support(k + 1) - support(k));
  }
  return total;
}

/// Pairwise ground distances between embedded states under the 2-norm.
inline Matrix ground_cost_matrix(const Matrix& embedding) {
  const Eigen::Index n = embedding.rows();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (embedding.row(i) - embedding.row(j)).norm();
  return cost;
}

/// Optimal transport over couplings of (p, q) solved as a transportation LP.
/// Zero-mass support points are dropped before building the program.
inline double wasserstein_lp(const Vector& p, const Vector& q, const Matrix& ground_cost) {
  if (p.size() != q.size() || ground_cost.rows() != p.size() || ground_cost.cols() != q.size())
    throw std::invalid_argument("wasserstein_lp: mismatched dimensions");
  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) > 0.0) rows.push_back(k);
    if (q(k) > 0.0) cols.push_back(k);
  }
  if (rows.empty() || cols.empty()) return 0.0;
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(cols.size());
  LinearProgram lp;
  lp.A = Matrix::Zero(m + n, m * n);
  lp.b = Vector(m + n);
  lp.c = Vector(m * n);
  lp.sense.assign(static_cast<std::size_t>(m + n), RowSense::equal);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index var = i * n + j;
      lp.A(i, var) = 1.0;
      lp.A(m + j, var) = 1.0;
      lp.c(var) = -ground_cost(rows[i], cols[j]);
    }
    lp.b(i) = p(rows[i]);
  }
  for (Eigen::Index j = 0; j < n; ++j) lp.b(m + j) = q(cols[j]);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error(std::string("wasserstein_lp: transport LP ") + to_string(sol.status));
  return std::max(0.0, -sol.objective);
}

/// D_W(p, q)(s, a) for every state-action pair under the 2-norm ground metric.
inline Matrix wasserstein_matrix(const TabularCMDP& p, const TabularCMDP& q, const Matrix& ground_cost) {
  Matrix out(p.num_states, p.num_actions);
  for (int s = 0; s < p.num_states; ++s)
    for (int a = 0; a < p.num_actions; ++a)
      out(s, a) = wasserstein_lp(p.next_row(s, a).transpose(), q.next_row(s, a).transpose(), ground_cost);
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

enum class SlopeNorm { l1, l2 };

struct DegenerateEmbedding : std::domain_error {
  using std::domain_error::domain_error;
};

/// max over state pairs of |V(s) - V(s')| / ||x(s) - x(s')||.
inline double lipschitz_slope(const Vector& values, const Matrix& embedding, SlopeNorm norm) {
  double slope = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    for (Eigen::Index j = i + 1; j < values.size(); ++j) {
      const Eigen::RowVectorXd diff = embedding.row(i) - embedding.row(j);
      const double dist = norm == SlopeNorm::l1 ? diff.lpNorm<1>() : diff.norm();
      const double rise = std::abs(values(i) - values(j));
      if (dist == 0.0) {
        if (rise > 1e-12) throw DegenerateEmbedding("distinct states share an embedding but differ in cost value");
        continue;
      }
      slope = std::max(slope, rise / dist);
    }
  }
  return slope;
}

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double lipschitz_cost = 0.0;     // under the transport ground metric, used in rhs
  double lipschitz_cost_l1 = 0.0;  // 1-norm slope, reported only
  Matrix per_state_wasserstein;    // mean over domains of D_W(p_xi, p*)(s,a)
  Matrix max_wasserstein;          // max over domains
};

/// C_{p*}(pi) against E_xi C_xi(pi) + gamma L_C/(1-gamma) E_xi E_{d_xi}[D_W(p_xi, p*)].
inline BoundReport lemma1_report(const TabularCMDP& real_env, std::span<const TabularCMDP> domains,
                                 const TabularPolicy& pi) {
  if (domains.empty()) throw std::invalid_argument("lemma1_report: empty domain list");
  for (const auto& env : domains) {
    check_same_structure(real_env, env);
    if (env.embedding != real_env.embedding) throw std::invalid_argument("lemma1_report: embeddings differ");
  }
  const PolicyEvaluation real_eval = evaluate_policy(real_env, pi);
  const Matrix ground = ground_cost_matrix(real_env.embedding);
  BoundReport report;
  report.lhs = real_eval.constraint;
  report.lipschitz_cost = lipschitz_slope(real_eval.values.v_cost, real_env.embedding, SlopeNorm::l2);
  report.lipschitz_cost_l1 = lipschitz_slope(real_eval.values.v_cost, real_env.embedding, SlopeNorm::l1);
  report.per_state_wasserstein = Matrix::Zero(real_env.num_states, real_env.num_actions);
  report.max_wasserstein = Matrix::Zero(real_env.num_states, real_env.num_actions);
  double sim_cost = 0.0;
  double transport = 0.0;
  for (const auto& env : domains) {
    const Matrix dw = wasserstein_matrix(env, real_env, ground);
    report.per_state_wasserstein += dw;
    report.max_wasserstein = report.max_wasserstein.cwiseMax(dw);
    sim_cost += evaluate_policy(env, pi).constraint;
    transport += occupancy(env, pi).expect(dw);
  }
  const auto count = static_cast<double>(domains.size());
  report.per_state_wasserstein /= count;
  const double gamma = real_env.discount;
  report.rhs = sim_cost / count + gamma * report.lipschitz_cost / (1.0 - gamma) * transport / count;
  report.slack = report.rhs - report.lhs;
  return report;
}

inline void write_csv(std::ostream& os, const BoundReport& report) {
  os << std::setprecision(17);
  os << "s,a,mean_wasserstein,max_wasserstein\n";
  for (Eigen::Index s = 0; s < report.per_state_wasserstein.rows(); ++s)
    for (Eigen::Index a = 0; a < report.per_state_wasserstein.cols(); ++a)
      os << s << ',' << a << ',' << report.per_state_wasserstein(s, a) << ',' << report.max_wasserstein(s, a)
         << '\n';
  os << "# summary lhs=" << report.lhs << " rhs=" << report.rhs << " slack=" << report.slack
     << " lipschitz_cost=" << report.lipschitz_cost << " lipschitz_cost_l1=" << report.lipschitz_cost_l1 << '\n';
}

/// Lipschitz constant valid for every policy: the cost-value range over the
/// smallest distance between distinct embedded states.
inline double uniform_cost_lipschitz(const TabularCMDP& env) {
  const Matrix ground = ground_cost_matrix(env.embedding);
  double min_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ground.rows(); ++i)
    for (Eigen::Index j = i + 1; j < ground.cols(); ++j) min_dist = std::min(min_dist, ground(i, j));
  const double range = (env.cost.maxCoeff() - env.cost.minCoeff()) / (1.0 - env.discount);
  if (range == 0.0) return 0.0;
  if (min_dist == 0.0) throw DegenerateEmbedding("distinct states share an embedding");
  return range / min_dist;
}

/// gamma L_C/(1-gamma) * max_xi D_W(p_xi, p*)(s,a) with the policy-independent L_C above.
inline Matrix oracle_penalty(const TabularCMDP& real_env, std::span<const TabularCMDP> domains) {
  if (domains.empty()) throw std::invalid_argument("oracle_penalty: empty domain list");
  const Matrix ground = ground_cost_matrix(real_env.embedding);
  Matrix worst = Matrix::Zero(real_env.num_states, real_env.num_actions);
  for (const auto& env : domains) worst = worst.cwiseMax(wasserstein_matrix(env, real_env, ground));
  if (worst.maxCoeff() == 0.0) return worst;
  const double gamma = real_env.discount;
  return gamma * uniform_cost_lipschitz(real_env) / (1.0 - gamma) * worst;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct UpsilonStats {
  double mean = 0.0;
  double max = 0.0;
  long count = 0;
};

struct LambdaCalibration {
  Interval range;
  double suggested = 0.0;
  bool no_signal = false;

  /// Log-spaced candidates from the top of the range downwards.
  [[nodiscard]] std::vector<double> candidates(int count) const {
    std::vector<double> out;
    if (no_signal || count < 1) return out;
    if (count == 1) return {suggested};
    const double lo = std::log10(range.lo);
    const double hi = std::log10(range.hi);
    for (int k = 0; k < count; ++k) out.push_back(std::pow(10.0, hi - (hi - lo) * k / (count - 1)));
    return out;
  }
};

/// lambda so that lambda * mean(upsilon) matches c_max; range one decade either side.
inline LambdaCalibration calibrate_lambda(const UpsilonStats& stats, double c_max) {
  LambdaCalibration out;
  if (!(stats.mean > 0.0)) {
    out.no_signal = true;
    return out;
  }
  out.suggested = c_max / stats.mean;
  out.range = {0.1 * out.suggested, 10.0 * out.suggested};
  return out;
}

inline double mean_constraint(std::span<const TabularCMDP> envs, const TabularPolicy& pi) {
  return dr_objective(envs, pi).constraint;
}

/// C_eval(pi) - C_train(pi).
inline double underestimation_gap(const TabularPolicy& pi, std::span<const TabularCMDP> train_envs,
                                  std::span<const TabularCMDP> eval_envs) {
  return mean_constraint(eval_envs, pi) - mean_constraint(train_envs, pi);
}

/// Penalty value mass E_xi[1/(1-gamma) E_{d_xi}[lambda upsilon]] minus the realized |gap|.
inline double penalty_sufficiency(const TabularPolicy& pi, double lambda, const Matrix& upsilon,
                                  std::span<const TabularCMDP> train_envs, std::span<const TabularCMDP> eval_envs) {
  double penalty_value = 0.0;
  for (const auto& env : train_envs)
    penalty_value += occupancy(env, pi).expect(lambda * upsilon) / (1.0 - env.discount);
  penalty_value /= static_cast<double>(train_envs.size());
  return penalty_value - std::abs(underestimation_gap(pi, train_envs, eval_envs));
}

}  // namespace spidr
