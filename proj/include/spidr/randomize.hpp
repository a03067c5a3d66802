#pragma once

// Parameterized environment families, uniform domain sampling with separate
// train/eval boxes, and the sample-average domain-randomization objective.

#include "spidr/cmdp.hpp"
#include "spidr/rng.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spidr {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
  [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

enum class Perturbation { additive, multiplicative };
enum class Phase { train, eval };

/// One randomized physical quantity. Additive parameters are offsets, multiplicative
/// ones are factors; either way the sampled value is handed to the family builder.
struct DomainParamSpec {
  std::string name;
  Interval train_range;
  Interval eval_range;
  Perturbation mode = Perturbation::additive;

  [[nodiscard]] const Interval& range(Phase phase) const {
    return phase == Phase::train ? train_range : eval_range;
  }

  void validate() const {
    for (const Interval* r : {&train_range, &eval_range}) {
      if (!(r->lo <= r->hi)) throw std::invalid_argument("domain parameter '" + name + "': empty interval");
      if (mode == Perturbation::multiplicative && !(r->lo > 0.0))
        throw std::invalid_argument("domain parameter '" + name + "': multiplicative range must be positive");
    }
  }
};

using DomainParams = std::vector<double>;

struct DomainDistribution {
  std::vector<DomainParamSpec> params;
  Phase phase = Phase::train;

  [[nodiscard]] DomainParams sample(Rng& rng) const {
    DomainParams xi(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Interval& r = params[k].range(phase);
      xi[k] = r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * uniform01(rng);
    }
    return xi;
  }

  [[nodiscard]] bool contains(const DomainParams& xi) const {
    if (xi.size() != params.size()) return false;
    for (std::size_t k = 0; k < params.size(); ++k)
      if (!params[k].range(phase).contains(xi[k])) return false;
    return true;
  }
};

enum class UpsilonMode { sampled, exact };

/// N rollout domains, n penalty siblings per rollout domain.
struct EnsembleSpec {
  int num_rollout_domains = 1;
  int num_penalty_siblings = 2;
  std::uint64_t seed = 0;

  void validate(UpsilonMode mode) const {
    if (num_rollout_domains < 1) throw std::invalid_argument("EnsembleSpec: N must be >= 1");
    const int min_n = mode == UpsilonMode::sampled ? 2 : 1;
    if (num_penalty_siblings < min_n)
      throw std::invalid_argument("EnsembleSpec: n must be >= " + std::to_string(min_n) +
                                  (mode == UpsilonMode::sampled ? " for sampled upsilon" : ""));
  }
};

struct DomainSample {
  std::vector<DomainParams> rollout;                 // xi_i, i < N
  std::vector<std::vector<DomainParams>> siblings;  // xi_ij, N x n
};

/// Draws xi_i and the fixed sibling set xi_ij once. Domain i uses its own
/// streams, so enlarging N leaves the first domains untouched.
inline DomainSample sample_domains(const DomainDistribution& dist, const EnsembleSpec& spec,
                                   UpsilonMode mode = UpsilonMode::sampled) {
  spec.validate(mode);
  for (const auto& p : dist.params) p.validate();
  const char* tag = dist.phase == Phase::train ? "train" : "eval";
  DomainSample out;
  out.rollout.reserve(static_cast<std::size_t>(spec.num_rollout_domains));
  out.siblings.resize(static_cast<std::size_t>(spec.num_rollout_domains));
  for (int i = 0; i < spec.num_rollout_domains; ++i) {
    Rng rollout_rng = make_stream(spec.seed, std::string(tag) + "/rollout", static_cast<std::uint64_t>(i));
    out.rollout.push_back(dist.sample(rollout_rng));
    Rng sibling_rng = make_stream(spec.seed, std::string(tag) + "/siblings", static_cast<std::uint64_t>(i));
    for (int j = 0; j < spec.num_penalty_siblings; ++j) out.siblings[i].push_back(dist.sample(sibling_rng));
  }
  for (const auto& xi : out.rollout)
    if (!dist.contains(xi)) throw std::logic_error("sample_domains: draw escaped its phase range");
  for (const auto& set : out.siblings)
    for (const auto& xi : set)
      if (!dist.contains(xi)) throw std::logic_error("sample_domains: draw escaped its phase range");
  return out;
}

/// Deterministic map xi -> environment instance.
template <class Env>
struct DomainFamily {
  std::vector<DomainParamSpec> params;
  std::function<Env(const DomainParams&)> builder;

  [[nodiscard]] Env build(const DomainParams& xi) const { return builder(xi); }

  [[nodiscard]] DomainDistribution distribution(Phase phase) const { return {params, phase}; }

  [[nodiscard]] DomainParams midpoint(Phase phase = Phase::train) const {
    DomainParams xi;
    for (const auto& p : params) xi.push_back(p.range(phase).mid());
    return xi;
  }

  /// Nominal environment at the training-range midpoints.
  [[nodiscard]] Env nominal() const { return build(midpoint(Phase::train)); }

  [[nodiscard]] std::vector<Env> build_all(std::span<const DomainParams> domains) const {
    std::vector<Env> envs;
    envs.reserve(domains.size());
    for (const auto& xi : domains) envs.push_back(build(xi));
    return envs;
  }
};

using TabularFamily = DomainFamily<TabularCMDP>;

struct DrObjective {
  double objective = 0.0;
  double constraint = 0.0;
};

inline DrObjective dr_objective(std::span<const TabularCMDP> envs, const TabularPolicy& pi) {
  if (envs.empty()) throw std::invalid_argument("dr_objective: empty domain list");
  DrObjective out;
  for (const auto& env : envs) {
    const PolicyEvaluation e = evaluate_policy(env, pi);
    out.objective += e.objective;
    out.constraint += e.constraint;
  }
  out.objective /= static_cast<double>(envs.size());
  out.constraint /= static_cast<double>(envs.size());
  return out;
}

inline DrObjective dr_objective(const TabularFamily& family, std::span<const DomainParams> domains,
                                const TabularPolicy& pi) {
  const auto envs = family.build_all(domains);
  return dr_objective(std::span<const TabularCMDP>(envs), pi);
}

/// Empirical domain-randomization kernel p_mu(.|s,a): the mean of per-domain rows.
inline Vector mixture_kernel(std::span<const TabularCMDP> envs, int s, int a) {
  if (envs.empty()) throw std::invalid_argument("mixture_kernel: empty domain list");
  Vector row = Vector::Zero(envs.front().num_states);
  for (const auto& env : envs) row += env.next_row(s, a).transpose();
  return row / static_cast<double>(envs.size());
}

inline Vector mixture_kernel(const TabularFamily& family, std::span<const DomainParams> domains, int s, int a) {
  const auto envs = family.build_all(domains);
  return mixture_kernel(std::span<const TabularCMDP>(envs), s, a);
}

/// Whole mixture CMDP (all rows replaced by their domain average).
inline TabularCMDP mixture_cmdp(std::span<const TabularCMDP> envs) {
  if (envs.empty()) throw std::invalid_argument("mixture_cmdp: empty domain list");
  TabularCMDP out = envs.front();
  out.transition.setZero();
  for (const auto& env : envs) out.transition += env.transition;
  out.transition /= static_cast<double>(envs.size());
  return out;
}

inline bool kernels_coincide(std::span<const TabularCMDP> envs) {
  for (const auto& env : envs)
    if (env.transition != envs.front().transition) return false;
  return true;
}

}  // namespace spidr
