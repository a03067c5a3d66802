#pragma once

// Random tabular (family, real) pairs whose kernels stay inside a certified
// KL ball around the domain-randomization mixture kernel.

#include "spidr/cmdp.hpp"
#include "spidr/pessimize.hpp"
#include "spidr/randomize.hpp"
#include "spidr/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace spidr::envs {

struct RandomCmdpSpec {
  int num_states = 6;
  int num_actions = 3;
  int embedding_dim = 2;
  double kernel_concentration = 1.0;  // Dirichlet concentration of the base rows
  double kl_radius = 0.05;
  std::uint64_t seed = 0;
  int num_domains = 8;
  int num_modes = 3;  // dimension of xi
  double gamma = 0.9;
  double confidence = 0.05;

  void validate() const {
    if (num_states < 2 || num_actions < 1 || embedding_dim < 1 || num_domains < 1 || num_modes < 1)
      throw std::invalid_argument("RandomCmdpSpec: sizes must be positive (at least two states)");
    if (!(kernel_concentration > 0.0)) throw std::invalid_argument("RandomCmdpSpec: concentration must be > 0");
    if (!(kl_radius >= 0.0) || !std::isfinite(kl_radius)) throw std::invalid_argument("RandomCmdpSpec: KL radius must be >= 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("RandomCmdpSpec: gamma must lie in [0, 1)");
  }
};

/// Measured counterparts of the bounded-state-space and variance-floor assumptions.
struct AssumptionProbe {
  double measured_diameter = 0.0;        // d_s, max 2-norm distance between embedded states
  double measured_variance_floor = 0.0;  // c_3, min over (s,a) of the exact upsilon
  double confidence = 0.05;              // alpha
};

struct RandomPair {
  TabularFamily family;
  std::vector<DomainParams> domains;
  TabularCMDP real_env;
  TabularCMDP base;
  AssumptionProbe probe;
  double perturbation_scale = 0.0;
  double max_kl = 0.0;  // largest measured KL to the mixture kernel
};

inline double kl_divergence(const Vector& p, const Vector& q) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p(k) > 0.0) total += p(k) * std::log(p(k) / q(k));
  return std::max(0.0, total);
}

namespace detail {

inline Vector softmax(const Vector& logits) {
  const Vector shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

inline Vector dirichlet(int size, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Vector v(size);
  for (int k = 0; k < size; ++k) v(k) = gamma(rng) + 1e-3;
  return v / v.sum();
}

struct LogitPerturbation {
  Matrix base_logits;              // (S*A) x S
  std::vector<Matrix> directions;  // one per mode
  Matrix real_direction;           // outside the family's span
  DomainParams real_xi;
};

inline TabularCMDP perturbed(const TabularCMDP& base, const LogitPerturbation& pert, const DomainParams& xi,
                             double scale, bool real) {
  TabularCMDP out = base;
  Matrix logits = pert.base_logits;
  for (std::size_t k = 0; k < xi.size(); ++k) logits += scale * xi[k] * pert.directions[k];
  if (real) logits += scale * pert.real_direction;
  for (Eigen::Index row = 0; row < logits.rows(); ++row)
    out.transition.row(row) = softmax(logits.row(row).transpose()).transpose();
  return out;
}

inline double max_kl_to_mixture(const std::vector<TabularCMDP>& envs, const TabularCMDP& real) {
  const TabularCMDP mix = mixture_cmdp(std::span<const TabularCMDP>(envs));
  double worst = 0.0;
  for (Eigen::Index row = 0; row < mix.transition.rows(); ++row) {
    const Vector q = mix.transition.row(row).transpose();
    for (const auto& env : envs) worst = std::max(worst, kl_divergence(env.transition.row(row).transpose(), q));
    worst = std::max(worst, kl_divergence(real.transition.row(row).transpose(), q));
  }
  return worst;
}

}  // namespace detail

/// Builds a random base CMDP, logit-space perturbation directions, and bisects
/// the perturbation scale until every sampled domain and the real kernel lie
/// within `kl_radius` of the mixture kernel.
inline RandomPair build_random_pair(const RandomCmdpSpec& spec) {
  spec.validate();
  const int S = spec.num_states;
  const int A = spec.num_actions;
  Rng rng = make_stream(spec.seed, "random-pair");
  std::normal_distribution<double> normal(0.0, 1.0);

  TabularCMDP base(S, A, spec.embedding_dim);
  base.discount = spec.gamma;
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < spec.embedding_dim; ++k) base.embedding(s, k) = uniform01(rng);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      base.reward(s, a) = uniform01(rng);
      base.cost(s, a) = uniform01(rng);
    }
  base.initial = detail::dirichlet(S, 1.0, rng);
  base.initial /= base.initial.sum();

  detail::LogitPerturbation pert;
  pert.base_logits = Matrix(S * A, S);
  for (int row = 0; row < S * A; ++row)
    pert.base_logits.row(row) = detail::dirichlet(S, spec.kernel_concentration, rng).array().log().matrix().transpose();
  for (int row = 0; row < S * A; ++row)
    base.transition.row(row) = detail::softmax(pert.base_logits.row(row).transpose()).transpose();
  base.budget = evaluate_policy(base, TabularPolicy::uniform(S, A)).constraint;

  RandomPair out;
  out.base = base;
  for (int k = 0; k < spec.num_modes; ++k)
    out.family.params.push_back({"mode_" + std::to_string(k), {-1.0, 1.0}, {-1.0, 1.0}, Perturbation::additive});

  const EnsembleSpec ensemble{spec.num_domains, 1, derive_seed(spec.seed, "random-pair/domains")};
  constexpr int kMaxAttempts = 8;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    pert.directions.assign(static_cast<std::size_t>(spec.num_modes), Matrix(S * A, S));
    for (auto& d : pert.directions)
      for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
    pert.real_direction = Matrix(S * A, S);
    for (Eigen::Index i = 0; i < pert.real_direction.size(); ++i) pert.real_direction.data()[i] = normal(rng);
    pert.real_xi = out.family.distribution(Phase::eval).sample(rng);
    out.domains = sample_domains(out.family.distribution(Phase::train), ensemble, UpsilonMode::exact).rollout;

    auto measure = [&](double scale) {
      std::vector<TabularCMDP> envs;
      for (const auto& xi : out.domains) envs.push_back(detail::perturbed(base, pert, xi, scale, false));
      return detail::max_kl_to_mixture(envs, detail::perturbed(base, pert, pert.real_xi, scale, true));
    };

    double lo = 0.0;
    double hi = 1.0;
    while (hi < 64.0 && measure(hi) <= spec.kl_radius) {
      lo = hi;
      hi *= 2.0;
    }
    if (measure(hi) <= spec.kl_radius) lo = hi;
    for (int it = 0; it < 80 && lo < hi && spec.kl_radius > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (measure(mid) <= spec.kl_radius) lo = mid;
      else hi = mid;
    }
    if (spec.kl_radius > 0.0 && lo < 1e-12) continue;

    out.perturbation_scale = lo;
    out.max_kl = measure(lo);
    const double scale = lo;
    out.family.builder = [base, pert, scale](const DomainParams& xi) {
      return detail::perturbed(base, pert, xi, scale, false);
    };
    out.real_env = detail::perturbed(base, pert, pert.real_xi, scale, true);

    const auto envs = out.family.build_all(out.domains);
    const Matrix ground = ground_cost_matrix(base.embedding);
    out.probe.measured_diameter = ground.maxCoeff();
    out.probe.measured_variance_floor = upsilon_exact_matrix(std::span<const TabularCMDP>(envs), base.embedding).minCoeff();
    out.probe.confidence = spec.confidence;
    return out;
  }
  throw std::runtime_error("build_random_pair: could not realize KL radius " + std::to_string(spec.kl_radius));
}

}  // namespace spidr::envs
