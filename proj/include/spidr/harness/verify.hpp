#pragma once

// Invariant suites behind `spidr verify` and the acceptance binary. Each suite
// is seeded, reports its case count and the worst value against its tolerance.

#include "spidr/cmdp.hpp"
#include "spidr/envs/chain.hpp"
#include "spidr/envs/random_cmdp.hpp"
#include "spidr/envs/random_pair.hpp"
#include "spidr/pessimize.hpp"
#include "spidr/solve/softmax_policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace spidr::harness {

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // the statistic named by `measure`
  std::string measure;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string note;

  [[nodiscard]] bool passed() const { return failures == 0 && cases > 0; }
};

inline std::ostream& operator<<(std::ostream& os, const SuiteResult& r) {
  os << (r.passed() ? "PASS" : "FAIL") << "  " << r.name << ": " << r.cases - r.failures << "/" << r.cases
     << " cases, " << r.measure << " " << r.worst << " (tolerance " << r.tolerance << "), " << r.seconds << " s";
  if (!r.note.empty()) os << "; " << r.note;
  return os;
}

namespace detail {

inline SuiteResult timed(const std::string& name, const std::function<void(SuiteResult&)>& body) {
  SuiteResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& err) {
    ++r.failures;
    r.note = std::string("exception: ") + err.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline double relative_error(const Matrix& analytic, const Matrix& numeric) {
  return (analytic - numeric).norm() / std::max(1.0, numeric.norm());
}

}  // namespace detail

/// Structural validity of generated instances; `inject_bad_row` breaks one
/// kernel row as a negative control, which must make this suite fail.
inline SuiteResult suite_cmdp_validity(bool inject_bad_row = false, int instances = 50) {
  return detail::timed("tabular-cmdp-validity", [&](SuiteResult& r) {
    r.measure = "max |row sum - 1|";
    r.tolerance = kRowSumTolerance;
    Rng rng = make_stream(101, "verify/validity");
    std::vector<TabularCMDP> all;
    for (int k = 0; k < instances; ++k) all.push_back(envs::random_cmdp(6, 3, 2, 0.9, rng));
    const envs::Example1 ex = envs::build_example1({0.25, 0.9});
    all.push_back(ex.real_env);
    all.push_back(ex.sim_family.nominal());
    if (inject_bad_row) all.front().transition(0, 0) += 0.1;
    for (const auto& m : all) {
      ++r.cases;
      const Vector sums = m.transition.rowwise().sum();
      r.worst = std::max(r.worst, (sums.array() - 1.0).abs().maxCoeff());
      try {
        m.validate();
      } catch (const std::invalid_argument& err) {
        ++r.failures;
        r.note = err.what();
      }
    }
  });
}

inline SuiteResult suite_bellman(int instances = 50) {
  return detail::timed("bellman-consistency", [&](SuiteResult& r) {
    r.measure = "max residual";
    r.tolerance = 1e-8;
    Rng rng = make_stream(102, "verify/bellman");
    for (int k = 0; k < instances; ++k) {
      const TabularCMDP m = envs::random_cmdp(6, 3, 2, 0.95, rng);
      const TabularPolicy pi = envs::random_policy(6, 3, rng);
      const double residual = bellman_residual(m, pi, evaluate_policy(m, pi).values);
      ++r.cases;
      r.worst = std::max(r.worst, residual);
      if (!(residual < r.tolerance)) ++r.failures;
    }
  });
}

/// Simulation lemma: the performance difference between two kernels matches
/// its occupancy-weighted expression.
inline SuiteResult suite_telescoping(int pairs = 50) {
  return detail::timed("telescoping", [&](SuiteResult& r) {
    r.measure = "max residual";
    r.tolerance = 1e-8;
    Rng rng = make_stream(103, "verify/telescoping");
    for (int k = 0; k < pairs; ++k) {
      const TabularCMDP p = envs::random_cmdp(6, 3, 2, 0.9, rng);
      const TabularCMDP q = envs::resample_kernel(p, rng);
      const TabularPolicy pi = envs::random_policy(6, 3, rng);
      const double residual = std::abs(telescoping_residual(p, q, pi));
      ++r.cases;
      r.worst = std::max(r.worst, residual);
      if (!(residual < r.tolerance)) ++r.failures;
    }
  });
}

/// Real cost against the Wasserstein-inflated randomized cost on certified pairs.
inline SuiteResult suite_transport_bound(int triples = 50, double kl_radius = 0.05) {
  return detail::timed("transport-bound", [&](SuiteResult& r) {
    r.measure = "min slack";
    r.tolerance = -1e-8;
    r.worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < triples; ++k) {
      envs::RandomCmdpSpec spec;
      spec.seed = 1000 + static_cast<std::uint64_t>(k);
      spec.kl_radius = kl_radius;
      const envs::RandomPair pair = envs::build_random_pair(spec);
      const auto domains = pair.family.build_all(pair.domains);
      Rng rng = make_stream(spec.seed, "verify/transport-policy");
      const TabularPolicy pi = envs::random_policy(spec.num_states, spec.num_actions, rng);
      const BoundReport report = lemma1_report(pair.real_env, std::span<const TabularCMDP>(domains), pi);
      ++r.cases;
      r.worst = std::min(r.worst, report.slack);
      if (!(report.slack >= r.tolerance)) ++r.failures;
    }
  });
}

/// With the oracle penalty, the penalized randomized cost dominates the real
/// cost for every policy, so penalized-feasible policies are real-safe.
inline SuiteResult suite_oracle(int instances = 10, int policies = 100) {
  return detail::timed("oracle-penalty", [&](SuiteResult& r) {
    r.measure = "min (penalized - real)";
    r.tolerance = -1e-8;
    r.worst = std::numeric_limits<double>::infinity();
    int feasible = 0;
    for (int k = 0; k < instances; ++k) {
      envs::RandomCmdpSpec spec;
      spec.seed = 2000 + static_cast<std::uint64_t>(k);
      const envs::RandomPair pair = envs::build_random_pair(spec);
      const auto domains = pair.family.build_all(pair.domains);
      const Matrix penalty = oracle_penalty(pair.real_env, std::span<const TabularCMDP>(domains));
      std::vector<TabularCMDP> penalized;
      for (const auto& env : domains) penalized.push_back(with_cost(env, env.cost + penalty));
      const std::span<const TabularCMDP> view(penalized);
      Rng rng = make_stream(spec.seed, "verify/oracle-policies");
      std::vector<TabularPolicy> pis;
      std::vector<double> pen_costs;
      for (int j = 0; j < policies; ++j) {
        pis.push_back(envs::random_policy(spec.num_states, spec.num_actions, rng));
        pen_costs.push_back(mean_constraint(view, pis.back()));
      }
      // Budget at the median penalized cost, so half of the policies are feasible.
      std::vector<double> sorted = pen_costs;
      std::nth_element(sorted.begin(), sorted.begin() + policies / 2, sorted.end());
      const double budget = sorted[static_cast<std::size_t>(policies / 2)];
      for (int j = 0; j < policies; ++j) {
        const double real = evaluate_policy(pair.real_env, pis[static_cast<std::size_t>(j)]).constraint;
        const double margin = pen_costs[static_cast<std::size_t>(j)] - real;
        ++r.cases;
        r.worst = std::min(r.worst, margin);
        bool ok = margin >= r.tolerance;
        if (pen_costs[static_cast<std::size_t>(j)] <= budget) {
          ++feasible;
          ok = ok && real <= budget + 1e-8;
        }
        if (!ok) ++r.failures;
      }
    }
    r.note = std::to_string(feasible) + " penalized-feasible policies, all checked against the real constraint";
  });
}

/// Closed-form 1-D distance against the transport LP, and metric axioms.
inline SuiteResult suite_wasserstein(int pairs = 100, int triples = 100) {
  return detail::timed("wasserstein", [&](SuiteResult& r) {
    r.measure = "max violation";
    r.tolerance = 1e-8;
    Rng rng = make_stream(104, "verify/wasserstein");
    std::uniform_int_distribution<int> size(2, 9);
    for (int k = 0; k < pairs; ++k) {
      const int m = size(rng);
      std::vector<double> pts(static_cast<std::size_t>(m));
      for (double& v : pts) v = 10.0 * uniform01(rng) - 5.0;
      std::sort(pts.begin(), pts.end());
      const Vector support = Eigen::Map<Vector>(pts.data(), m);
      const Vector p = envs::random_distribution(m, rng);
      const Vector q = envs::random_distribution(m, rng);
      const double diff = std::abs(wasserstein_lp(p, q, ground_cost_matrix(support)) - wasserstein_1d(p, q, support));
      ++r.cases;
      r.worst = std::max(r.worst, diff);
      if (!(diff <= r.tolerance)) ++r.failures;
    }
    for (int k = 0; k < triples; ++k) {
      const int m = size(rng);
      Matrix x(m, 2);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng);
      const Matrix ground = ground_cost_matrix(x);
      const Vector p = envs::random_distribution(m, rng);
      const Vector q = envs::random_distribution(m, rng);
      const Vector s = envs::random_distribution(m, rng);
      const double pq = wasserstein_lp(p, q, ground);
      const double violation = std::max({-pq, std::abs(pq - wasserstein_lp(q, p, ground)),
                                         std::abs(wasserstein_lp(p, p, ground)),
                                         pq - wasserstein_lp(p, s, ground) - wasserstein_lp(s, q, ground)});
      ++r.cases;
      r.worst = std::max(r.worst, violation);
      if (!(violation <= r.tolerance)) ++r.failures;
    }
  });
}

inline SuiteResult suite_gradient(int instances = 20, double h = 1e-5) {
  return detail::timed("policy-gradient", [&](SuiteResult& r) {
    r.measure = "max relative error";
    r.tolerance = 1e-5;
    Rng rng = make_stream(105, "verify/gradient");
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < instances; ++k) {
      const TabularCMDP base = envs::random_cmdp(5, 3, 1, 0.85, rng);
      const std::vector<TabularCMDP> domains{base, envs::resample_kernel(base, rng)};
      const std::span<const TabularCMDP> view(domains);
      SoftmaxTabularPolicy policy{Matrix::Zero(5, 3)};
      for (Eigen::Index i = 0; i < policy.logits.size(); ++i) policy.logits.data()[i] = normal(rng);
      for (Signal which : {Signal::reward, Signal::cost}) {
        const Matrix analytic = exact_gradient(policy, view, which);
        Matrix numeric(5, 3);
        for (Eigen::Index i = 0; i < policy.logits.size(); ++i) {
          SoftmaxTabularPolicy plus = policy, minus = policy;
          plus.logits.data()[i] += h;
          minus.logits.data()[i] -= h;
          const DrObjective up = dr_objective(view, plus.policy());
          const DrObjective down = dr_objective(view, minus.policy());
          numeric.data()[i] = which == Signal::reward ? (up.objective - down.objective) / (2 * h)
                                                      : (up.constraint - down.constraint) / (2 * h);
        }
        const double err = detail::relative_error(analytic, numeric);
        ++r.cases;
        r.worst = std::max(r.worst, err);
        if (!(err < r.tolerance)) ++r.failures;
      }
    }
  });
}

/// Sampled upsilon is the population variance of n next-state draws, so its
/// mean is (n-1)/n times the exact mixture variance. Each draw probes every
/// state-action pair of the kernel and the comparison is on the kernel average.
inline SuiteResult suite_estimator(int kernels = 10, int draws = 10000, double tolerance = 0.02) {
  return detail::timed("upsilon-estimator", [&](SuiteResult& r) {
    r.measure = "max relative deviation";
    r.tolerance = tolerance;
    for (int k = 0; k < kernels; ++k) {
      Rng rng = make_stream(106, "verify/estimator", static_cast<std::uint64_t>(k));
      const TabularCMDP base = envs::random_cmdp(6, 3, 2, 0.9, rng);
      std::vector<TabularCMDP> family;
      for (int j = 0; j < 4; ++j) family.push_back(envs::resample_kernel(base, rng));
      const double exact = upsilon_exact_matrix(std::span<const TabularCMDP>(family), base.embedding).mean();
      std::uniform_int_distribution<std::size_t> pick(0, family.size() - 1);
      for (int n : {2, 8, 32}) {
        double total = 0.0;
        std::vector<std::size_t> siblings(static_cast<std::size_t>(n));
        Matrix predictions(n, base.embedding_dim());
        for (int d = 0; d < draws; ++d) {
          for (auto& j : siblings) j = pick(rng);
          double sum = 0.0;
          for (int s = 0; s < base.num_states; ++s)
            for (int a = 0; a < base.num_actions; ++a) {
              for (int j = 0; j < n; ++j)
                predictions.row(j) = base.embedding.row(sample_next_state(family[siblings[static_cast<std::size_t>(j)]], s, a, rng));
              sum += upsilon_sampled(predictions);
            }
          total += sum / (base.num_states * base.num_actions);
        }
        const double expected = (n - 1.0) / n * exact;
        const double dev = std::abs(total / draws - expected) / expected;
        ++r.cases;
        r.worst = std::max(r.worst, dev);
        if (!(dev <= tolerance)) ++r.failures;
      }
    }
  });
}

struct VerifyOptions {
  bool inject_bad_row = false;
};

inline std::vector<SuiteResult> run_verification(const VerifyOptions& options = {}) {
  return {suite_cmdp_validity(options.inject_bad_row), suite_bellman(), suite_telescoping(), suite_transport_bound(),
          suite_oracle(), suite_wasserstein(), suite_gradient(), suite_estimator()};
}

}  // namespace spidr::harness
