#pragma once

// Dense two-phase tableau simplex. Small problems only (a few hundred rows);
// pivoting is deterministic: Dantzig entering rule with lowest-index ties,
// falling back to Bland's rule after a run of degenerate pivots.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace spidr {

enum class RowSense { less_equal, equal, greater_equal };

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

/// maximize c'x subject to A x (sense) b, x >= 0.
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<RowSense> sense;
  Eigen::VectorXd c;
};

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(const LinearProgram& lp) : m_(static_cast<int>(lp.A.rows())), n_(static_cast<int>(lp.A.cols())) {
    int slacks = 0;
    int artificials = 0;
    std::vector<RowSense> sense = lp.sense;
    std::vector<double> sign(m_, 1.0);
    for (int i = 0; i < m_; ++i) {
      if (lp.b(i) < 0.0) {
        sign[i] = -1.0;
        if (sense[i] == RowSense::less_equal) sense[i] = RowSense::greater_equal;
        else if (sense[i] == RowSense::greater_equal) sense[i] = RowSense::less_equal;
      }
      if (sense[i] != RowSense::equal) ++slacks;
      if (sense[i] != RowSense::less_equal) ++artificials;
    }
    first_artificial_ = n_ + slacks;
    cols_ = first_artificial_ + artificials;
    t_ = Eigen::MatrixXd::Zero(m_, cols_ + 1);
    basis_.assign(m_, -1);
    int next_slack = n_;
    int next_art = first_artificial_;
    for (int i = 0; i < m_; ++i) {
      t_.row(i).head(n_) = sign[i] * lp.A.row(i);
      t_(i, cols_) = sign[i] * lp.b(i);
      if (sense[i] == RowSense::less_equal) {
        t_(i, next_slack) = 1.0;
        basis_[i] = next_slack++;
      } else {
        if (sense[i] == RowSense::greater_equal) t_(i, next_slack++) = -1.0;
        t_(i, next_art) = 1.0;
        basis_[i] = next_art++;
      }
    }
    active_.assign(m_, true);
  }

  LpSolution solve(const Eigen::VectorXd& objective, int max_iterations) {
    LpSolution out;
    const double scale = std::max(1.0, t_.col(cols_).cwiseAbs().maxCoeff());
    if (first_artificial_ < cols_) {
      Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols_);
      phase1.tail(cols_ - first_artificial_).setConstant(-1.0);
      const LpStatus s1 = run(phase1, cols_, max_iterations, out.iterations);
      if (s1 != LpStatus::optimal) {
        out.status = LpStatus::numerical_failure;
        return out;
      }
      double infeasibility = 0.0;
      for (int i = 0; i < m_; ++i)
        if (active_[i] && basis_[i] >= first_artificial_) infeasibility += t_(i, cols_);
      if (infeasibility > 1e-9 * scale) {
        out.status = LpStatus::infeasible;
        return out;
      }
      drive_out_artificials();
    }
    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols_);
    phase2.head(n_) = objective;
    out.status = run(phase2, first_artificial_, max_iterations, out.iterations);
    if (out.status != LpStatus::optimal) return out;
    out.x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (active_[i] && basis_[i] < n_) out.x(basis_[i]) = std::max(0.0, t_(i, cols_));
    out.objective = objective.dot(out.x);
    return out;
  }

 private:
  static constexpr double kPivotTol = 1e-11;
  static constexpr double kReducedTol = 1e-11;

  Eigen::VectorXd reduced_costs(const Eigen::VectorXd& objective, int allowed) const {
    Eigen::VectorXd r = objective.head(allowed);
    for (int i = 0; i < m_; ++i) {
      if (!active_[i]) continue;
      const double cb = objective(basis_[i]);
      if (cb != 0.0) r -= cb * t_.row(i).head(allowed).transpose();
    }
    return r;
  }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double factor = t_(i, col);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
    }
    basis_[row] = col;
  }

  LpStatus run(const Eigen::VectorXd& objective, int allowed, int max_iterations, int& iterations) {
    int degenerate_run = 0;
    for (; iterations < max_iterations; ++iterations) {
      const Eigen::VectorXd r = reduced_costs(objective, allowed);
      const bool bland = degenerate_run > 50;
      int enter = -1;
      double best = kReducedTol;
      for (int j = 0; j < allowed; ++j) {
        if (r(j) > best) {
          enter = j;
          if (bland) break;
          best = r(j);
        }
      }
      if (enter < 0) return LpStatus::optimal;
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (!active_[i] || t_(i, enter) <= kPivotTol) continue;
        const double candidate = t_(i, cols_) / t_(i, enter);
        if (candidate < ratio - 1e-14 ||
            (std::abs(candidate - ratio) <= 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
          ratio = candidate;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    return LpStatus::numerical_failure;
  }

  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!active_[i] || basis_[i] < first_artificial_) continue;
      int col = -1;
      for (int j = 0; j < first_artificial_; ++j) {
        if (std::abs(t_(i, j)) > 1e-9) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(i, col);
      else active_[i] = false;  // redundant equality row
    }
  }

  int m_;
  int n_;
  int cols_ = 0;
  int first_artificial_ = 0;
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  std::vector<bool> active_;
};

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, int max_iterations = 100000) {
  if (lp.A.cols() != lp.c.size() || lp.A.rows() != lp.b.size() ||
      static_cast<std::size_t>(lp.A.rows()) != lp.sense.size())
    throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
  detail::Tableau tableau(lp);
  return tableau.solve(lp.c, max_iterations);
}

}  // namespace spidr
