#pragma once

#include <string>
#include <vector>

#include "biped/spatial.hpp"

namespace biped {

/// Convex quadratic program
///   min  1/2 x' H x + g' x
///   s.t. A_eq x  = b_eq
///        lb_in <= A_in x <= ub_in
///        lb    <=   x    <= ub
/// H must be symmetric positive semidefinite; infinite bounds mark absent
/// sides.
struct QpProblem {
  MatX H;
  VecX g;
  MatX A_eq;
  VecX b_eq;
  MatX A_in;
  VecX lb_in;
  VecX ub_in;
  VecX lb;
  VecX ub;

  int n() const { return static_cast<int>(g.size()); }
  int numEq() const { return static_cast<int>(b_eq.size()); }
  int numIn() const { return static_cast<int>(lb_in.size()); }

  static QpProblem Unconstrained(const MatX& H, const VecX& g);
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

const char* toString(QpStatus status);

struct QpResult {
  QpStatus status = QpStatus::MaxIterations;
  VecX x;
  /// Multipliers of the equality rows (free sign).
  VecX dual_eq;
  /// Multipliers of the general inequality rows: >= 0 when the lower side is
  /// active, <= 0 when the upper side is, 0 when inactive.
  VecX dual_in;
  /// Multipliers of the variable bounds, same sign convention.
  VecX dual_bounds;
  /// Final working set, encoded 2*row + (1 if the upper side). Rows are
  /// ordered general inequalities then bounds; equalities are always active
  /// and not listed.
  std::vector<int> active_set;
  int iterations = 0;
  /// max(stationarity, feasibility, complementarity) infinity norms at x.
  double kkt_residual = 0.0;
};

/// Primal active-set solver for dense strictly convex QPs. Keeps its working
/// set between calls so that a sequence of nearby problems of fixed shape
/// resolves in a few iterations.
class QpSolver {
 public:
  struct Options {
    int max_iterations = 0;      // 0: 10 * (n + rows)
    double feas_tol = 1e-9;      // constraint violation accepted as active
    double dual_tol = 1e-10;     // multiplier magnitude treated as zero
    bool warm_start = true;      // reuse the stored working set when shapes match
  };

  QpSolver() = default;
  explicit QpSolver(const Options& opts) : opts_(opts) {}

  QpResult solve(const QpProblem& problem);
  QpResult solve(const QpProblem& problem, const VecX& x0);
  QpResult solve(const QpProblem& problem, const VecX& x0, const std::vector<int>& warm_set);

  Options& options() { return opts_; }

  void reset();  // drop the stored working set

  /// The working set as stored: 2*row + (1 if the upper side is active).
  /// Rows are ordered equalities, general inequalities, then bounds.
  const std::vector<int>& activeSet() const { return working_set_; }

  /// Serializes/restores the warm-start state (JSON).
  std::string dumpState() const;
  void restoreState(const std::string& json_text);

 private:
  Options opts_;
  std::vector<int> working_set_;
  int last_n_ = -1;
  int last_rows_ = -1;
};

/// Exact KKT residuals of a candidate solution (no tolerances applied).
struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double max() const;
};

KktResidual qpKktResidual(const QpProblem& problem, const VecX& x, const VecX& dual_eq,
                          const VecX& dual_in, const VecX& dual_bounds);

}  // namespace biped
