#include "biped/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <json.hpp>

#include "biped/errors.hpp"

namespace biped {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHReg = 1e-10;   // Tikhonov on the Hessian factorization
constexpr double kSReg = 1e-12;   // on the working-set Schur complement

/// Row-form problem: every constraint is one row lo <= c'x <= up; rows with
/// lo == up are fixed (treated as equalities). Variable bounds are identity
/// rows appended after the general rows.
struct Rows {
  MatX C;
  VecX lo;
  VecX up;
  int m_eq = 0;  // leading rows that came from A_eq

  int count() const { return static_cast<int>(lo.size()); }
  bool fixed(int r) const { return lo(r) == up(r); }
};

Rows buildRows(const QpProblem& p) {
  const int n = p.n();
  const int me = p.numEq();
  const int mi = p.numIn();
  Rows rows;
  rows.m_eq = me;
  rows.C = MatX::Zero(me + mi + n, n);
  rows.lo = VecX::Constant(me + mi + n, -kInf);
  rows.up = VecX::Constant(me + mi + n, kInf);
  if (me > 0) {
    rows.C.topRows(me) = p.A_eq;
    rows.lo.head(me) = p.b_eq;
    rows.up.head(me) = p.b_eq;
  }
  if (mi > 0) {
    rows.C.middleRows(me, mi) = p.A_in;
    rows.lo.segment(me, mi) = p.lb_in;
    rows.up.segment(me, mi) = p.ub_in;
  }
  rows.C.bottomRows(n).setIdentity();
  if (p.lb.size() == n) rows.lo.tail(n) = p.lb;
  if (p.ub.size() == n) rows.up.tail(n) = p.ub;
  return rows;
}

double rowViolation(const Rows& rows, const VecX& cx, int r) {
  double v = 0.0;
  if (rows.lo(r) > -kInf) v = std::max(v, rows.lo(r) - cx(r));
  if (rows.up(r) < kInf) v = std::max(v, cx(r) - rows.up(r));
  return v;
}

double maxViolation(const Rows& rows, const VecX& x) {
  const VecX cx = rows.C * x;
  double v = 0.0;
  for (int r = 0; r < rows.count(); ++r) v = std::max(v, rowViolation(rows, cx, r));
  return v;
}

/// Equality-constrained subproblem solver over a fixed working set, with the
/// Hessian factorization shared across iterations. Two rounds of iterative
/// refinement keep residuals near machine precision even for stiff mixes of
/// weights.
class EqpSolver {
 public:
  EqpSolver(const MatX& H, const VecX& g) : H_(H), g_(g) {
    MatX Hr = H;
    Hr.diagonal().array() += kHReg;
    llt_.compute(Hr);
  }

  bool ok() const { return llt_.info() == Eigen::Success; }

  /// min 1/2 x'Hx + g'x  s.t.  C_W x = r_W. Returns x and multipliers with
  /// H x + g = C_W' lambda.
  void solve(const MatX& Cw, const VecX& rw, VecX* x, VecX* lambda) const {
    const long k = Cw.rows();
    if (k == 0) {
      *x = llt_.solve(-g_);
      lambda->resize(0);
      refine(Cw, rw, x, lambda);
      return;
    }
    const MatX HiCt = llt_.solve(Cw.transpose());
    MatX S = Cw * HiCt;
    S.diagonal().array() += kSReg;
    schur_.compute(S);
    const VecX x_free = llt_.solve(-g_);
    *lambda = schur_.solve(rw - Cw * x_free);
    *x = x_free + HiCt * (*lambda);
    refine(Cw, rw, x, lambda);
    refine(Cw, rw, x, lambda);
  }

 private:
  void refine(const MatX& Cw, const VecX& rw, VecX* x, VecX* lambda) const {
    VecX r1 = -(H_ * (*x) + g_);
    if (lambda->size() > 0) r1 += Cw.transpose() * (*lambda);
    if (Cw.rows() == 0) {
      *x += llt_.solve(r1);
      return;
    }
    const VecX r2 = rw - Cw * (*x);
    const VecX Hir1 = llt_.solve(r1);
    const VecX dl = schur_.solve(r2 - Cw * Hir1);
    const VecX dx = Hir1 + llt_.solve(Cw.transpose() * dl);
    *x += dx;
    *lambda += dl;
  }

  const MatX& H_;
  const VecX& g_;
  Eigen::LLT<MatX> llt_;
  mutable Eigen::LDLT<MatX> schur_;
};

struct CoreResult {
  QpStatus status = QpStatus::MaxIterations;
  VecX x;
  VecX lambda_rows;  // per row, 0 when inactive
  std::vector<int> working;
  int iterations = 0;
};

/// Primal active-set loop. x0 must satisfy every row within feas_tol and the
/// rows listed in w0 (near-)exactly.
CoreResult activeSetLoop(const Rows& rows, const MatX& H, const VecX& g, VecX x0,
                         std::vector<int> w0, const QpSolver::Options& opts, int max_iter,
                         int* eqp_count) {
  const int n = static_cast<int>(g.size());
  CoreResult res;
  EqpSolver eqp(H, g);
  if (!eqp.ok()) throw std::invalid_argument("qp: Hessian not positive semidefinite");

  std::vector<int> W = std::move(w0);
  VecX x = std::move(x0);

  auto gatherCw = [&](MatX* Cw, VecX* rw) {
    Cw->resize(static_cast<long>(W.size()), n);
    rw->resize(static_cast<long>(W.size()));
    for (size_t i = 0; i < W.size(); ++i) {
      const int r = W[i] / 2;
      Cw->row(static_cast<long>(i)) = rows.C.row(r);
      (*rw)(static_cast<long>(i)) = (W[i] & 1) ? rows.up(r) : rows.lo(r);
    }
  };

  std::vector<char> in_w(static_cast<size_t>(rows.count()), 0);
  for (int e : W) in_w[static_cast<size_t>(e / 2)] = 1;

  MatX Cw;
  VecX rw, x_eqp, lambda;
  gatherCw(&Cw, &rw);
  eqp.solve(Cw, rw, &x_eqp, &lambda);
  ++*eqp_count;

  int stall = 0;
  bool bland = false;

  for (int iter = 0; iter < max_iter; ++iter) {
    const VecX p = x_eqp - x;
    const double pn = p.lpNorm<Eigen::Infinity>();
    if (pn <= 1e-11 * (1.0 + x_eqp.lpNorm<Eigen::Infinity>())) {
      x = x_eqp;
      // Dual check over removable (non-fixed) working rows.
      int worst = -1;
      double worst_val = opts.dual_tol;
      for (size_t i = 0; i < W.size(); ++i) {
        const int r = W[i] / 2;
        if (rows.fixed(r)) continue;
        const double l = lambda(static_cast<long>(i));
        const double bad = (W[i] & 1) ? l : -l;  // wrong-signed magnitude
        if (bad > worst_val) {
          worst_val = bad;
          worst = static_cast<int>(i);
          if (bland) break;  // lowest index wins under Bland's rule
        }
      }
      if (worst < 0) {
        res.status = QpStatus::Optimal;
        res.x = x;
        res.lambda_rows = VecX::Zero(rows.count());
        for (size_t i = 0; i < W.size(); ++i)
          res.lambda_rows(W[i] / 2) = lambda(static_cast<long>(i));
        res.working = W;
        res.iterations = iter + 1;
        return res;
      }
      in_w[static_cast<size_t>(W[static_cast<size_t>(worst)] / 2)] = 0;
      W.erase(W.begin() + worst);
      gatherCw(&Cw, &rw);
      eqp.solve(Cw, rw, &x_eqp, &lambda);
      ++*eqp_count;
      continue;
    }

    // Ratio test: largest step along p keeping every inactive row feasible.
    double alpha = 1.0;
    int blocker = -1;
    const VecX cp = rows.C * p;
    const VecX cx = rows.C * x;
    for (int r = 0; r < rows.count(); ++r) {
      if (in_w[static_cast<size_t>(r)]) continue;
      const double v = cp(r);
      const double scale = 1.0 + std::abs(cx(r));
      if (std::abs(v) <= 1e-13 * scale) continue;
      double a, side;
      if (v > 0.0) {
        if (rows.up(r) >= kInf) continue;
        a = (rows.up(r) - cx(r)) / v;
        side = 1;
      } else {
        if (rows.lo(r) <= -kInf) continue;
        a = (rows.lo(r) - cx(r)) / v;
        side = 0;
      }
      a = std::max(a, 0.0);
      if (a < alpha - 1e-12 || (bland && a <= alpha && blocker > 2 * r)) {
        alpha = a;
        blocker = 2 * r + static_cast<int>(side);
      }
    }

    if (blocker < 0) {
      x = x_eqp;  // full step; next pass does the dual check
      continue;
    }

    x += alpha * p;
    if (alpha <= 1e-13) {
      if (++stall > rows.count() + n) bland = true;
    } else {
      stall = 0;
    }
    W.push_back(blocker);
    in_w[static_cast<size_t>(blocker / 2)] = 1;
    gatherCw(&Cw, &rw);
    eqp.solve(Cw, rw, &x_eqp, &lambda);
    ++*eqp_count;
  }

  res.status = QpStatus::MaxIterations;
  res.x = x;
  res.lambda_rows = VecX::Zero(rows.count());
  for (size_t i = 0; i < W.size(); ++i)
    if (static_cast<long>(i) < lambda.size()) res.lambda_rows(W[i] / 2) = lambda(static_cast<long>(i));
  res.working = W;
  res.iterations = max_iter;
  return res;
}

/// Minimal-change projection of x onto the fixed rows plus the rows active at
/// x, with a short repair loop for rows the projection pushes out of range.
bool polishFeasible(const Rows& rows, VecX* x, double feas_tol) {
  std::vector<int> act;
  std::vector<char> in_act(static_cast<size_t>(rows.count()), 0);
  VecX cx = rows.C * (*x);
  for (int r = 0; r < rows.count(); ++r) {
    if (rows.fixed(r)) {
      act.push_back(2 * r);
      in_act[static_cast<size_t>(r)] = 1;
    } else if (rows.lo(r) > -kInf && cx(r) <= rows.lo(r) + 1e-9 * (1.0 + std::abs(rows.lo(r)))) {
      act.push_back(2 * r);
      in_act[static_cast<size_t>(r)] = 1;
    } else if (rows.up(r) < kInf && cx(r) >= rows.up(r) - 1e-9 * (1.0 + std::abs(rows.up(r)))) {
      act.push_back(2 * r + 1);
      in_act[static_cast<size_t>(r)] = 1;
    }
  }

  for (int round = 0; round < 6; ++round) {
    if (!act.empty()) {
      MatX Ca(static_cast<long>(act.size()), rows.C.cols());
      VecX ra(static_cast<long>(act.size()));
      for (size_t i = 0; i < act.size(); ++i) {
        const int r = act[i] / 2;
        Ca.row(static_cast<long>(i)) = rows.C.row(r);
        ra(static_cast<long>(i)) = (act[i] & 1) ? rows.up(r) : rows.lo(r);
      }
      Eigen::CompleteOrthogonalDecomposition<MatX> cod(Ca);
      *x += cod.solve(ra - Ca * (*x));
    }
    cx = rows.C * (*x);
    bool added = false;
    for (int r = 0; r < rows.count(); ++r) {
      if (in_act[static_cast<size_t>(r)]) continue;
      if (rowViolation(rows, cx, r) > feas_tol) {
        act.push_back(cx(r) < rows.lo(r) ? 2 * r : 2 * r + 1);
        in_act[static_cast<size_t>(r)] = 1;
        added = true;
      }
    }
    if (!added) break;
  }
  return maxViolation(rows, *x) <= 10.0 * feas_tol;
}

}  // namespace

QpProblem QpProblem::Unconstrained(const MatX& H, const VecX& g) {
  QpProblem p;
  p.H = H;
  p.g = g;
  const int n = static_cast<int>(g.size());
  p.A_eq = MatX::Zero(0, n);
  p.b_eq = VecX::Zero(0);
  p.A_in = MatX::Zero(0, n);
  p.lb_in = VecX::Zero(0);
  p.ub_in = VecX::Zero(0);
  p.lb = VecX::Constant(n, -kInf);
  p.ub = VecX::Constant(n, kInf);
  return p;
}

const char* toString(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max_iter";
  }
  return "unknown";
}

double KktResidual::max() const {
  return std::max(stationarity, std::max(primal, complementarity));
}

KktResidual qpKktResidual(const QpProblem& p, const VecX& x, const VecX& dual_eq,
                          const VecX& dual_in, const VecX& dual_bounds) {
  const int n = p.n();
  if (x.size() != n || dual_eq.size() != p.numEq() || dual_in.size() != p.numIn() ||
      dual_bounds.size() != n) {
    throw std::invalid_argument("kkt residual: dimension mismatch");
  }

  KktResidual res;
  VecX st = p.H * x + p.g - dual_bounds;
  if (p.numEq() > 0) st -= p.A_eq.transpose() * dual_eq;
  if (p.numIn() > 0) st -= p.A_in.transpose() * dual_in;
  res.stationarity = st.lpNorm<Eigen::Infinity>();

  auto side = [&](double val, double lo, double up, double dual) {
    if (lo > -kInf) res.primal = std::max(res.primal, lo - val);
    if (up < kInf) res.primal = std::max(res.primal, val - up);
    if (dual > 0.0 && lo > -kInf)
      res.complementarity = std::max(res.complementarity, std::abs(dual * (val - lo)));
    else if (dual < 0.0 && up < kInf)
      res.complementarity = std::max(res.complementarity, std::abs(dual * (up - val)));
  };

  if (p.numEq() > 0) {
    res.primal = std::max(res.primal, (p.A_eq * x - p.b_eq).lpNorm<Eigen::Infinity>());
  }
  if (p.numIn() > 0) {
    const VecX ax = p.A_in * x;
    for (int i = 0; i < p.numIn(); ++i) side(ax(i), p.lb_in(i), p.ub_in(i), dual_in(i));
  }
  for (int j = 0; j < n; ++j) {
    const double lo = p.lb.size() == n ? p.lb(j) : -kInf;
    const double up = p.ub.size() == n ? p.ub(j) : kInf;
    side(x(j), lo, up, dual_bounds(j));
  }
  return res;
}

QpResult QpSolver::solve(const QpProblem& problem) {
  VecX x0 = VecX::Zero(problem.n());
  return solve(problem, x0);
}

QpResult QpSolver::solve(const QpProblem& problem, const VecX& x0) {
  if (opts_.warm_start && problem.n() == last_n_ &&
      problem.numEq() + problem.numIn() + problem.n() == last_rows_) {
    return solve(problem, x0, working_set_);
  }
  return solve(problem, x0, {});
}

QpResult QpSolver::solve(const QpProblem& problem, const VecX& x0,
                         const std::vector<int>& warm_set) {
  const int n = problem.n();
  if (problem.H.rows() != n || problem.H.cols() != n) throw std::invalid_argument("qp: H shape");
  if (problem.A_eq.rows() != problem.b_eq.size() || (problem.A_eq.size() > 0 && problem.A_eq.cols() != n))
    throw std::invalid_argument("qp: A_eq shape");
  if (problem.A_in.rows() != problem.lb_in.size() || problem.lb_in.size() != problem.ub_in.size() ||
      (problem.A_in.size() > 0 && problem.A_in.cols() != n))
    throw std::invalid_argument("qp: A_in shape");

  const Rows rows = buildRows(problem);
  const int m_r = rows.count();
  const int max_iter = opts_.max_iterations > 0 ? opts_.max_iterations : 10 * (n + m_r);

  // Start from x0 clamped into the variable bounds.
  VecX x = x0.size() == n ? x0 : VecX::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double lo = rows.lo(rows.m_eq + problem.numIn() + j);
    const double up = rows.up(rows.m_eq + problem.numIn() + j);
    x(j) = std::min(std::max(x(j), lo), up);
  }

  // Fixed rows always belong to the working set.
  std::vector<int> w0;
  std::vector<char> present(static_cast<size_t>(m_r), 0);
  for (int r = 0; r < m_r; ++r) {
    if (rows.fixed(r)) {
      w0.push_back(2 * r);
      present[static_cast<size_t>(r)] = 1;
    }
  }
  for (int e : warm_set) {
    const int r = e / 2;
    if (r < 0 || r >= m_r || present[static_cast<size_t>(r)] || rows.fixed(r)) continue;
    if ((e & 1) ? rows.up(r) >= kInf : rows.lo(r) <= -kInf) continue;
    w0.push_back(e);
    present[static_cast<size_t>(r)] = 1;
  }
  std::sort(w0.begin(), w0.end());

  int eqp_count = 0;
  QpResult out;

  // Probe the working-set point; when it is primal feasible the active-set
  // loop can start there directly, and a warm start from the previous optimum
  // terminates immediately.
  {
    EqpSolver eqp(problem.H, problem.g);
    if (!eqp.ok()) throw std::invalid_argument("qp: Hessian not positive semidefinite");
    MatX Cw(static_cast<long>(w0.size()), n);
    VecX rw(static_cast<long>(w0.size()));
    for (size_t i = 0; i < w0.size(); ++i) {
      const int r = w0[i] / 2;
      Cw.row(static_cast<long>(i)) = rows.C.row(r);
      rw(static_cast<long>(i)) = (w0[i] & 1) ? rows.up(r) : rows.lo(r);
    }
    VecX x_probe, lambda;
    eqp.solve(Cw, rw, &x_probe, &lambda);
    if (x_probe.allFinite() && maxViolation(rows, x_probe) <= opts_.feas_tol * 10.0) {
      x = x_probe;
    } else {
      // Phase 1: elastic slacks on the equality and general rows, hard
      // variable bounds, then an exact projection polish.
      const int m_es = rows.m_eq + problem.numIn();
      bool feasible = maxViolation(rows, x) <= opts_.feas_tol;
      if (!feasible && m_es == 0) {
        // Only bounds: the clamp above already satisfies them.
        feasible = true;
      }
      if (!feasible) {
        const int nz = n + m_es;
        MatX He = MatX::Zero(nz, nz);
        He.topLeftCorner(n, n).diagonal().setConstant(1e-8);
        He.bottomRightCorner(m_es, m_es).setIdentity();
        VecX ge = VecX::Zero(nz);
        ge.head(n) = -1e-8 * x;

        Rows erows;
        erows.m_eq = 0;
        erows.C = MatX::Zero(m_es + nz, nz);
        erows.lo = VecX::Constant(m_es + nz, -kInf);
        erows.up = VecX::Constant(m_es + nz, kInf);
        erows.C.topLeftCorner(m_es, n) = rows.C.topRows(m_es);
        erows.C.block(0, n, m_es, m_es) = -MatX::Identity(m_es, m_es);
        erows.lo.head(m_es) = rows.lo.head(m_es);
        erows.up.head(m_es) = rows.up.head(m_es);
        erows.C.bottomRows(nz).setIdentity();
        erows.lo.segment(m_es, n) = rows.lo.tail(n);
        erows.up.segment(m_es, n) = rows.up.tail(n);

        VecX z0 = VecX::Zero(nz);
        z0.head(n) = x;
        const VecX cx = rows.C.topRows(m_es) * x;
        std::vector<int> we;
        for (int r = 0; r < m_es; ++r) {
          double s = 0.0;
          if (cx(r) < rows.lo(r)) s = cx(r) - rows.lo(r);
          if (cx(r) > rows.up(r)) s = cx(r) - rows.up(r);
          z0(n + r) = s;
          if (erows.fixed(r)) we.push_back(2 * r);
        }
        const CoreResult el =
            activeSetLoop(erows, He, ge, z0, we, opts_, 10 * (nz + m_es + nz), &eqp_count);
        x = el.x.head(n);
      }
      if (!polishFeasible(rows, &x, opts_.feas_tol)) {
        out.status = QpStatus::Infeasible;
        out.x = x;
        out.dual_eq = VecX::Zero(problem.numEq());
        out.dual_in = VecX::Zero(problem.numIn());
        out.dual_bounds = VecX::Zero(n);
        out.iterations = eqp_count;
        out.kkt_residual = maxViolation(rows, x);
        working_set_.clear();
        last_n_ = n;
        last_rows_ = m_r;
        return out;
      }
      // Restart the working set from the fixed rows only; the loop rebuilds
      // the rest from blocking constraints.
      w0.clear();
      for (int r = 0; r < m_r; ++r)
        if (rows.fixed(r)) w0.push_back(2 * r);
    }
  }

  CoreResult core = activeSetLoop(rows, problem.H, problem.g, x, w0, opts_, max_iter, &eqp_count);

  out.status = core.status;
  out.x = core.x;
  out.iterations = eqp_count;
  out.dual_eq = VecX::Zero(problem.numEq());
  out.dual_in = VecX::Zero(problem.numIn());
  out.dual_bounds = VecX::Zero(n);
  for (int r = 0; r < problem.numEq(); ++r) out.dual_eq(r) = core.lambda_rows(r);
  for (int r = 0; r < problem.numIn(); ++r) out.dual_in(r) = core.lambda_rows(rows.m_eq + r);
  for (int j = 0; j < n; ++j) out.dual_bounds(j) = core.lambda_rows(rows.m_eq + problem.numIn() + j);
  for (int e : core.working) {
    if (e / 2 >= rows.m_eq) out.active_set.push_back(e - 2 * rows.m_eq);
  }
  out.kkt_residual =
      qpKktResidual(problem, out.x, out.dual_eq, out.dual_in, out.dual_bounds).max();

  working_set_ = core.working;
  last_n_ = n;
  last_rows_ = m_r;
  return out;
}

void QpSolver::reset() {
  working_set_.clear();
  last_n_ = -1;
  last_rows_ = -1;
}

std::string QpSolver::dumpState() const {
  nlohmann::json j;
  j["n"] = last_n_;
  j["rows"] = last_rows_;
  j["working_set"] = working_set_;
  return j.dump();
}

void QpSolver::restoreState(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  last_n_ = j.at("n").get<int>();
  last_rows_ = j.at("rows").get<int>();
  working_set_ = j.at("working_set").get<std::vector<int>>();
}

}  // namespace biped
