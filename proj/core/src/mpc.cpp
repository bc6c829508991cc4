#include "biped/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace biped {
namespace {

/// Inverse ZYX Euler-rate map: Θdot = Einv(Θ) ω for world-frame ω.
Mat3 eulerRateInv(const Vec3& rpy) {
  const double ct = std::cos(rpy(1));
  const double tt = std::tan(rpy(1));
  const double cp = std::cos(rpy(2));
  const double sp = std::sin(rpy(2));
  Mat3 E;
  E << cp / ct, sp / ct, 0.0,
      -sp, cp, 0.0,
      cp * tt, sp * tt, 1.0;
  return E;
}

/// d(Einv(Θ) ω)/dΘ, columns ordered (roll, pitch, yaw).
Mat3 eulerRateInvJacobian(const Vec3& rpy, const Vec3& w) {
  const double ct = std::cos(rpy(1));
  const double st = std::sin(rpy(1));
  const double tt = st / ct;
  const double cp = std::cos(rpy(2));
  const double sp = std::sin(rpy(2));
  const double u = cp * w(0) + sp * w(1);
  const double du = -sp * w(0) + cp * w(1);
  Mat3 J = Mat3::Zero();
  J(0, 1) = u * st / (ct * ct);
  J(2, 1) = u / (ct * ct);
  J(0, 2) = du / ct;
  J(1, 2) = -u;
  J(2, 2) = du * tt;
  return J;
}

}  // namespace

Vec12 SrbState::vec() const {
  Vec12 x;
  x << pos, rpy, lin_vel, ang_vel;
  return x;
}

SrbState SrbState::FromVec(const Vec12& x) {
  SrbState s;
  s.pos = x.segment<3>(0);
  s.rpy = x.segment<3>(3);
  s.lin_vel = x.segment<3>(6);
  s.ang_vel = x.segment<3>(9);
  return s;
}

Vec12 srbStep(const Vec12& x, const std::vector<Vec3>& forces, const std::vector<Vec3>& arms,
              const Mat3& I_w, double mass, const Vec3& gravity, double dt) {
  Vec3 f_total = Vec3::Zero();
  Vec3 m_total = Vec3::Zero();
  for (size_t i = 0; i < forces.size(); ++i) {
    f_total += forces[i];
    m_total += arms[i].cross(forces[i]);
  }
  Vec12 out;
  out.segment<3>(0) = x.segment<3>(0) + dt * x.segment<3>(6);
  out.segment<3>(3) = x.segment<3>(3) + dt * (eulerRateInv(x.segment<3>(3)) * x.segment<3>(9));
  out.segment<3>(6) = x.segment<3>(6) + dt * (f_total / mass + gravity);
  out.segment<3>(9) = x.segment<3>(9) + dt * I_w.ldlt().solve(m_total);
  return out;
}

SrbLinearization linearizeSrb(const Vec12& x0, const std::vector<Vec3>& arms, const Mat3& I_w,
                              double mass, const Vec3& gravity, double dt) {
  SrbLinearization lin;
  lin.A = Mat12::Identity();
  lin.A.block<3, 3>(0, 6) = dt * Mat3::Identity();
  lin.A.block<3, 3>(3, 3) += dt * eulerRateInvJacobian(x0.segment<3>(3), x0.segment<3>(9));
  lin.A.block<3, 3>(3, 9) = dt * eulerRateInv(x0.segment<3>(3));

  const Mat3 I_inv = I_w.inverse();
  lin.B = MatX::Zero(12, 3 * static_cast<long>(arms.size()));
  for (size_t i = 0; i < arms.size(); ++i) {
    lin.B.block<3, 3>(6, 3 * static_cast<long>(i)) = (dt / mass) * Mat3::Identity();
    lin.B.block<3, 3>(9, 3 * static_cast<long>(i)) = dt * I_inv * skew(arms[i]);
  }

  const Vec12 x1 = srbStep(x0, {}, {}, I_w, mass, gravity, dt);
  lin.c = x1 - lin.A * x0;
  return lin;
}

Vec3 planFoothold(const Vec3& hip_pos, const Vec3& com_vel, const Vec3& v_cmd, double t_stance,
                  const FootholdParams& params) {
  Vec3 p = hip_pos;
  p.z() = 0.0;
  p.x() += 0.5 * t_stance * com_vel.x() + params.k_raibert * (com_vel.x() - v_cmd.x());
  p.y() += params.k_lateral * (com_vel.y() - v_cmd.y());
  p.x() = std::clamp(p.x(), hip_pos.x() - params.reach_x, hip_pos.x() + params.reach_x);
  p.y() = std::clamp(p.y(), hip_pos.y() - params.reach_y, hip_pos.y() + params.reach_y);
  return p;
}

MpcPlan MpcController::solve(const MpcInput& input) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = static_cast<int>(input.schedule.size());
  MpcPlan plan;
  plan.footholds = input.footholds;

  if (N == 0 || input.mass <= 0.0) {
    plan.status = QpStatus::Infeasible;
    return plan;
  }
  for (const auto& row : input.schedule) {
    if (!row[0] && !row[1]) {
      plan.status = QpStatus::Infeasible;  // flight steps are not modeled
      return plan;
    }
  }

  const Vec12 x0 = input.state.vec();
  const double dt = config_.dt;
  const double g_mag = input.gravity.norm();

  // Reference trajectory from the command, anchored at command.xy_ref.
  MatX Xref(12, N);
  for (int k = 0; k < N; ++k) {
    const double t = dt * static_cast<double>(k + 1);
    Vec12 r = Vec12::Zero();
    r.segment<2>(0) = input.command.xy_ref + t * input.command.v_cmd.head<2>();
    const Vec2 dxy = r.segment<2>(0) - input.state.pos.head<2>();
    r(2) = input.command.terrain_z + input.command.terrain_slope.dot(dxy) + input.command.height;
    r(5) = input.command.yaw + input.command.yaw_rate * t;
    r.segment<2>(6) = input.command.v_cmd.head<2>();
    r(8) = input.command.terrain_slope.dot(input.command.v_cmd.head<2>());
    r(11) = input.command.yaw_rate;
    Xref.col(k) = r;
  }

  // Stance-force application points: a foot continuously in stance since now
  // keeps its current position; a foot that lands within the horizon uses its
  // planned foothold.
  std::array<Vec3, 2> landed_pos = input.foot_pos;
  std::array<bool, 2> broke{false, false};
  std::vector<std::array<Vec3, 2>> points(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < 2; ++i) {
      if (!input.schedule[static_cast<size_t>(k)][static_cast<size_t>(i)]) {
        broke[static_cast<size_t>(i)] = true;
      } else if (broke[static_cast<size_t>(i)]) {
        landed_pos[static_cast<size_t>(i)] = input.footholds[static_cast<size_t>(i)];
      }
      points[static_cast<size_t>(k)][static_cast<size_t>(i)] = landed_pos[static_cast<size_t>(i)];
    }
  }

  // Variable layout: step-major stance forces.
  std::vector<int> offset(static_cast<size_t>(N), 0);
  int n_u = 0;
  std::vector<int> pattern;
  for (int k = 0; k < N; ++k) {
    offset[static_cast<size_t>(k)] = n_u;
    for (int i = 0; i < 2; ++i)
      if (input.schedule[static_cast<size_t>(k)][static_cast<size_t>(i)]) n_u += 3;
    pattern.push_back((input.schedule[static_cast<size_t>(k)][0] ? 1 : 0) +
                      (input.schedule[static_cast<size_t>(k)][1] ? 2 : 0));
  }

  // Condensed prediction X = Sx x0 + Su U + Sc.
  MatX Su = MatX::Zero(12 * N, n_u);
  MatX Sx = MatX::Zero(12 * N, 12);
  VecX Sc = VecX::Zero(12 * N);
  VecX U_ref = VecX::Zero(n_u);

  SrbLinearization lin;
  for (int k = 0; k < N; ++k) {
    // moment arms relative to the reference CoM at step k
    std::vector<Vec3> arms;
    int n_stance = 0;
    for (int i = 0; i < 2; ++i) {
      if (input.schedule[static_cast<size_t>(k)][static_cast<size_t>(i)]) {
        arms.push_back(points[static_cast<size_t>(k)][static_cast<size_t>(i)] -
                       Vec3(Xref(0, k), Xref(1, k), Xref(2, k)));
        ++n_stance;
      }
    }
    lin = linearizeSrb(x0, arms, input.I_world, input.mass, input.gravity, dt);

    const auto kk = static_cast<long>(k);
    if (k == 0) {
      Sx.middleRows<12>(0) = lin.A;
      Sc.segment<12>(0) = lin.c;
    } else {
      Sx.middleRows<12>(12 * kk) = lin.A * Sx.middleRows<12>(12 * (kk - 1));
      Sc.segment<12>(12 * kk) = lin.A * Sc.segment<12>(12 * (kk - 1)) + lin.c;
      Su.middleRows<12>(12 * kk) = lin.A * Su.middleRows<12>(12 * (kk - 1));
    }
    Su.block(12 * kk, offset[static_cast<size_t>(k)], 12, 3 * n_stance) = lin.B;

    for (int i = 0, slot = 0; i < 2; ++i) {
      if (!input.schedule[static_cast<size_t>(k)][static_cast<size_t>(i)]) continue;
      U_ref(offset[static_cast<size_t>(k)] + 3 * slot + 2) =
          input.mass * g_mag / static_cast<double>(n_stance);
      ++slot;
    }
  }

  // Weighted condensed cost.
  const Vec12& qw = input.walking ? config_.state_weight_walk : config_.state_weight;
  VecX qdiag(12 * N);
  for (int k = 0; k < N; ++k) qdiag.segment<12>(12 * static_cast<long>(k)) = qw;
  const VecX xref_stacked = Eigen::Map<const VecX>(Xref.data(), 12 * N);
  const VecX d = Sx * x0 + Sc - xref_stacked;

  problem_ = QpProblem();
  problem_.H = 2.0 * (Su.transpose() * qdiag.asDiagonal() * Su);
  problem_.H.diagonal().array() += 2.0 * config_.force_weight;
  problem_.g = 2.0 * (Su.transpose() * (qdiag.asDiagonal() * d)) -
               2.0 * config_.force_weight * U_ref;

  // Friction pyramid rows and vertical force bounds.
  const int n_feet_steps = n_u / 3;
  problem_.A_in = MatX::Zero(4 * n_feet_steps, n_u);
  problem_.lb_in = VecX::Constant(4 * n_feet_steps, -std::numeric_limits<double>::infinity());
  problem_.ub_in = VecX::Zero(4 * n_feet_steps);
  problem_.lb = VecX::Constant(n_u, -std::numeric_limits<double>::infinity());
  problem_.ub = VecX::Constant(n_u, std::numeric_limits<double>::infinity());
  for (int b = 0; b < n_feet_steps; ++b) {
    const int col = 3 * b;
    const int row = 4 * b;
    problem_.A_in(row + 0, col + 0) = 1.0;
    problem_.A_in(row + 0, col + 2) = -config_.mu;
    problem_.A_in(row + 1, col + 0) = -1.0;
    problem_.A_in(row + 1, col + 2) = -config_.mu;
    problem_.A_in(row + 2, col + 1) = 1.0;
    problem_.A_in(row + 2, col + 2) = -config_.mu;
    problem_.A_in(row + 3, col + 1) = -1.0;
    problem_.A_in(row + 3, col + 2) = -config_.mu;
    problem_.lb(col + 2) = config_.f_min;
    problem_.ub(col + 2) = config_.f_max;
    if (config_.mu == 0.0) {
      problem_.lb(col + 0) = problem_.ub(col + 0) = 0.0;
      problem_.lb(col + 1) = problem_.ub(col + 1) = 0.0;
    }
  }
  problem_.A_eq = MatX::Zero(0, n_u);
  problem_.b_eq = VecX::Zero(0);

  if (pattern != last_pattern_) solver_.reset();
  last_pattern_ = pattern;

  QpResult res = solver_.solve(problem_, U_ref);

  plan.status = res.status;
  plan.iterations = res.iterations;
  plan.forces.assign(static_cast<size_t>(N), {Vec3::Zero(), Vec3::Zero()});
  if (res.status != QpStatus::Infeasible) {
    for (int k = 0; k < N; ++k) {
      int slot = 0;
      for (int i = 0; i < 2; ++i) {
        if (!input.schedule[static_cast<size_t>(k)][static_cast<size_t>(i)]) continue;
        Vec3 f = res.x.segment<3>(offset[static_cast<size_t>(k)] + 3 * slot);
        if (config_.mu == 0.0) f.head<2>().setZero();
        plan.forces[static_cast<size_t>(k)][static_cast<size_t>(i)] = f;
        ++slot;
      }
    }
    const VecX X = Sx * x0 + Su * res.x + Sc;
    plan.predicted.resize(static_cast<size_t>(N));
    for (int k = 0; k < N; ++k)
      plan.predicted[static_cast<size_t>(k)] = SrbState::FromVec(X.segment<12>(12 * static_cast<long>(k)));
  }

  plan.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return plan;
}

}  // namespace biped
