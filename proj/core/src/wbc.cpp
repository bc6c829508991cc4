#include "biped/wbc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace biped {
namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

WrenchCone contactWrenchCone(double half_length, double half_width, double mu, double f_max) {
  if (!(half_length > 0.0) || !(half_width > 0.0))
    throw std::invalid_argument("wrench cone: patch dimensions must be positive");

  // u = [m_x, m_y, m_z, f_x, f_y, f_z] in the foot frame.
  // friction pyramid (4), CoP in the patch (4), yaw moment (2),
  // 0 <= f_z <= f_max (one interval row).
  WrenchCone cone;
  cone.A = MatX::Zero(11, 6);
  cone.lb = VecX::Constant(11, -kInf);
  cone.ub = VecX::Zero(11);

  int r = 0;
  auto row = [&](int a, double ca, int b, double cb) {
    cone.A(r, a) = ca;
    cone.A(r, b) = cb;
    ++r;
  };
  row(3, 1.0, 5, -mu);   //  f_x <= mu f_z
  row(3, -1.0, 5, -mu);  // -f_x <= mu f_z
  row(4, 1.0, 5, -mu);
  row(4, -1.0, 5, -mu);
  row(1, 1.0, 5, -half_length);   //  m_y <= l f_z (CoP behind the toe)
  row(1, -1.0, 5, -half_length);  // -m_y <= l f_z
  row(0, 1.0, 5, -half_width);
  row(0, -1.0, 5, -half_width);
  row(2, 1.0, 5, -mu * (half_length + half_width));
  row(2, -1.0, 5, -mu * (half_length + half_width));
  cone.A(r, 5) = 1.0;  // vertical force interval
  cone.lb(r) = 0.0;
  cone.ub(r) = f_max;
  return cone;
}

double coneViolation(const WrenchCone& cone, const Vec6& u) {
  const VecX v = cone.A * u;
  double worst = -kInf;
  for (long r = 0; r < v.size(); ++r) {
    if (cone.lb(r) > -kInf) worst = std::max(worst, cone.lb(r) - v(r));
    if (cone.ub(r) < kInf) worst = std::max(worst, v(r) - cone.ub(r));
  }
  return worst;
}

TaskSet buildTaskSet(const Dynamics& dyn, const WbcTargets& targets, const WbcConfig& config) {
  const RobotModel& model = dyn.kinematics().model();
  const int nv = model.nv();
  TaskSet set;

  const int torso_frame = model.frameIndex("torso");
  const MatX J_torso = dyn.kinematics().frameJacobian(torso_frame);
  const Vec6 jdv_torso = dyn.kinematics().frameJacobianDotV(torso_frame);
  const Iso3 X_torso = dyn.kinematics().framePose(torso_frame);
  const Vec6 tw_torso = dyn.kinematics().bodyTwist(model.frames[static_cast<size_t>(torso_frame)].body);

  {
    Task t;
    t.name = "torso_ori";
    t.A = J_torso.topRows<3>();
    t.adot_v = jdv_torso.head<3>();
    const Vec3 err = rotationError(targets.torso_R_des, X_torso.linear());
    const Vec3 derr = targets.torso_ang_vel_des - tw_torso.head<3>();
    t.rdot = config.ori.kp * err + config.ori.kd * derr;
    t.weight = config.w_torso_ori;
    set.tasks.push_back(std::move(t));
  }
  {
    Task t;
    t.name = "torso_height";
    const Vec3 p = X_torso.translation();
    t.A = J_torso.row(5);  // world-z velocity of the torso frame origin
    t.adot_v = VecX::Constant(1, jdv_torso(5));
    const Vec3 v_point = dyn.kinematics().pointVelocity(
        model.frames[static_cast<size_t>(torso_frame)].body, p);
    const double err = targets.height_des - p.z();
    const double derr = targets.height_vel_des - v_point.z();
    t.rdot = VecX::Constant(1, config.height.kp * err + config.height.kd * derr + targets.height_acc_ff);
    t.weight = config.w_height;
    set.tasks.push_back(std::move(t));
  }
  if (config.w_xy > 0.0) {
    // Horizontal torso placement. Force-level balance alone leaves this mode
    // unregulated when both feet sit at the same sagittal offset (a net
    // horizontal force always pitches the centroidal model), so the
    // whole-body layer owns it through the contact moments.
    Task t;
    t.name = "torso_xy";
    const Vec3 p = X_torso.translation();
    t.A = J_torso.middleRows<2>(3);  // world-xy velocity of the torso frame origin
    t.adot_v = jdv_torso.segment<2>(3);
    const Vec3 v_point = dyn.kinematics().pointVelocity(
        model.frames[static_cast<size_t>(torso_frame)].body, p);
    const Vec2 err = targets.torso_xy_des - p.head<2>();
    const Vec2 derr = targets.torso_xy_vel_des - v_point.head<2>();
    const TaskGains& g = targets.walking ? config.xy_walk : config.xy;
    t.rdot = g.kp * err + g.kd * derr;
    t.weight = config.w_xy;
    set.tasks.push_back(std::move(t));
  }

  static const char* kFootFrames[2] = {"l_foot", "r_foot"};
  for (int i = 0; i < 2; ++i) {
    if (targets.stance[static_cast<size_t>(i)]) continue;
    const int frame = model.frameIndex(kFootFrames[i]);
    Task t;
    t.name = std::string("swing_") + kFootFrames[i];
    const MatX J = dyn.kinematics().frameJacobian(frame);
    const Vec6 jdv = dyn.kinematics().frameJacobianDotV(frame);
    t.A = J.bottomRows<3>();
    t.adot_v = jdv.tail<3>();
    const Vec3 p = dyn.kinematics().framePose(frame).translation();
    const Vec3 v = dyn.kinematics().pointVelocity(model.frames[static_cast<size_t>(frame)].body, p);
    t.rdot = config.swing.kp * (targets.swing_pos[static_cast<size_t>(i)] - p) +
             config.swing.kd * (targets.swing_vel[static_cast<size_t>(i)] - v) +
             targets.swing_acc[static_cast<size_t>(i)];
    t.weight = config.w_swing;
    set.tasks.push_back(std::move(t));
  }

  {
    Task t;
    t.name = "posture";
    const int n_j = model.n_j;
    t.A = MatX::Zero(n_j, nv);
    t.A.rightCols(n_j).setIdentity();
    t.adot_v = VecX::Zero(n_j);
    const Configuration& conf = dyn.kinematics().configuration();
    const VecX q_des =
        targets.posture_q.size() == n_j ? targets.posture_q : model.nominal_posture;
    t.rdot = config.posture.kp * (q_des - conf.jointPos()) - config.posture.kd * conf.jointVel();
    t.weight = config.w_posture;
    set.tasks.push_back(std::move(t));
  }

  return set;
}

WbcOutput WbcController::solve(const Input& input) {
  const auto t_start = std::chrono::steady_clock::now();
  const Dynamics& dyn = *input.dyn;
  const RobotModel& model = dyn.kinematics().model();
  const int nv = model.nv();
  const int n_j = model.n_j;

  int n_c = 0;
  for (int i = 0; i < 2; ++i)
    if (input.stance[static_cast<size_t>(i)]) ++n_c;
  const int n_x = nv + n_j + 6 * n_c;

  // Stance-foot Jacobians in foot-local axes so cone rows and u_des line up.
  std::vector<MatX> J_c;
  std::vector<VecX> jdv_c;
  std::vector<int> feet;
  static const char* kFootFrames[2] = {"l_foot", "r_foot"};
  for (int i = 0; i < 2; ++i) {
    if (!input.stance[static_cast<size_t>(i)]) continue;
    const int frame = model.frameIndex(kFootFrames[i]);
    const Mat3 R = dyn.kinematics().framePose(frame).linear();
    MatX rot = MatX::Zero(6, 6);
    rot.topLeftCorner<3, 3>() = R.transpose();
    rot.bottomRightCorner<3, 3>() = R.transpose();
    J_c.push_back(rot * dyn.kinematics().frameJacobian(frame));
    jdv_c.push_back(rot * dyn.kinematics().frameJacobianDotV(frame));
    feet.push_back(i);
  }

  // Cost.
  MatX H = MatX::Zero(n_x, n_x);
  VecX g = VecX::Zero(n_x);
  for (const Task& t : input.tasks.tasks) {
    H.topLeftCorner(nv, nv) += 2.0 * t.weight * t.A.transpose() * t.A;
    g.head(nv) += 2.0 * t.weight * t.A.transpose() * (t.adot_v - t.rdot);
  }
  H.topLeftCorner(nv, nv).diagonal().array() += 2.0 * config_.eps_qdd;
  H.block(nv, nv, n_j, n_j).diagonal().array() += 2.0 * config_.w_tau;
  for (int c = 0; c < n_c; ++c) {
    const int off = nv + n_j + 6 * c;
    H.block(off, off, 6, 6).diagonal().array() += 2.0 * config_.w_wrench;
    g.segment(off, 6) = -2.0 * config_.w_wrench * input.u_des[static_cast<size_t>(feet[static_cast<size_t>(c)])];
  }

  // Equalities: full dynamics and stance no-motion.
  const int m_eq = nv + 6 * n_c;
  MatX A_eq = MatX::Zero(m_eq, n_x);
  VecX b_eq = VecX::Zero(m_eq);
  A_eq.topLeftCorner(nv, nv) = dyn.massMatrix();
  A_eq.block(6, nv, n_j, n_j) = -MatX::Identity(n_j, n_j);
  for (int c = 0; c < n_c; ++c)
    A_eq.block(0, nv + n_j + 6 * c, nv, 6) = -J_c[static_cast<size_t>(c)].transpose();
  b_eq.head(nv) = -dyn.biasForce();
  for (int c = 0; c < n_c; ++c) {
    A_eq.block(nv + 6 * c, 0, 6, nv) = J_c[static_cast<size_t>(c)];
    b_eq.segment(nv + 6 * c, 6) = -jdv_c[static_cast<size_t>(c)];
  }

  // Inequalities: wrench cones per stance foot.
  int cone_rows = 0;
  std::vector<WrenchCone> cones;
  for (int c = 0; c < n_c; ++c) {
    const size_t fi = static_cast<size_t>(feet[static_cast<size_t>(c)]);
    const FootPatch& patch = model.feet[fi];
    // load_scale ramps the vertical bound on a freshly landed foot so the
    // distribution shifts onto it gradually instead of slamming at touchdown.
    const double fmax = config_.f_max * std::clamp(input.load_scale[fi], 0.1, 1.0);
    cones.push_back(contactWrenchCone(patch.half_length, patch.half_width, config_.mu, fmax));
    cone_rows += static_cast<int>(cones.back().lb.size());
  }
  MatX A_in = MatX::Zero(cone_rows, n_x);
  VecX lb_in(cone_rows), ub_in(cone_rows);
  int r0 = 0;
  for (int c = 0; c < n_c; ++c) {
    const auto rows = static_cast<int>(cones[static_cast<size_t>(c)].lb.size());
    A_in.block(r0, nv + n_j + 6 * c, rows, 6) = cones[static_cast<size_t>(c)].A;
    lb_in.segment(r0, rows) = cones[static_cast<size_t>(c)].lb;
    ub_in.segment(r0, rows) = cones[static_cast<size_t>(c)].ub;
    r0 += rows;
  }

  // Bounds: torque limits; joint velocity limits folded into qdd bounds over
  // one control period.
  VecX lb = VecX::Constant(n_x, -kInf);
  VecX ub = VecX::Constant(n_x, kInf);
  lb.segment(nv, n_j) = -model.torque_limit;
  ub.segment(nv, n_j) = model.torque_limit;
  const Configuration& conf = dyn.kinematics().configuration();
  const VecX& v_j = model.velocity_limit;
  for (int j = 0; j < n_j; ++j) {
    const double vel = conf.v(6 + j);
    lb(6 + j) = (-v_j(j) - vel) / input.dt;
    ub(6 + j) = (v_j(j) - vel) / input.dt;
  }

  problem_ = QpProblem();
  problem_.H = H;
  problem_.g = g;
  problem_.A_eq = A_eq;
  problem_.b_eq = b_eq;
  problem_.A_in = A_in;
  problem_.lb_in = lb_in;
  problem_.ub_in = ub_in;
  problem_.lb = lb;
  problem_.ub = ub;

  std::vector<int> pattern{n_c, input.stance[0] ? 1 : 0, input.stance[1] ? 1 : 0};
  if (pattern != last_pattern_) solver_.reset();
  last_pattern_ = pattern;

  WbcOutput out;
  QpResult res;
  bool threw = false;
  try {
    res = solver_.solve(problem_);
  } catch (const std::invalid_argument&) {
    threw = true;
  }

  if (threw || res.status == QpStatus::Infeasible ||
      (res.status == QpStatus::MaxIterations && res.kkt_residual > 1e-4) || !res.x.allFinite()) {
    out.status = threw ? QpStatus::Infeasible : res.status;
    out.fallback = true;
    out.iterations = threw ? 0 : res.iterations;
    // First resort: reissue the last healthy command for a few ticks. A brief
    // hold keeps the stance loaded through a transient the solver choked on;
    // zeroing the wrenches instead kicks the robot mid-stride.
    if (hold_count_ < 5 && last_good_.tau.size() == n_j && last_good_pattern_ == pattern) {
      ++hold_count_;
      out.qdd = VecX::Zero(nv);
      out.tau = last_good_.tau;
      out.u = last_good_.u;
      out.solve_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      return out;
    }
    // Last resort: PD posture hold, never a non-finite torque.
    out.qdd = VecX::Zero(nv);
    const VecX& q_des = model.nominal_posture;
    out.tau = VecX::Zero(n_j);
    for (int j = 0; j < n_j; ++j) {
      const double t = config_.fallback.kp * (q_des(j) - conf.q(7 + j)) -
                       config_.fallback.kd * conf.v(6 + j);
      out.tau(j) = std::clamp(t, -model.torque_limit(j), model.torque_limit(j));
    }
    out.u = {Vec6::Zero(), Vec6::Zero()};
    out.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
  }
  hold_count_ = 0;

  out.status = res.status;
  out.qdd = res.x.head(nv);
  out.tau = res.x.segment(nv, n_j);
  for (int j = 0; j < n_j; ++j)
    out.tau(j) = std::clamp(out.tau(j), -model.torque_limit(j), model.torque_limit(j));
  out.u = {Vec6::Zero(), Vec6::Zero()};
  for (int c = 0; c < n_c; ++c)
    out.u[static_cast<size_t>(feet[static_cast<size_t>(c)])] = res.x.segment<6>(nv + n_j + 6 * c);
  out.iterations = res.iterations;
  out.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

VecX jointPd(const VecX& q_des, const VecX& v_des, const VecX& tau_ff, const VecX& q,
             const VecX& v, const VecX& kp, const VecX& kd, const VecX& tau_limit) {
  VecX tau = kp.cwiseProduct(q_des - q) + kd.cwiseProduct(v_des - v) + tau_ff;
  for (long j = 0; j < tau.size(); ++j)
    tau(j) = std::clamp(tau(j), -tau_limit(j), tau_limit(j));
  return tau;
}

}  // namespace biped
