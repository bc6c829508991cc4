#pragma once

#include <array>
#include <string>
#include <vector>

#include "biped/dynamics.hpp"
#include "biped/qp.hpp"

namespace biped {

/// One weighted motion task: drive A_t qdd + adot_v toward rdot.
struct Task {
  std::string name;
  MatX A;       // k x nv task Jacobian
  VecX adot_v;  // k, the Jacobian-rate term (Adot * v)
  VecX rdot;    // k, commanded task dynamics
  double weight = 1.0;
};

struct TaskSet {
  std::vector<Task> tasks;
};

/// lb <= A u <= ub on one flat-foot contact wrench u = [moment; force] in the
/// foot frame: friction pyramid, center of pressure inside the patch, yaw
/// moment bound, and vertical force bounds.
struct WrenchCone {
  MatX A;
  VecX lb;
  VecX ub;
};

WrenchCone contactWrenchCone(double half_length, double half_width, double mu, double f_max);

/// Largest constraint violation of u against the cone (<= 0 when feasible).
double coneViolation(const WrenchCone& cone, const Vec6& u);

struct TaskGains {
  double kp = 0.0;
  double kd = 0.0;
};

struct WbcConfig {
  // Task weights.
  double w_torso_ori = 100.0;
  double w_height = 100.0;
  double w_xy = 20.0;
  double w_swing = 50.0;
  double w_posture = 1.0;
  double w_wrench = 1.0;
  double w_tau = 1e-3;
  double eps_qdd = 1e-6;  // acceleration regularization

  TaskGains ori{400.0, 40.0};
  TaskGains height{400.0, 40.0};
  // Horizontal torso placement (the ankle-strategy channel): soft, so the
  // contact wrenches realize it only when the cones allow. Walking uses the
  // lighter gains — foot placement owns position there, the task only damps.
  TaskGains xy{30.0, 10.0};
  TaskGains xy_walk{4.0, 6.0};
  TaskGains swing{400.0, 40.0};
  TaskGains posture{100.0, 10.0};

  double mu = 0.6;      // wrench-cone friction
  double f_max = 500.0;  // wrench-cone vertical bound, N

  // Fallback joint PD (posture hold) used when the QP fails.
  TaskGains fallback{60.0, 3.0};
};

/// Instantaneous targets the task set is built from.
struct WbcTargets {
  Mat3 torso_R_des = Mat3::Identity();
  Vec3 torso_ang_vel_des = Vec3::Zero();   // world
  double height_des = 0.0;                 // torso frame z
  double height_vel_des = 0.0;
  double height_acc_ff = 0.0;
  Vec2 torso_xy_des = Vec2::Zero();        // torso frame world xy
  Vec2 torso_xy_vel_des = Vec2::Zero();
  bool walking = false;                    // selects the xy_walk gains
  std::array<bool, 2> stance{true, true};
  std::array<Vec3, 2> swing_pos{};   // world swing references (used when !stance)
  std::array<Vec3, 2> swing_vel{};
  std::array<Vec3, 2> swing_acc{};
  VecX posture_q;                    // joint posture target
};

/// Builds the weighted task set (torso orientation, torso height, torso xy,
/// swing feet, joint posture) with rdot = kp (desired - actual) + kd (desired
/// rate - actual rate) + feedforward.
TaskSet buildTaskSet(const Dynamics& dyn, const WbcTargets& targets, const WbcConfig& config);

struct WbcOutput {
  QpStatus status = QpStatus::MaxIterations;
  bool fallback = false;  // QP failed, PD posture hold returned
  VecX qdd;               // nv
  VecX tau;               // n_j, clamped to model limits
  std::array<Vec6, 2> u{Vec6::Zero(), Vec6::Zero()};  // foot-frame [moment; force]
  int iterations = 0;
  double solve_seconds = 0.0;
};

/// Whole-body QP over [qdd; tau; stance wrenches]: full-model dynamics and
/// stance no-motion equalities, wrench cones, torque limits, velocity limits
/// folded into acceleration bounds over one period.
class WbcController {
 public:
  explicit WbcController(const WbcConfig& config) : config_(config) {}

  WbcConfig& config() { return config_; }
  const WbcConfig& config() const { return config_; }

  struct Input {
    const Dynamics* dyn = nullptr;  // updated at the current state
    TaskSet tasks;
    std::array<bool, 2> stance{true, true};
    std::array<Vec6, 2> u_des{Vec6::Zero(), Vec6::Zero()};  // foot frame
    // Per-foot scale on the cone's vertical bound; ramp it up after touchdown
    // so weight transfers onto a fresh contact progressively.
    std::array<double, 2> load_scale{1.0, 1.0};
    double dt = 0.002;  // lookahead for folding velocity limits into qdd bounds
  };

  WbcOutput solve(const Input& input);

  const QpProblem& lastProblem() const { return problem_; }

 private:
  WbcConfig config_;
  QpSolver solver_;
  QpProblem problem_;
  std::vector<int> last_pattern_;
  WbcOutput last_good_;  // reissued briefly when a solve fails mid-stride
  std::vector<int> last_good_pattern_;
  int hold_count_ = 0;
};

/// Motor-level PD with feedforward, clamped to torque limits.
VecX jointPd(const VecX& q_des, const VecX& v_des, const VecX& tau_ff, const VecX& q,
             const VecX& v, const VecX& kp, const VecX& kd, const VecX& tau_limit);

}  // namespace biped
