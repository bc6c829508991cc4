#pragma once

#include <array>
#include <vector>

#include "biped/qp.hpp"
#include "biped/spatial.hpp"

namespace biped {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Reduced single-rigid-body state: [CoM position; roll-pitch-yaw; CoM linear
/// velocity; angular velocity], world frame, gravity entering as an affine
/// term of the dynamics.
struct SrbState {
  Vec3 pos = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();      // (roll, pitch, yaw), ZYX composition
  Vec3 lin_vel = Vec3::Zero();
  Vec3 ang_vel = Vec3::Zero();  // world-expressed

  Vec12 vec() const;
  static SrbState FromVec(const Vec12& x);
};

/// One forward-Euler step of the SRB dynamics:
///   p+  = p + dt v
///   Θ+  = Θ + dt Einv(Θ) ω          (ZYX Euler-rate map)
///   v+  = v + dt (Σf/m + g)
///   ω+  = ω + dt I_w⁻¹ Σ r_i × f_i  (I_w constant, moment arms r_i constant)
/// Gyroscopic coupling is dropped (the convex-MPC reduction).
Vec12 srbStep(const Vec12& x, const std::vector<Vec3>& forces, const std::vector<Vec3>& arms,
              const Mat3& I_w, double mass, const Vec3& gravity, double dt);

/// Exact affine linearization of srbStep at x0 (and any force, the step being
/// linear in forces): x+ = A x + B u + c with u the stacked forces.
struct SrbLinearization {
  Mat12 A;
  MatX B;   // 12 x 3*arms.size()
  Vec12 c;
};

SrbLinearization linearizeSrb(const Vec12& x0, const std::vector<Vec3>& arms, const Mat3& I_w,
                              double mass, const Vec3& gravity, double dt);

/// Foothold placement: hip projection + half-stance velocity feedforward +
/// proportional velocity-error correction, clamped to a reach box around the
/// hip projection. Heights are left to the terrain lookup downstream.
struct FootholdParams {
  // Sagittal gain on (v - v_cmd), seconds, added to the half-stance neutral
  // point. Forward speed persists across a stance, so both terms apply.
  double k_raibert = 0.23;
  // Lateral placement uses only the capture gain sqrt(height/g): the sway
  // velocity reverses mid-stance, so the neutral-point term over-corrects
  // and a heavier gain alternately overshoots side to side.
  double k_lateral = 0.27;
  double reach_x = 0.25;    // m, half-extents of the reach box
  double reach_y = 0.12;
};

Vec3 planFoothold(const Vec3& hip_pos, const Vec3& com_vel, const Vec3& v_cmd, double t_stance,
                  const FootholdParams& params);

struct MpcConfig {
  int horizon = 10;
  double dt = 0.03;
  Vec12 state_weight;       // diagonal of Q: [pos, rpy, lin vel, ang vel]
  Vec12 state_weight_walk;  // swapped in while stepping (see below)
  double force_weight = 1e-4;  // on deviation from the gravity-split reference
  double mu = 0.6;             // friction pyramid coefficient
  double f_min = 0.0;
  double f_max = 350.0;
  double replan_hz = 100.0;
  FootholdParams foothold;

  MpcConfig() {
    state_weight << 50, 50, 200,  // position
        300, 300, 100,            // roll, pitch, yaw
        10, 10, 20,               // linear velocity
        1, 1, 2;                  // angular velocity
    // While stepping, velocity tracking must outrank xy position and torso
    // attitude. Attitude correction through point-foot forces is bought with
    // horizontal acceleration (the force that rights the body also propels
    // it), so a heavy attitude weight turns every touchdown disturbance into
    // a speed excursion; foot placement is the stabilizer that owns position.
    state_weight_walk << 5, 5, 150,  // position
        100, 100, 60,                // roll, pitch, yaw
        120, 120, 20,                // linear velocity
        4, 4, 2;                     // angular velocity
  }
};

/// Command tracked by the planner. xy_ref and yaw anchor the position and
/// heading references; the caller advances them with the commanded velocity
/// instead of re-basing on the measured state, which would let a steady
/// force bias ratchet the robot away step by step.
struct MpcCommand {
  Vec3 v_cmd = Vec3::Zero();   // desired CoM velocity, world
  double yaw_rate = 0.0;
  double height = 0.6;         // desired CoM height above local terrain
  Vec2 xy_ref = Vec2::Zero();  // anchored CoM xy reference at the plan start
  double yaw = 0.0;            // current desired heading
  double terrain_z = 0.0;      // terrain height under the CoM
  Vec2 terrain_slope = Vec2::Zero();  // d height / d (x,y), for height reference
};

struct MpcInput {
  SrbState state;
  MpcCommand command;
  bool walking = false;             // selects state_weight_walk when true
  Mat3 I_world = Mat3::Identity();  // locked centroidal inertia, world axes
  double mass = 0.0;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::vector<std::array<bool, 2>> schedule;  // N rows of per-foot stance flags
  std::array<Vec3, 2> foot_pos;               // current foot patch centers
  std::array<Vec3, 2> footholds;              // planned next touchdown per foot
};

struct MpcPlan {
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double solve_seconds = 0.0;
  /// forces[k][f]: planned world reaction force on foot f at horizon step k;
  /// exactly zero for swing feet.
  std::vector<std::array<Vec3, 2>> forces;
  std::vector<SrbState> predicted;  // states 1..N
  std::array<Vec3, 2> footholds;    // as used in the plan
};

/// Receding-horizon planner over stacked stance-foot forces with condensed
/// dynamics, friction pyramids and vertical force bounds. Keeps the QP
/// solver's working set while the stance pattern is unchanged.
class MpcController {
 public:
  explicit MpcController(const MpcConfig& config) : config_(config) {}

  MpcConfig& config() { return config_; }
  const MpcConfig& config() const { return config_; }

  MpcPlan solve(const MpcInput& input);

  /// The most recently assembled QP (inspection/testing).
  const QpProblem& lastProblem() const { return problem_; }

 private:
  MpcConfig config_;
  QpSolver solver_;
  QpProblem problem_;
  std::vector<int> last_pattern_;
};

}  // namespace biped
