#pragma once

#include <map>
#include <string>
#include <vector>

#include "biped/spatial.hpp"

namespace biped {

enum class JointType { Floating, Revolute };

/// One rigid body of the kinematic tree. The body frame coincides with the
/// joint frame after the joint motion is applied; com and inertia are given
/// in the body frame, inertia about the body's own center of mass.
struct Body {
  std::string name;
  int parent = -1;  // index into RobotModel::bodies; -1 only for the base
  JointType joint = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();     // revolute axis, joint frame, unit norm
  Iso3 T_parent_joint = Iso3::Identity();  // parent body frame -> joint frame
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
};

/// Named frame rigidly attached to a body.
struct Frame {
  std::string name;
  int body = 0;
  Iso3 T_body_frame = Iso3::Identity();
};

/// Rectangular contact patch carried by a foot frame. The patch lies in the
/// frame's x-y plane, x along the length.
struct FootPatch {
  int frame = -1;  // index into RobotModel::frames
  double half_length = 0.0;
  double half_width = 0.0;
};

struct RobotModel {
  std::string name;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::vector<Body> bodies;   // topologically sorted, bodies[0] is the floating base
  std::vector<Frame> frames;
  std::vector<FootPatch> feet;  // exactly two for a biped model
  VecX torque_limit;    // per actuated joint, N*m
  VecX velocity_limit;  // per actuated joint, rad/s
  VecX nominal_posture;  // joint angles of the reference standing pose
  double nominal_base_height = 0.0;

  int n_j = 0;  // actuated joint count

  int nq() const { return 7 + n_j; }
  int nv() const { return 6 + n_j; }

  /// Velocity index of the joint moving body i (i >= 1).
  int jointDof(int body) const { return 5 + body; }
  /// Position index of the joint moving body i (i >= 1).
  int jointPos(int body) const { return 6 + body; }

  int frameIndex(const std::string& frame_name) const;
  bool hasFrame(const std::string& frame_name) const;

  double totalMass() const;

  /// Throws ModelError naming the first violated invariant.
  void validate() const;
};

/// Generalized position and velocity of the floating-base system.
///   q: [base position (world); base quaternion (x,y,z,w); joint angles]
///   v: [base linear velocity (world); base angular velocity (body); joint rates]
struct Configuration {
  VecX q;
  VecX v;

  static Configuration Zero(const RobotModel& model);

  Vec3 basePos() const { return q.head<3>(); }
  Quat baseQuat() const { return Quat(q(6), q(3), q(4), q(5)); }
  void setBaseQuat(const Quat& quat) {
    q(3) = quat.x();
    q(4) = quat.y();
    q(5) = quat.z();
    q(6) = quat.w();
  }
  Vec3 baseLinVel() const { return v.head<3>(); }
  Vec3 baseAngVelBody() const { return v.segment<3>(3); }

  /// Joint slices.
  auto jointPos() const { return q.tail(q.size() - 7); }
  auto jointVel() const { return v.tail(v.size() - 6); }
};

/// One explicit Euler step on the configuration manifold: q advances along v
/// for dt seconds (quaternion via the exponential map, then renormalized).
VecX integratePosition(const RobotModel& model, const VecX& q, const VecX& v, double dt);

/// Centroidal quantities at a state.
struct CentroidalState {
  Vec3 com = Vec3::Zero();
  Vec6 h_G = Vec6::Zero();  // angular over linear momentum about the CoM
  Mat3 I_G = Mat3::Identity();
};

}  // namespace biped
