#pragma once

#include <vector>

#include "biped/model.hpp"
#include "biped/spatial.hpp"

namespace biped {

/// Forward kinematics and per-body spatial state, all expressed in the world
/// frame with spatial quantities referenced to the world origin.
struct Kinematics {
  explicit Kinematics(const RobotModel& model);

  void update(const Configuration& conf);

  const RobotModel& model() const { return *model_; }

  /// The configuration most recently passed to update().
  const Configuration& configuration() const { return conf_; }

  const Iso3& bodyPose(int body) const { return X_wb_[body]; }
  Iso3 framePose(int frame) const;
  Iso3 framePose(const std::string& frame_name) const;

  /// Spatial twist of body i referenced to the world origin, [omega; v_o].
  const Vec6& bodyTwist(int body) const { return vel_[body]; }

  /// Linear velocity of a point rigidly attached to body i.
  Vec3 pointVelocity(int body, const Vec3& point_world) const;

  /// Motion subspace column of the joint moving body i (world, origin-referenced).
  const Vec6& jointSubspace(int body) const { return S_[body]; }

  /// 6x6 map from base velocity coordinates [pdot_world; omega_body] to the
  /// base body's origin-referenced spatial twist.
  const Eigen::Matrix<double, 6, 6>& baseMotionMap() const { return B_; }

  /// Origin-referenced spatial acceleration of body i under zero coordinate
  /// acceleration (the velocity-product term).
  const Vec6& biasAcceleration(int body) const { return avp_[body]; }

  /// Geometric Jacobian of a frame: rows [omega; v_point], world-aligned,
  /// taken at the frame origin. Columns follow the velocity coordinates.
  MatX frameJacobian(int frame) const;
  MatX frameJacobian(const std::string& frame_name) const;

  /// d/dt(J) * v for the same frame Jacobian (the acceleration bias).
  Vec6 frameJacobianDotV(int frame) const;

  Vec3 comPosition() const;
  Vec3 comVelocity() const;

 private:
  const RobotModel* model_;
  Configuration conf_;
  std::vector<Iso3> X_wb_;   // world poses
  std::vector<Vec6> vel_;    // origin-referenced twists
  std::vector<Vec6> S_;      // joint motion subspaces (world, origin-referenced)
  std::vector<Vec6> avp_;    // velocity-product accelerations
  Eigen::Matrix<double, 6, 6> B_;
  Vec6 base_bias_;           // origin-referenced base acceleration at zero vdot
};

}  // namespace biped
