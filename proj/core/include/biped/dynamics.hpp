#pragma once

#include "biped/kinematics.hpp"
#include "biped/model.hpp"

namespace biped {

/// Rigid-body dynamics over a Kinematics evaluation. All algorithms share the
/// same coordinate layout as Configuration:
///   M(q) vdot + h(q, v) = tau_gen
/// with tau_gen the generalized force (base wrench rows first, then joints).
class Dynamics {
 public:
  explicit Dynamics(const RobotModel& model);

  /// Recomputes everything from the configuration (runs forward kinematics).
  void update(const Configuration& conf);

  const Kinematics& kinematics() const { return kin_; }

  /// Joint-space mass matrix (composite rigid body algorithm), nv x nv.
  const MatX& massMatrix() const { return M_; }

  /// Bias force h(q, v): Coriolis, centrifugal and gravity. nv.
  const VecX& biasForce() const { return h_; }

  /// Inverse dynamics: generalized force producing coordinate acceleration
  /// vdot at the updated state (gravity included).
  VecX inverseDynamics(const VecX& vdot) const;

  /// Centroidal momentum matrix (6 x nv, moments about the CoM, angular rows
  /// first), centroidal momentum and the locked rotational inertia about the
  /// CoM.
  const MatX& centroidalMomentumMatrix() const { return A_G_; }
  const CentroidalState& centroidal() const { return centroidal_; }

 private:
  void crba();
  void centroidalQuantities();

  const RobotModel* model_;
  Kinematics kin_;
  std::vector<SpatialInertia> I_o_;  // body spatial inertias, world origin
  std::vector<SpatialInertia> I_c_;  // composite subtree inertias
  MatX M_;
  VecX h_;
  MatX A_G_;
  CentroidalState centroidal_;
};

/// Posture-variation score of the locked centroidal inertia: the mean over a
/// posture set of ||I_G(q) - I_G(q_ref)||_F / ||I_G(q_ref)||_F. Lower means
/// arm/leg motion disturbs the trunk rotational dynamics less.
double centroidalInertiaIsotropy(const RobotModel& model, const VecX& q_ref,
                                 const std::vector<VecX>& postures);

}  // namespace biped
