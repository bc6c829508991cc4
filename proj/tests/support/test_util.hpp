#pragma once

#include <random>
#include <string>

#include "biped/kinematics.hpp"
#include "biped/model.hpp"
#include "biped/model_io.hpp"

namespace biped::test {

inline std::string assetPath(const std::string& rel) {
  return std::string(BIPED_ASSET_DIR) + "/" + rel;
}

inline RobotModel loadBiped() { return loadModel(assetPath("models/ning18.model")); }
inline RobotModel loadPendulum() { return loadModel(assetPath("models/pendulum2.model")); }

/// Random configuration with a normalized base quaternion. Joint angles in
/// [-1, 1] rad, velocities in [-1, 1] (scaled by vel_scale).
inline Configuration randomConfiguration(const RobotModel& model, std::mt19937& rng,
                                         double vel_scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Configuration conf = Configuration::Zero(model);
  for (int i = 0; i < 3; ++i) conf.q(i) = u(rng);
  Quat quat(u(rng), u(rng), u(rng), u(rng));
  while (quat.norm() < 1e-3) quat = Quat(u(rng), u(rng), u(rng), u(rng));
  quat.normalize();
  conf.setBaseQuat(quat);
  for (int j = 0; j < model.n_j; ++j) conf.q(7 + j) = u(rng);
  for (int k = 0; k < model.nv(); ++k) conf.v(k) = vel_scale * u(rng);
  return conf;
}

/// Directional state derivative helper: q displaced along velocity coordinate
/// direction dv by +/- eps (manifold-consistent central difference support).
inline VecX displace(const RobotModel& model, const VecX& q, const VecX& dv, double eps) {
  return integratePosition(model, q, dv, eps);
}

}  // namespace biped::test
