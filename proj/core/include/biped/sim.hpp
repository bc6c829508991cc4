#pragma once

#include <array>
#include <string>
#include <vector>

#include "biped/dynamics.hpp"
#include "biped/model.hpp"

namespace biped {

enum class TerrainKind { Flat, Slope, Stairs, HeightGrid };

/// Height-field terrain primitives. Heights are functions of (x, y); normals
/// are unit vectors.
struct Terrain {
  TerrainKind kind = TerrainKind::Flat;

  // slope
  double angle = 0.0;           // rad, positive rises along `direction`
  Vec2 direction{1.0, 0.0};     // unit, in the ground plane

  // stairs: flat for x < 0, then steps ascending along +x
  double rise = 0.0;
  double run = 0.0;

  // heightgrid: regular grid, bilinear interpolation, flat outside
  double grid_origin_x = 0.0;
  double grid_origin_y = 0.0;
  double grid_spacing = 0.1;
  int grid_nx = 0;
  int grid_ny = 0;
  std::vector<double> grid;  // row-major, grid[iy*nx + ix]

  void query(double x, double y, double* height, Vec3* normal) const;
  double height(double x, double y) const;

  static Terrain Flat();
  static Terrain Slope(double angle_rad, const Vec2& direction);
  static Terrain Stairs(double rise_m, double run_m);
  /// Procedural rough field: smoothed seeded noise of the given amplitude over
  /// [-extent, extent]^2, flat beyond.
  static Terrain Rough(unsigned seed, double amplitude, double spacing, double extent);
};

/// External disturbance on a named frame's body. duration == 0 means the
/// wrench vector is an impulse (N*s / N*m*s) applied over a single sim step.
struct Disturbance {
  std::string frame;
  Vec6 wrench = Vec6::Zero();  // [moment; force] about/at the frame origin, world axes
  double start = 0.0;
  double duration = 0.0;
};

struct ContactParams {
  double k_n = 5e4;    // N/m
  double d_n = 5e2;    // N*s/m
  double v_reg = 1e-3;  // m/s, tangential regularization
  double mu_s = 0.7;
};

/// One foot-patch corner in contact.
struct CornerContact {
  int foot = 0;
  Vec3 point = Vec3::Zero();  // world
  Vec3 force = Vec3::Zero();  // world, on the robot
  double penetration = 0.0;
};

/// Articulated rigid-body world with spring-damper ground contact on the foot
/// patch corners and regularized Coulomb friction.
class SimWorld {
 public:
  SimWorld(const RobotModel& model, const Terrain& terrain, const ContactParams& contact,
           double dt);

  const RobotModel& model() const { return model_; }
  const Terrain& terrain() const { return terrain_; }
  double dt() const { return dt_; }
  double time() const { return time_; }

  Configuration& state() { return conf_; }
  const Configuration& state() const { return conf_; }

  /// Re-evaluates the cached model terms after state() was assigned directly.
  void refresh();

  void addDisturbance(const Disturbance& d);

  /// Advances one step under joint torques tau (clamped to model limits).
  /// Throws SimDivergedError when the state leaves the finite range.
  void step(const VecX& tau);

  /// Contact forces at the current state (also cached from the last step).
  std::vector<CornerContact> contactForces() const;

  /// Net contact force per foot from the last completed step.
  const std::array<Vec3, 2>& footForce() const { return foot_force_; }
  /// Component of footForce along the local terrain normal.
  std::array<double, 2> footNormalForce() const;

  /// Kinematics evaluated at the current state (fresh after each step).
  const Dynamics& dynamics() const { return dyn_; }

 private:
  VecX generalizedContactForce(const std::vector<CornerContact>& contacts) const;
  VecX generalizedExternalForce() const;

  RobotModel model_;
  Terrain terrain_;
  ContactParams contact_;
  double dt_;
  double time_ = 0.0;
  Configuration conf_;
  Dynamics dyn_;
  std::vector<Disturbance> disturbances_;
  std::array<Vec3, 2> foot_force_{Vec3::Zero(), Vec3::Zero()};
};

}  // namespace biped
