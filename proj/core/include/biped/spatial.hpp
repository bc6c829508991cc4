#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

// Spatial vector conventions used throughout:
//   - 6-vectors stack angular over linear.
//   - Quantities are expressed in world-aligned axes. Twists and wrenches are
//     referenced at the world origin unless a point is named explicitly.
//   - Quaternions are stored (x, y, z, w); identity is (0, 0, 0, 1).

namespace biped {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;
using Iso3 = Eigen::Isometry3d;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// Motion cross product: d/dt of a motion vector carried by twist v.
inline Vec6 crossMotion(const Vec6& v, const Vec6& m) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(m.head<3>());
  out.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return out;
}

/// Force cross product: d/dt of a force vector carried by twist v.
inline Vec6 crossForce(const Vec6& v, const Vec6& f) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = v.head<3>().cross(f.tail<3>());
  return out;
}

/// Rigid-body inertia referenced at the world origin: mass, first moment
/// h = m*c, and rotational inertia about the origin.
struct SpatialInertia {
  double mass = 0.0;
  Vec3 h = Vec3::Zero();
  Mat3 I = Mat3::Zero();

  static SpatialInertia AtOrigin(double mass, const Vec3& com_world, const Mat3& inertia_about_com_world) {
    SpatialInertia si;
    si.mass = mass;
    si.h = mass * com_world;
    const Mat3 cx = skew(com_world);
    si.I = inertia_about_com_world - mass * cx * cx;
    return si;
  }

  /// Momentum of a body with this inertia moving with the given twist.
  Vec6 momentum(const Vec6& twist) const {
    Vec6 p;
    p.head<3>() = I * twist.head<3>() + h.cross(twist.tail<3>());
    p.tail<3>() = mass * twist.tail<3>() - h.cross(twist.head<3>());
    return p;
  }

  SpatialInertia& operator+=(const SpatialInertia& o) {
    mass += o.mass;
    h += o.h;
    I += o.I;
    return *this;
  }

  Mat6 matrix() const {
    Mat6 m;
    const Mat3 hx = skew(h);
    m.topLeftCorner<3, 3>() = I;
    m.topRightCorner<3, 3>() = hx;
    m.bottomLeftCorner<3, 3>() = -hx;
    m.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
    return m;
  }
};

/// Quaternion for a rotation of |w| radians about w.
inline Quat quatExp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    q.normalize();
    return q;
  }
  const double half = 0.5 * angle;
  const Vec3 axis = w / angle;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * axis.x(), s * axis.y(), s * axis.z());
}

/// ZYX Euler angles (roll, pitch, yaw) with R = Rz(yaw) Ry(pitch) Rx(roll).
inline Vec3 rpyFromRotation(const Mat3& R) {
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(R(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(R(2, 1), R(2, 2));
    yaw = std::atan2(R(1, 0), R(0, 0));
  } else {
    roll = std::atan2(-R(1, 2), R(1, 1));
    yaw = 0.0;
  }
  return {roll, pitch, yaw};
}

inline Mat3 rotationFromRpy(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

inline Mat3 rotZ(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

/// World-frame orientation error: axis-angle of R_des * R^T.
inline Vec3 rotationError(const Mat3& R_des, const Mat3& R) {
  const Eigen::AngleAxisd aa(R_des * R.transpose());
  return aa.angle() * aa.axis();
}

}  // namespace biped
