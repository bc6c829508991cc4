#include "biped/model.hpp"

#include <cmath>
#include <set>

#include "biped/errors.hpp"

namespace biped {

int RobotModel::frameIndex(const std::string& frame_name) const {
  for (size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].name == frame_name) return static_cast<int>(i);
  }
  throw ModelError("unknown frame '" + frame_name + "' in model '" + name + "'");
}

bool RobotModel::hasFrame(const std::string& frame_name) const {
  for (const auto& f : frames) {
    if (f.name == frame_name) return true;
  }
  return false;
}

double RobotModel::totalMass() const {
  double m = 0.0;
  for (const auto& b : bodies) m += b.mass;
  return m;
}

void RobotModel::validate() const {
  auto fail = [this](const std::string& what) {
    throw ModelError("model '" + name + "': " + what);
  };

  if (bodies.empty()) fail("no bodies");
  if (bodies[0].joint != JointType::Floating || bodies[0].parent != -1)
    fail("body 0 must be the floating base");
  if (n_j != static_cast<int>(bodies.size()) - 1)
    fail("joint count does not match body count");

  std::set<std::string> names;
  for (size_t i = 0; i < bodies.size(); ++i) {
    const Body& b = bodies[i];
    if (b.name.empty()) fail("body " + std::to_string(i) + " unnamed");
    if (!names.insert(b.name).second) fail("duplicate body name '" + b.name + "'");
    if (i > 0) {
      if (b.joint != JointType::Revolute) fail("body '" + b.name + "': only the base floats");
      if (b.parent < 0 || b.parent >= static_cast<int>(i))
        fail("body '" + b.name + "': parent must precede it");
      if (std::abs(b.axis.norm() - 1.0) > 1e-9)
        fail("body '" + b.name + "': joint axis not unit length");
    }
    if (!(b.mass > 0.0)) fail("body '" + b.name + "': mass must be positive");
    if (!b.com.allFinite()) fail("body '" + b.name + "': non-finite com");
    if (!b.inertia.allFinite()) fail("body '" + b.name + "': non-finite inertia");
    if ((b.inertia - b.inertia.transpose()).norm() > 1e-9)
      fail("body '" + b.name + "': inertia not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> eig(b.inertia);
    if (eig.eigenvalues().minCoeff() < -1e-12)
      fail("body '" + b.name + "': inertia not positive semidefinite");
  }

  std::set<std::string> fnames;
  for (const auto& f : frames) {
    if (f.name.empty()) fail("unnamed frame");
    if (!fnames.insert(f.name).second) fail("duplicate frame name '" + f.name + "'");
    if (f.body < 0 || f.body >= static_cast<int>(bodies.size()))
      fail("frame '" + f.name + "': bad body index");
  }

  if (!feet.empty() && feet.size() != 2) fail("feet must number exactly two");
  for (const auto& foot : feet) {
    if (foot.frame < 0 || foot.frame >= static_cast<int>(frames.size()))
      fail("foot patch references a missing frame");
    if (!(foot.half_length > 0.0) || !(foot.half_width > 0.0))
      fail("foot patch dimensions must be positive");
  }

  if (torque_limit.size() != n_j) fail("torque_limit size");
  if (velocity_limit.size() != n_j) fail("velocity_limit size");
  if (n_j > 0 && torque_limit.minCoeff() <= 0.0) fail("torque limits must be positive");
  if (n_j > 0 && velocity_limit.minCoeff() <= 0.0) fail("velocity limits must be positive");
  if (nominal_posture.size() != n_j) fail("nominal_posture size");
  if (!gravity.allFinite()) fail("non-finite gravity");
}

Configuration Configuration::Zero(const RobotModel& model) {
  Configuration c;
  c.q = VecX::Zero(model.nq());
  c.q(6) = 1.0;  // identity quaternion (x, y, z, w)
  c.v = VecX::Zero(model.nv());
  return c;
}

VecX integratePosition(const RobotModel& model, const VecX& q, const VecX& v, double dt) {
  VecX out = q;
  out.head<3>() += dt * v.head<3>();
  Quat quat(q(6), q(3), q(4), q(5));
  quat = quat * quatExp(dt * v.segment<3>(3));
  quat.normalize();
  out(3) = quat.x();
  out(4) = quat.y();
  out(5) = quat.z();
  out(6) = quat.w();
  out.tail(model.n_j) += dt * v.tail(model.n_j);
  return out;
}

}  // namespace biped
