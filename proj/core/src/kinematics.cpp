#include "biped/kinematics.hpp"

#include <Eigen/Geometry>

namespace biped {

Kinematics::Kinematics(const RobotModel& model) : model_(&model) {
  const size_t n = model.bodies.size();
  X_wb_.resize(n, Iso3::Identity());
  vel_.assign(n, Vec6::Zero());
  S_.assign(n, Vec6::Zero());
  avp_.assign(n, Vec6::Zero());
  B_.setZero();
  base_bias_.setZero();
}

void Kinematics::update(const Configuration& conf) {
  conf_ = conf;
  const RobotModel& m = *model_;
  const Vec3 p = conf.basePos();
  const Mat3 R = conf.baseQuat().toRotationMatrix();

  X_wb_[0].linear() = R;
  X_wb_[0].translation() = p;

  // Base velocity coordinates [pdot_world; omega_body] -> origin twist.
  B_.setZero();
  B_.block<3, 3>(0, 3) = R;
  B_.block<3, 3>(3, 0) = Mat3::Identity();
  B_.block<3, 3>(3, 3) = skew(p) * R;
  vel_[0] = B_ * conf.v.head<6>();

  const Vec3 pdot = conf.baseLinVel();
  const Vec3 w_world = vel_[0].head<3>();
  base_bias_.head<3>().setZero();
  base_bias_.tail<3>() = pdot.cross(w_world);
  avp_[0] = base_bias_;

  for (size_t i = 1; i < m.bodies.size(); ++i) {
    const Body& b = m.bodies[i];
    const double qi = conf.q(m.jointPos(static_cast<int>(i)));
    const double qdi = conf.v(m.jointDof(static_cast<int>(i)));
    Iso3 joint = Iso3::Identity();
    joint.linear() = Eigen::AngleAxisd(qi, b.axis).toRotationMatrix();
    X_wb_[i] = X_wb_[b.parent] * b.T_parent_joint * joint;

    const Vec3 axis_w = X_wb_[i].linear() * b.axis;
    const Vec3 pj = X_wb_[i].translation();
    S_[i].head<3>() = axis_w;
    S_[i].tail<3>() = pj.cross(axis_w);

    vel_[i] = vel_[b.parent] + S_[i] * qdi;
    avp_[i] = avp_[b.parent] + crossMotion(vel_[i], S_[i]) * qdi;
  }
}

Iso3 Kinematics::framePose(int frame) const {
  const Frame& f = model_->frames[static_cast<size_t>(frame)];
  return X_wb_[static_cast<size_t>(f.body)] * f.T_body_frame;
}

Iso3 Kinematics::framePose(const std::string& frame_name) const {
  return framePose(model_->frameIndex(frame_name));
}

Vec3 Kinematics::pointVelocity(int body, const Vec3& point_world) const {
  const Vec6& tw = vel_[static_cast<size_t>(body)];
  return tw.tail<3>() + tw.head<3>().cross(point_world);
}

MatX Kinematics::frameJacobian(int frame) const {
  const RobotModel& m = *model_;
  const Frame& f = m.frames[static_cast<size_t>(frame)];
  const Vec3 pf = framePose(frame).translation();
  MatX J = MatX::Zero(6, m.nv());

  // Base block: [omega; v_point] from [pdot_world; omega_body].
  const Mat3 R = X_wb_[0].linear();
  const Vec3 pb = X_wb_[0].translation();
  J.block<3, 3>(0, 3) = R;
  J.block<3, 3>(3, 0) = Mat3::Identity();
  J.block<3, 3>(3, 3) = (skew(pb) - skew(pf)) * R;

  // Walk the support chain from the frame's body to the base.
  for (int i = f.body; i > 0; i = m.bodies[static_cast<size_t>(i)].parent) {
    const Vec6& S = S_[static_cast<size_t>(i)];
    const Vec3 a = S.head<3>();
    J.block<3, 1>(0, m.jointDof(i)) = a;
    J.block<3, 1>(3, m.jointDof(i)) = S.tail<3>() + a.cross(pf);
  }
  return J;
}

MatX Kinematics::frameJacobian(const std::string& frame_name) const {
  return frameJacobian(model_->frameIndex(frame_name));
}

Vec6 Kinematics::frameJacobianDotV(int frame) const {
  const Frame& f = model_->frames[static_cast<size_t>(frame)];
  const auto b = static_cast<size_t>(f.body);
  const Vec3 pf = framePose(frame).translation();
  const Vec3 alpha = avp_[b].head<3>();
  const Vec3 w = vel_[b].head<3>();
  const Vec3 v_pf = pointVelocity(f.body, pf);
  Vec6 out;
  out.head<3>() = alpha;
  out.tail<3>() = avp_[b].tail<3>() + alpha.cross(pf) + w.cross(v_pf);
  return out;
}

Vec3 Kinematics::comPosition() const {
  Vec3 num = Vec3::Zero();
  double mass = 0.0;
  for (size_t i = 0; i < model_->bodies.size(); ++i) {
    const Body& b = model_->bodies[i];
    num += b.mass * (X_wb_[i] * b.com);
    mass += b.mass;
  }
  return num / mass;
}

Vec3 Kinematics::comVelocity() const {
  Vec3 num = Vec3::Zero();
  double mass = 0.0;
  for (size_t i = 0; i < model_->bodies.size(); ++i) {
    const Body& b = model_->bodies[i];
    num += b.mass * pointVelocity(static_cast<int>(i), X_wb_[i] * b.com);
    mass += b.mass;
  }
  return num / mass;
}

}  // namespace biped
