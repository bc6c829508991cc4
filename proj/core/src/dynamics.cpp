#include "biped/dynamics.hpp"

#include <stdexcept>

namespace biped {

Dynamics::Dynamics(const RobotModel& model) : model_(&model), kin_(model) {
  const size_t n = model.bodies.size();
  I_o_.resize(n);
  I_c_.resize(n);
  M_ = MatX::Zero(model.nv(), model.nv());
  h_ = VecX::Zero(model.nv());
  A_G_ = MatX::Zero(6, model.nv());
}

void Dynamics::update(const Configuration& conf) {
  kin_.update(conf);
  const RobotModel& m = *model_;
  for (size_t i = 0; i < m.bodies.size(); ++i) {
    const Body& b = m.bodies[i];
    const Mat3 R = kin_.bodyPose(static_cast<int>(i)).linear();
    const Vec3 com_w = kin_.bodyPose(static_cast<int>(i)) * b.com;
    I_o_[i] = SpatialInertia::AtOrigin(b.mass, com_w, R * b.inertia * R.transpose());
  }
  crba();
  h_ = inverseDynamics(VecX::Zero(m.nv()));
  centroidalQuantities();
  centroidal_.h_G = A_G_ * conf.v;
}

VecX Dynamics::inverseDynamics(const VecX& vdot) const {
  const RobotModel& m = *model_;
  const size_t n = m.bodies.size();

  std::vector<Vec6> a(n), f(n);
  a[0] = kin_.baseMotionMap() * vdot.head<6>() + kin_.biasAcceleration(0);
  a[0].tail<3>() -= m.gravity;  // fictitious base acceleration carrying gravity
  f[0] = I_o_[0].matrix() * a[0] + crossForce(kin_.bodyTwist(0), I_o_[0].momentum(kin_.bodyTwist(0)));

  for (size_t i = 1; i < n; ++i) {
    const int parent = m.bodies[i].parent;
    const int dof = m.jointDof(static_cast<int>(i));
    // velocity-product term = biasAcceleration(i) - biasAcceleration(parent)
    a[i] = a[static_cast<size_t>(parent)] + kin_.jointSubspace(static_cast<int>(i)) * vdot(dof) +
           (kin_.biasAcceleration(static_cast<int>(i)) -
            kin_.biasAcceleration(parent));
    f[i] = I_o_[i].matrix() * a[i] +
           crossForce(kin_.bodyTwist(static_cast<int>(i)),
                      I_o_[i].momentum(kin_.bodyTwist(static_cast<int>(i))));
  }

  VecX out = VecX::Zero(m.nv());
  for (size_t i = n; i-- > 1;) {
    const int parent = m.bodies[i].parent;
    out(m.jointDof(static_cast<int>(i))) = kin_.jointSubspace(static_cast<int>(i)).dot(f[i]);
    f[static_cast<size_t>(parent)] += f[i];
  }
  out.head<6>() = kin_.baseMotionMap().transpose() * f[0];
  return out;
}

void Dynamics::crba() {
  const RobotModel& m = *model_;
  const size_t n = m.bodies.size();
  for (size_t i = 0; i < n; ++i) I_c_[i] = I_o_[i];
  for (size_t i = n; i-- > 1;) I_c_[static_cast<size_t>(m.bodies[i].parent)] += I_c_[i];

  M_.setZero();
  const auto& B = kin_.baseMotionMap();
  M_.topLeftCorner<6, 6>() = B.transpose() * I_c_[0].matrix() * B;

  for (size_t i = 1; i < n; ++i) {
    const int dof_i = m.jointDof(static_cast<int>(i));
    const Vec6 F = I_c_[i].matrix() * kin_.jointSubspace(static_cast<int>(i));
    M_(dof_i, dof_i) = F.dot(kin_.jointSubspace(static_cast<int>(i)));
    // ancestors
    int j = m.bodies[i].parent;
    while (j > 0) {
      const int dof_j = m.jointDof(j);
      const double mij = F.dot(kin_.jointSubspace(j));
      M_(dof_i, dof_j) = mij;
      M_(dof_j, dof_i) = mij;
      j = m.bodies[static_cast<size_t>(j)].parent;
    }
    const Eigen::Matrix<double, 1, 6> row = F.transpose() * B;
    M_.block<1, 6>(dof_i, 0) = row;
    M_.block<6, 1>(0, dof_i) = row.transpose();
  }
}

void Dynamics::centroidalQuantities() {
  const RobotModel& m = *model_;
  const Vec3 com = kin_.comPosition();

  MatX A_o = MatX::Zero(6, m.nv());
  A_o.leftCols<6>() = I_c_[0].matrix() * kin_.baseMotionMap();
  for (size_t i = 1; i < m.bodies.size(); ++i) {
    A_o.col(m.jointDof(static_cast<int>(i))) =
        I_c_[i].matrix() * kin_.jointSubspace(static_cast<int>(i));
  }

  // Shift moment rows from the world origin to the CoM.
  A_G_ = A_o;
  A_G_.topRows<3>() -= skew(com) * A_o.bottomRows<3>();

  centroidal_.com = com;
  centroidal_.I_G = I_c_[0].I + I_c_[0].mass * skew(com) * skew(com);

  // h_G from the matrix keeps the identity h_G = A_G v exact by construction;
  // tests verify it against an independent per-body summation.
  // (I_c_[0].I is about the origin; the parallel-axis shift above moves
  // it to the CoM.)
}

double centroidalInertiaIsotropy(const RobotModel& model, const VecX& q_ref,
                                 const std::vector<VecX>& postures) {
  Dynamics dyn(model);
  Configuration conf = Configuration::Zero(model);
  if (q_ref.size() == model.nq()) {
    conf.q = q_ref;
  } else if (q_ref.size() == model.n_j) {
    conf.q.tail(model.n_j) = q_ref;
  } else {
    throw std::invalid_argument("centroidalInertiaIsotropy: q_ref must have nq or n_j entries");
  }
  const VecX q_base = conf.q;
  dyn.update(conf);
  const Mat3 I_ref = dyn.centroidal().I_G;
  const double denom = I_ref.norm();

  double acc = 0.0;
  for (const VecX& joints : postures) {
    if (joints.size() != model.n_j)
      throw std::invalid_argument("centroidalInertiaIsotropy: posture must have n_j entries");
    // keep the base pose of the reference so only posture varies
    conf.q = q_base;
    conf.q.tail(model.n_j) = joints;
    dyn.update(conf);
    acc += (dyn.centroidal().I_G - I_ref).norm() / denom;
  }
  return postures.empty() ? 0.0 : acc / static_cast<double>(postures.size());
}

}  // namespace biped
