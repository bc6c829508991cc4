#include <doctest.h>

#include <random>

#include "biped/dynamics.hpp"
#include "support/test_util.hpp"

using namespace biped;

TEST_CASE("mass matrix is symmetric positive definite") {
  RobotModel model = test::loadBiped();
  Dynamics dyn(model);
  std::mt19937 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    dyn.update(conf);
    const MatX& M = dyn.massMatrix();
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<MatX> es(M);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("mass matrix columns reconstruct from inverse dynamics") {
  // M e_k = ID(e_k) - ID(0): the composite-rigid-body matrix and the recursive
  // Newton-Euler pass must agree to near machine precision.
  for (auto model : {test::loadBiped(), test::loadPendulum()}) {
    Dynamics dyn(model);
    std::mt19937 rng(31);
    for (int trial = 0; trial < 25; ++trial) {
      Configuration conf = test::randomConfiguration(model, rng);
      dyn.update(conf);
      const MatX& M = dyn.massMatrix();
      VecX h = dyn.inverseDynamics(VecX::Zero(model.nv()));
      double worst = 0.0;
      for (int k = 0; k < model.nv(); ++k) {
        VecX e = VecX::Zero(model.nv());
        e(k) = 1.0;
        VecX col = dyn.inverseDynamics(e) - h;
        worst = std::max(worst, (col - M.col(k)).cwiseAbs().maxCoeff());
      }
      CAPTURE(model.name);
      CAPTURE(trial);
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("bias force equals zero-acceleration inverse dynamics") {
  RobotModel model = test::loadBiped();
  Dynamics dyn(model);
  std::mt19937 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    dyn.update(conf);
    VecX id0 = dyn.inverseDynamics(VecX::Zero(model.nv()));
    CHECK((dyn.biasForce() - id0).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("free fall from rest accelerates every coordinate like gravity") {
  // At zero velocity with no applied force, M vdot = -h must give the base
  // gravity acceleration and exactly zero joint acceleration (uniform field).
  RobotModel model = test::loadBiped();
  Dynamics dyn(model);
  std::mt19937 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng, 0.0);
    dyn.update(conf);
    VecX vdot = dyn.massMatrix().ldlt().solve(-dyn.biasForce());
    CHECK((vdot.head<3>() - Vec3(0, 0, -9.81)).norm() < 1e-8);
    CHECK(vdot.tail(model.nv() - 3).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("centroidal momentum matrix matches per-body momentum summation") {
  RobotModel model = test::loadBiped();
  Dynamics dyn(model);
  Kinematics kin(model);
  std::mt19937 rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    dyn.update(conf);
    kin.update(conf);
    Vec6 h_cmm = dyn.centroidalMomentumMatrix() * conf.v;

    // Independent route: world-origin momentum of each body from its own
    // inertia and twist, then shifted to the instantaneous CoM.
    Vec3 com = kin.comPosition();
    Vec6 h_sum = Vec6::Zero();
    for (size_t b = 0; b < model.bodies.size(); ++b) {
      const Body& body = model.bodies[b];
      if (body.mass <= 0.0) continue;
      const Iso3& X = kin.bodyPose(static_cast<int>(b));
      Vec3 c_w = X * body.com;
      Mat3 R = X.linear();
      Mat3 I_c = R * body.inertia * R.transpose();
      Vec6 tw = kin.bodyTwist(static_cast<int>(b));
      Vec3 omega = tw.head<3>();
      Vec3 v_c = tw.tail<3>() + omega.cross(c_w);  // velocity of the body CoM
      Vec3 lin = body.mass * v_c;
      Vec3 ang_about_c = I_c * omega + (c_w - com).cross(lin);
      h_sum.head<3>() += ang_about_c;
      h_sum.tail<3>() += lin;
    }
    CAPTURE(trial);
    REQUIRE((h_cmm - h_sum).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dyn.centroidal().h_G - h_sum).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dyn.centroidal().com - com).norm() < 1e-12);
  }
}

TEST_CASE("kinetic energy agrees between mass matrix and per-body summation") {
  RobotModel model = test::loadBiped();
  Dynamics dyn(model);
  std::mt19937 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    dyn.update(conf);
    double T_M = 0.5 * conf.v.dot(dyn.massMatrix() * conf.v);
    double T_sum = 0.0;
    const Kinematics& kin = dyn.kinematics();
    for (size_t b = 0; b < model.bodies.size(); ++b) {
      const Body& body = model.bodies[b];
      if (body.mass <= 0.0) continue;
      const Iso3& X = kin.bodyPose(static_cast<int>(b));
      Vec3 c_w = X * body.com;
      Mat3 I_c = X.linear() * body.inertia * X.linear().transpose();
      Vec6 tw = kin.bodyTwist(static_cast<int>(b));
      Vec3 omega = tw.head<3>();
      Vec3 v_c = tw.tail<3>() + omega.cross(c_w);
      T_sum += 0.5 * body.mass * v_c.squaredNorm() + 0.5 * omega.dot(I_c * omega);
    }
    CHECK(T_M == doctest::Approx(T_sum).epsilon(1e-10));
  }
}

TEST_CASE("locked centroidal inertia variation separates mass layouts") {
  RobotModel proximal = test::loadBiped();
  RobotModel distal = loadModel(test::assetPath("models/ning18_distal.model"));
  std::vector<VecX> postures;
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 12; ++i) {
    VecX q = proximal.nominal_posture;
    for (int j = 0; j < q.size(); ++j) q(j) += u(rng);
    postures.push_back(q);
  }
  double s_prox = centroidalInertiaIsotropy(proximal, proximal.nominal_posture, postures);
  double s_dist = centroidalInertiaIsotropy(distal, distal.nominal_posture, postures);
  CHECK(s_prox > 0.0);
  CHECK(s_dist > s_prox);
  // Scoring a posture set equal to the reference gives exactly zero.
  std::vector<VecX> ref_only(3, proximal.nominal_posture);
  CHECK(centroidalInertiaIsotropy(proximal, proximal.nominal_posture, ref_only) == 0.0);
}
