#include <doctest.h>

#include <random>

#include "biped/kinematics.hpp"
#include "support/test_util.hpp"

using namespace biped;

namespace {

// Central-difference frame Jacobian: column k is the world-frame change of the
// frame pose under a displacement along velocity coordinate k. Rows [omega; v].
MatX fdFrameJacobian(const RobotModel& model, const VecX& q, int frame, double eps = 1e-6) {
  Kinematics kin(model);
  MatX J(6, model.nv());
  Configuration conf = Configuration::Zero(model);
  for (int k = 0; k < model.nv(); ++k) {
    VecX dv = VecX::Zero(model.nv());
    dv(k) = 1.0;
    conf.q = test::displace(model, q, dv, eps);
    kin.update(conf);
    Iso3 Xp = kin.framePose(frame);
    conf.q = test::displace(model, q, dv, -eps);
    kin.update(conf);
    Iso3 Xm = kin.framePose(frame);
    Eigen::AngleAxisd aa(Xp.linear() * Xm.linear().transpose());
    J.col(k).head<3>() = aa.angle() * aa.axis() / (2.0 * eps);
    J.col(k).tail<3>() = (Xp.translation() - Xm.translation()) / (2.0 * eps);
  }
  return J;
}

}  // namespace

TEST_CASE("frame poses compose like the chain they come from") {
  // Hand-checkable two-link arm hanging from a fixed-in-place base: rotate the
  // first joint 90 deg about y and verify the tip lands where geometry says.
  RobotModel model = test::loadPendulum();
  Kinematics kin(model);
  Configuration conf = Configuration::Zero(model);
  conf.q(7 + 0) = M_PI / 2.0;  // +pi/2 about +y sends the hanging link to -x
  kin.update(conf);
  Iso3 tip = kin.framePose("tip");
  // Each link is 0.5 m: first link now along -x, second still along the first
  // link's -z which now points along -x as well.
  CHECK(tip.translation().x() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(tip.translation().z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("frame Jacobians match central differences") {
  for (auto model : {test::loadBiped(), test::loadPendulum()}) {
    Kinematics kin(model);
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      Configuration conf = test::randomConfiguration(model, rng);
      kin.update(conf);
      for (size_t f = 0; f < model.frames.size(); ++f) {
        MatX J = kin.frameJacobian(static_cast<int>(f));
        MatX J_fd = fdFrameJacobian(model, conf.q, static_cast<int>(f));
        CAPTURE(model.name);
        CAPTURE(trial);
        CAPTURE(f);
        CHECK((J - J_fd).cwiseAbs().maxCoeff() < 1e-5);
      }
    }
  }
}

TEST_CASE("frame Jacobian times velocity equals frame point velocity") {
  RobotModel model = test::loadBiped();
  Kinematics kin(model);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    kin.update(conf);
    for (size_t f = 0; f < model.frames.size(); ++f) {
      MatX J = kin.frameJacobian(static_cast<int>(f));
      Vec6 xd = J * conf.v;
      int body = model.frames[f].body;
      Vec3 p = kin.framePose(static_cast<int>(f)).translation();
      Vec3 v_pt = kin.pointVelocity(body, p);
      Vec3 omega = kin.bodyTwist(body).head<3>();
      CHECK((xd.head<3>() - omega).norm() < 1e-10);
      CHECK((xd.tail<3>() - v_pt).norm() < 1e-10);
    }
  }
}

TEST_CASE("frame Jacobian rate times velocity matches finite differences") {
  for (auto model : {test::loadBiped(), test::loadPendulum()}) {
    Kinematics kin(model);
    std::mt19937 rng(13);
    const double eps = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
      Configuration conf = test::randomConfiguration(model, rng);
      kin.update(conf);
      for (size_t f = 0; f < model.frames.size(); ++f) {
        Vec6 jdv = kin.frameJacobianDotV(static_cast<int>(f));
        // d/dt(J(q(t))) v with v held fixed, via central difference on q.
        Configuration cp = conf;
        cp.q = test::displace(model, conf.q, conf.v, eps);
        kin.update(cp);
        MatX Jp = kin.frameJacobian(static_cast<int>(f));
        Configuration cm = conf;
        cm.q = test::displace(model, conf.q, conf.v, -eps);
        kin.update(cm);
        MatX Jm = kin.frameJacobian(static_cast<int>(f));
        Vec6 jdv_fd = (Jp - Jm) * conf.v / (2.0 * eps);
        CAPTURE(model.name);
        CAPTURE(trial);
        CAPTURE(f);
        CHECK((jdv - jdv_fd).cwiseAbs().maxCoeff() < 1e-5);
      }
    }
  }
}

TEST_CASE("body bias accelerations match finite-differenced twists") {
  RobotModel model = test::loadBiped();
  Kinematics kin(model);
  std::mt19937 rng(17);
  const double eps = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    kin.update(conf);
    std::vector<Vec6> avp(model.bodies.size());
    for (size_t b = 0; b < model.bodies.size(); ++b) avp[b] = kin.biasAcceleration(static_cast<int>(b));

    // Advance the configuration along v with constant velocity coordinates;
    // origin-referenced twists then change only through the bias acceleration.
    Configuration cp = conf;
    cp.q = test::displace(model, conf.q, conf.v, eps);
    kin.update(cp);
    std::vector<Vec6> twist_p(model.bodies.size());
    for (size_t b = 0; b < model.bodies.size(); ++b) twist_p[b] = kin.bodyTwist(static_cast<int>(b));
    Configuration cm = conf;
    cm.q = test::displace(model, conf.q, conf.v, -eps);
    kin.update(cm);
    for (size_t b = 0; b < model.bodies.size(); ++b) {
      Vec6 fd = (twist_p[b] - kin.bodyTwist(static_cast<int>(b))) / (2.0 * eps);
      CAPTURE(trial);
      CAPTURE(b);
      CHECK((avp[b] - fd).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("center of mass velocity matches finite-differenced position") {
  RobotModel model = test::loadBiped();
  Kinematics kin(model);
  std::mt19937 rng(19);
  const double eps = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    kin.update(conf);
    Vec3 vc = kin.comVelocity();
    Configuration cp = conf;
    cp.q = test::displace(model, conf.q, conf.v, eps);
    kin.update(cp);
    Vec3 pp = kin.comPosition();
    Configuration cm = conf;
    cm.q = test::displace(model, conf.q, conf.v, -eps);
    kin.update(cm);
    Vec3 fd = (pp - kin.comPosition()) / (2.0 * eps);
    CHECK((vc - fd).norm() < 1e-5);
  }
}

TEST_CASE("base motion map sends velocity coordinates to the base twist") {
  RobotModel model = test::loadBiped();
  Kinematics kin(model);
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Configuration conf = test::randomConfiguration(model, rng);
    kin.update(conf);
    Vec6 twist = kin.baseMotionMap() * conf.v.head<6>();
    CHECK((twist - kin.bodyTwist(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}
