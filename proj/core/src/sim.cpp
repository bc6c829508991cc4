#include "biped/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "biped/errors.hpp"

namespace biped {

void Terrain::query(double x, double y, double* height_out, Vec3* normal_out) const {
  double h = 0.0;
  Vec3 n = Vec3::UnitZ();
  switch (kind) {
    case TerrainKind::Flat:
      break;
    case TerrainKind::Slope: {
      const double s = std::tan(angle);
      h = s * (direction.x() * x + direction.y() * y);
      n = Vec3(-s * direction.x(), -s * direction.y(), 1.0).normalized();
      break;
    }
    case TerrainKind::Stairs: {
      if (run > 0.0) h = rise * std::max(0.0, std::floor(x / run));
      break;
    }
    case TerrainKind::HeightGrid: {
      if (grid_nx < 2 || grid_ny < 2) break;
      const double fx = (x - grid_origin_x) / grid_spacing;
      const double fy = (y - grid_origin_y) / grid_spacing;
      if (fx < 0.0 || fy < 0.0 || fx > grid_nx - 1 || fy > grid_ny - 1) break;
      const int ix = std::min(static_cast<int>(fx), grid_nx - 2);
      const int iy = std::min(static_cast<int>(fy), grid_ny - 2);
      const double ax = fx - ix;
      const double ay = fy - iy;
      const double h00 = grid[static_cast<size_t>(iy * grid_nx + ix)];
      const double h10 = grid[static_cast<size_t>(iy * grid_nx + ix + 1)];
      const double h01 = grid[static_cast<size_t>((iy + 1) * grid_nx + ix)];
      const double h11 = grid[static_cast<size_t>((iy + 1) * grid_nx + ix + 1)];
      h = (1 - ax) * (1 - ay) * h00 + ax * (1 - ay) * h10 + (1 - ax) * ay * h01 + ax * ay * h11;
      const double dhdx = ((1 - ay) * (h10 - h00) + ay * (h11 - h01)) / grid_spacing;
      const double dhdy = ((1 - ax) * (h01 - h00) + ax * (h11 - h10)) / grid_spacing;
      n = Vec3(-dhdx, -dhdy, 1.0).normalized();
      break;
    }
  }
  if (height_out) *height_out = h;
  if (normal_out) *normal_out = n;
}

double Terrain::height(double x, double y) const {
  double h = 0.0;
  query(x, y, &h, nullptr);
  return h;
}

Terrain Terrain::Flat() { return Terrain{}; }

Terrain Terrain::Slope(double angle_rad, const Vec2& direction) {
  Terrain t;
  t.kind = TerrainKind::Slope;
  t.angle = angle_rad;
  t.direction = direction.normalized();
  return t;
}

Terrain Terrain::Stairs(double rise_m, double run_m) {
  Terrain t;
  t.kind = TerrainKind::Stairs;
  t.rise = rise_m;
  t.run = run_m;
  return t;
}

Terrain Terrain::Rough(unsigned seed, double amplitude, double spacing, double extent) {
  Terrain t;
  t.kind = TerrainKind::HeightGrid;
  t.grid_spacing = spacing;
  const int n = std::max(4, static_cast<int>(std::ceil(2.0 * extent / spacing)) + 1);
  t.grid_nx = n;
  t.grid_ny = n;
  t.grid_origin_x = -0.5 * (n - 1) * spacing;
  t.grid_origin_y = -0.5 * (n - 1) * spacing;
  t.grid.assign(static_cast<size_t>(n * n), 0.0);

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& g : t.grid) g = dist(rng);

  // Two box-blur passes smooth the noise; zeroing the boundary ring blends the
  // field to the flat far field.
  std::vector<double> tmp(t.grid.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        double acc = 0.0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int jx = ix + dx;
            const int jy = iy + dy;
            if (jx < 0 || jy < 0 || jx >= n || jy >= n) continue;
            acc += t.grid[static_cast<size_t>(jy * n + jx)];
            ++cnt;
          }
        }
        tmp[static_cast<size_t>(iy * n + ix)] = acc / cnt;
      }
    }
    t.grid.swap(tmp);
  }
  double peak = 1e-12;
  for (double g : t.grid) peak = std::max(peak, std::abs(g));
  for (double& g : t.grid) g *= amplitude / peak;
  for (int i = 0; i < n; ++i) {
    t.grid[static_cast<size_t>(i)] = 0.0;
    t.grid[static_cast<size_t>((n - 1) * n + i)] = 0.0;
    t.grid[static_cast<size_t>(i * n)] = 0.0;
    t.grid[static_cast<size_t>(i * n + n - 1)] = 0.0;
  }
  return t;
}

SimWorld::SimWorld(const RobotModel& model, const Terrain& terrain, const ContactParams& contact,
                   double dt)
    : model_(model), terrain_(terrain), contact_(contact), dt_(dt),
      conf_(Configuration::Zero(model_)), dyn_(model_) {
  if (!(dt > 0.0)) throw std::invalid_argument("sim: dt must be positive");
  model_.validate();
  dyn_.update(conf_);
}

void SimWorld::refresh() {
  if (conf_.q.size() != model_.nq() || conf_.v.size() != model_.nv())
    throw std::invalid_argument("sim: state size mismatch");
  dyn_.update(conf_);
}

void SimWorld::addDisturbance(const Disturbance& d) {
  if (!model_.hasFrame(d.frame))
    throw std::invalid_argument("sim: disturbance frame not in model: " + d.frame);
  disturbances_.push_back(d);
}

std::vector<CornerContact> SimWorld::contactForces() const {
  std::vector<CornerContact> contacts;
  const Kinematics& kin = dyn_.kinematics();
  for (size_t i = 0; i < model_.feet.size(); ++i) {
    const FootPatch& patch = model_.feet[i];
    const Frame& frame = model_.frames[static_cast<size_t>(patch.frame)];
    const Iso3 X = kin.framePose(patch.frame);
    const double cx[4] = {patch.half_length, patch.half_length, -patch.half_length,
                          -patch.half_length};
    const double cy[4] = {patch.half_width, -patch.half_width, patch.half_width,
                          -patch.half_width};
    for (int c = 0; c < 4; ++c) {
      const Vec3 p = X * Vec3(cx[c], cy[c], 0.0);
      double h = 0.0;
      Vec3 n = Vec3::UnitZ();
      terrain_.query(p.x(), p.y(), &h, &n);
      const double pen = h - p.z();
      if (pen <= 0.0) continue;
      const Vec3 v = kin.pointVelocity(frame.body, p);
      const double vn = v.dot(n);
      const double fn = std::max(0.0, contact_.k_n * pen - contact_.d_n * vn);
      if (fn <= 0.0) continue;
      const Vec3 vt = v - vn * n;
      const Vec3 ft = -contact_.mu_s * fn / (vt.norm() + contact_.v_reg) * vt;
      CornerContact cc;
      cc.foot = static_cast<int>(i);
      cc.point = p;
      cc.force = fn * n + ft;
      cc.penetration = pen;
      contacts.push_back(cc);
    }
  }
  return contacts;
}

VecX SimWorld::generalizedContactForce(const std::vector<CornerContact>& contacts) const {
  const Kinematics& kin = dyn_.kinematics();
  VecX f_gen = VecX::Zero(model_.nv());
  if (contacts.empty()) return f_gen;

  std::array<MatX, 2> J_foot;
  std::array<Vec3, 2> p_foot;
  std::array<bool, 2> have{false, false};
  for (const CornerContact& cc : contacts) {
    const size_t i = static_cast<size_t>(cc.foot);
    if (!have[i]) {
      J_foot[i] = kin.frameJacobian(model_.feet[i].frame);
      p_foot[i] = kin.framePose(model_.feet[i].frame).translation();
      have[i] = true;
    }
    const Vec3 r = cc.point - p_foot[i];
    // point Jacobian = linear rows shifted by the corner offset
    const MatX J_p = J_foot[i].bottomRows(3) - skew(r) * J_foot[i].topRows(3);
    f_gen += J_p.transpose() * cc.force;
  }
  return f_gen;
}

VecX SimWorld::generalizedExternalForce() const {
  VecX f_gen = VecX::Zero(model_.nv());
  const Kinematics& kin = dyn_.kinematics();
  for (const Disturbance& d : disturbances_) {
    Vec6 w = Vec6::Zero();
    if (d.duration <= 0.0) {
      if (time_ <= d.start && d.start < time_ + dt_) w = d.wrench / dt_;
    } else if (time_ >= d.start && time_ < d.start + d.duration) {
      w = d.wrench;
    }
    if (w.isZero()) continue;
    const int frame = model_.frameIndex(d.frame);
    f_gen += kin.frameJacobian(frame).transpose() * w;
  }
  return f_gen;
}

void SimWorld::step(const VecX& tau) {
  if (tau.size() != model_.n_j) throw std::invalid_argument("sim: torque vector size mismatch");
  VecX tau_c = tau;
  for (int j = 0; j < model_.n_j; ++j)
    tau_c(j) = std::clamp(tau_c(j), -model_.torque_limit(j), model_.torque_limit(j));

  const std::vector<CornerContact> contacts = contactForces();
  foot_force_ = {Vec3::Zero(), Vec3::Zero()};
  for (const CornerContact& cc : contacts)
    foot_force_[static_cast<size_t>(cc.foot)] += cc.force;

  VecX rhs = -dyn_.biasForce();
  rhs.tail(model_.n_j) += tau_c;
  rhs += generalizedContactForce(contacts);
  rhs += generalizedExternalForce();

  const VecX vdot = dyn_.massMatrix().ldlt().solve(rhs);

  conf_.v += dt_ * vdot;
  conf_.q = integratePosition(model_, conf_.q, conf_.v, dt_);
  time_ += dt_;

  if (!conf_.q.allFinite() || !conf_.v.allFinite() || conf_.v.lpNorm<Eigen::Infinity>() > 1e4 ||
      conf_.q.head<3>().lpNorm<Eigen::Infinity>() > 1e4)
    throw SimDivergedError("simulation state diverged at t=" + std::to_string(time_));

  dyn_.update(conf_);
}

std::array<double, 2> SimWorld::footNormalForce() const {
  std::array<double, 2> out{0.0, 0.0};
  for (size_t i = 0; i < model_.feet.size() && i < 2; ++i) {
    const Vec3 p = dyn_.kinematics().framePose(model_.feet[i].frame).translation();
    Vec3 n = Vec3::UnitZ();
    terrain_.query(p.x(), p.y(), nullptr, &n);
    out[i] = foot_force_[i].dot(n);
  }
  return out;
}

}  // namespace biped
