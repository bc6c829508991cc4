#include "biped/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "biped/dynamics.hpp"

namespace biped {

void LogWriter::open(const std::string& path, const std::vector<std::string>& columns) {
  if (isOpen()) throw std::logic_error("log: writer already open");
  if (columns.empty()) throw std::invalid_argument("log: no columns");
  path_ = path;
  width_ = columns.size();
  buffer_.clear();
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += columns[i];
  }
  buffer_ += '\n';
}

void LogWriter::row(const std::vector<double>& values) {
  if (!isOpen()) throw std::logic_error("log: writer not open");
  if (values.size() != width_) throw std::invalid_argument("log: row width mismatch");
  char num[32];
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) buffer_ += ',';
    std::snprintf(num, sizeof(num), "%.17g", values[i]);
    buffer_ += num;
  }
  buffer_ += '\n';
}

void LogWriter::close() {
  if (!isOpen()) return;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw std::runtime_error("log: cannot write " + path_);
  out << buffer_;
  out.close();
  path_.clear();
  buffer_.clear();
  width_ = 0;
}

int LogTable::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

int LogTable::columnOrThrow(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw std::out_of_range("log: no column named " + name);
  return c;
}

LogTable LogTable::Read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("log: cannot read " + path);
  LogTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("log: empty file " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.columns.size())
      throw std::runtime_error("log: ragged row in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {
double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const size_t idx = static_cast<size_t>(
      std::min<double>(static_cast<double>(xs.size()) - 1.0,
                       std::ceil(p * static_cast<double>(xs.size())) - 1.0));
  return xs[std::max<size_t>(idx, 0)];
}
}  // namespace

Metrics computeMetrics(const LogTable& log) {
  Metrics m;
  if (log.rows.empty()) return m;

  const int c_t = log.columnOrThrow("t");
  const size_t last = log.rows.size() - 1;
  m.duration = log.at(last, c_t) - log.at(0, c_t);

  const int c_cx = log.column("com_x");
  const int c_cy = log.column("com_y");
  const int c_cz = log.column("com_z");
  if (c_cx >= 0 && c_cy >= 0) {
    const double dx = log.at(last, c_cx) - log.at(0, c_cx);
    const double dy = log.at(last, c_cy) - log.at(0, c_cy);
    m.distance = std::hypot(dx, dy);
  }
  if (c_cz >= 0) m.elevation_gain = log.at(last, c_cz) - log.at(0, c_cz);

  const int c_fallen = log.column("fallen");
  if (c_fallen >= 0) {
    for (size_t r = 0; r < log.rows.size(); ++r) {
      if (log.at(r, c_fallen) > 0.5) {
        m.fell = true;
        m.fall_time = log.at(r, c_t);
        break;
      }
    }
  }

  // Planar speed and tracking error in the heading frame.
  const int c_vx = log.column("v0");
  const int c_vy = log.column("v1");
  const int c_qx = log.column("q3");  // quaternion x,y,z,w at q3..q6
  const int c_cmdx = log.column("v_cmd_x");
  const int c_cmdy = log.column("v_cmd_y");
  const int c_walk = log.column("walk_cmd");
  double speed_acc = 0.0;
  size_t speed_cnt = 0;
  double err_acc = 0.0;
  size_t err_cnt = 0;
  for (size_t r = 0; r < log.rows.size(); ++r) {
    if (c_vx < 0 || c_vy < 0) break;
    const double vx = log.at(r, c_vx);
    const double vy = log.at(r, c_vy);
    speed_acc += std::hypot(vx, vy);
    ++speed_cnt;
    if (c_cmdx < 0 || c_walk < 0 || log.at(r, c_walk) < 0.5) continue;
    double yaw = 0.0;
    if (c_qx >= 0) {
      const double x = log.at(r, c_qx), y = log.at(r, c_qx + 1), z = log.at(r, c_qx + 2),
                   w = log.at(r, c_qx + 3);
      yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
    }
    const double cz = std::cos(yaw), sz = std::sin(yaw);
    const double bvx = cz * vx + sz * vy;
    const double bvy = -sz * vx + cz * vy;
    const double cmdx = log.at(r, c_cmdx);
    const double cmdy = c_cmdy >= 0 ? log.at(r, c_cmdy) : 0.0;
    err_acc += std::hypot(bvx - cmdx, bvy - cmdy);
    ++err_cnt;
  }
  if (speed_cnt) m.mean_speed = speed_acc / static_cast<double>(speed_cnt);
  if (err_cnt) m.mean_vel_error = err_acc / static_cast<double>(err_cnt);

  // Per-joint torque peaks.
  std::vector<int> tau_cols;
  for (int j = 0;; ++j) {
    const int c = log.column("tau" + std::to_string(j));
    if (c < 0) break;
    tau_cols.push_back(c);
  }
  m.max_torque = VecX::Zero(static_cast<long>(tau_cols.size()));
  for (size_t r = 0; r < log.rows.size(); ++r)
    for (size_t j = 0; j < tau_cols.size(); ++j)
      m.max_torque(static_cast<long>(j)) =
          std::max(m.max_torque(static_cast<long>(j)), std::abs(log.at(r, tau_cols[j])));

  // Solver timing columns are optional; deterministic logs omit them and the
  // runtime fills these fields from its own measurements instead.
  const int c_mpc_ms = log.column("mpc_ms");
  const int c_wbc_ms = log.column("wbc_ms");
  if (c_mpc_ms >= 0) {
    std::vector<double> xs;
    for (size_t r = 0; r < log.rows.size(); ++r)
      if (log.at(r, c_mpc_ms) > 0.0) xs.push_back(log.at(r, c_mpc_ms));
    if (!xs.empty()) {
      double acc = 0.0;
      for (double x : xs) acc += x;
      m.mpc_mean_ms = acc / static_cast<double>(xs.size());
      m.mpc_p95_ms = percentile(xs, 0.95);
    }
  }
  if (c_wbc_ms >= 0) {
    std::vector<double> xs;
    for (size_t r = 0; r < log.rows.size(); ++r)
      if (log.at(r, c_wbc_ms) > 0.0) xs.push_back(log.at(r, c_wbc_ms));
    if (!xs.empty()) {
      double acc = 0.0;
      for (double x : xs) acc += x;
      m.wbc_mean_ms = acc / static_cast<double>(xs.size());
      m.wbc_p95_ms = percentile(xs, 0.95);
    }
  }
  return m;
}

std::string metricsToJson(const Metrics& metrics) {
  nlohmann::json j;
  j["duration_s"] = metrics.duration;
  j["distance_m"] = metrics.distance;
  j["mean_vel_error_mps"] = metrics.mean_vel_error;
  j["mean_speed_mps"] = metrics.mean_speed;
  std::vector<double> taus(metrics.max_torque.data(),
                           metrics.max_torque.data() + metrics.max_torque.size());
  j["max_torque_nm"] = taus;
  j["fell"] = metrics.fell;
  j["fall_time_s"] = metrics.fall_time;
  j["mpc_mean_ms"] = metrics.mpc_mean_ms;
  j["mpc_p95_ms"] = metrics.mpc_p95_ms;
  j["wbc_mean_ms"] = metrics.wbc_mean_ms;
  j["wbc_p95_ms"] = metrics.wbc_p95_ms;
  j["elevation_gain_m"] = metrics.elevation_gain;
  return j.dump(2) + "\n";
}

ContractReport checkWbcContract(const LogTable& log, const RobotModel& model,
                                const WbcConfig& wbc_config) {
  ContractReport report;
  const int nq = model.nq();
  const int nv = model.nv();
  const int n_j = model.n_j;

  const int c_q0 = log.columnOrThrow("q0");
  const int c_v0 = log.columnOrThrow("v0");
  const int c_qdd0 = log.columnOrThrow("qdd0");
  const int c_tau0 = log.columnOrThrow("tau0");
  const int c_ul0 = log.columnOrThrow("u_l0");
  const int c_ur0 = log.columnOrThrow("u_r0");
  const int c_stl = log.columnOrThrow("stance_l");
  const int c_str = log.columnOrThrow("stance_r");
  const int c_status = log.columnOrThrow("wbc_status");
  const int c_fallback = log.columnOrThrow("wbc_fallback");
  const int c_fresh = log.columnOrThrow("wbc_fresh");

  Dynamics dyn(model);
  Configuration conf;
  conf.q = VecX::Zero(nq);
  conf.v = VecX::Zero(nv);

  std::array<WrenchCone, 2> cones;
  for (size_t i = 0; i < model.feet.size() && i < 2; ++i)
    cones[i] = contactWrenchCone(model.feet[i].half_length, model.feet[i].half_width,
                                 wbc_config.mu, wbc_config.f_max);

  static const char* kFootFrames[2] = {"l_foot", "r_foot"};

  for (size_t r = 0; r < log.rows.size(); ++r) {
    if (log.at(r, c_fresh) < 0.5) continue;
    if (log.at(r, c_fallback) > 0.5) continue;
    if (log.at(r, c_status) != 0.0) continue;  // only fresh optimal solutions

    for (int i = 0; i < nq; ++i) conf.q(i) = log.at(r, c_q0 + i);
    for (int i = 0; i < nv; ++i) conf.v(i) = log.at(r, c_v0 + i);
    dyn.update(conf);

    VecX qdd(nv), tau(n_j);
    for (int i = 0; i < nv; ++i) qdd(i) = log.at(r, c_qdd0 + i);
    for (int i = 0; i < n_j; ++i) tau(i) = log.at(r, c_tau0 + i);
    std::array<Vec6, 2> u;
    for (int i = 0; i < 6; ++i) {
      u[0](i) = log.at(r, c_ul0 + i);
      u[1](i) = log.at(r, c_ur0 + i);
    }
    const std::array<bool, 2> stance{log.at(r, c_stl) > 0.5, log.at(r, c_str) > 0.5};

    VecX residual = dyn.massMatrix() * qdd + dyn.biasForce();
    residual.tail(n_j) -= tau;
    for (int i = 0; i < 2; ++i) {
      if (!stance[static_cast<size_t>(i)]) continue;
      const int frame = model.frameIndex(kFootFrames[i]);
      const Mat3 R = dyn.kinematics().framePose(frame).linear();
      MatX rot = MatX::Zero(6, 6);
      rot.topLeftCorner<3, 3>() = R.transpose();
      rot.bottomRightCorner<3, 3>() = R.transpose();
      const MatX J_c = rot * dyn.kinematics().frameJacobian(frame);
      residual -= J_c.transpose() * u[static_cast<size_t>(i)];
      report.max_cone_violation = std::max(
          report.max_cone_violation,
          coneViolation(cones[static_cast<size_t>(i)], u[static_cast<size_t>(i)]));
    }
    report.max_dynamics_residual =
        std::max(report.max_dynamics_residual, residual.lpNorm<Eigen::Infinity>());
    for (int j = 0; j < n_j; ++j)
      report.max_torque_excess =
          std::max(report.max_torque_excess, std::abs(tau(j)) - model.torque_limit(j));
    ++report.ticks_checked;
  }
  report.max_torque_excess = std::max(report.max_torque_excess, 0.0);
  return report;
}

}  // namespace biped
