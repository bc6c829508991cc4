#include "biped/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "biped/dynamics.hpp"
#include "biped/errors.hpp"
#include "biped/model_io.hpp"

namespace biped {
namespace {

using nlohmann::json;

json parseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return j;
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

double numOr(const json& j, const std::string& key, double fallback,
             const std::string& where) {
  if (!j.contains(key)) return fallback;
  return num(j.at(key), where + "." + key);
}

bool boolOr(const json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return j.at(key).get<bool>();
}

Vec3 vec3Or(const json& j, const std::string& key, const Vec3& fallback,
            const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 3)
    throw ConfigError(where + "." + key + ": expected an array of 3 numbers");
  return Vec3(num(a[0], where), num(a[1], where), num(a[2], where));
}

Terrain parseTerrain(const json& j, unsigned seed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::string kind = j.value("kind", "flat");
  if (kind == "flat") return Terrain::Flat();
  if (kind == "slope") {
    const double deg = numOr(j, "angle_deg", 0.0, where);
    Vec2 dir(1.0, 0.0);
    if (j.contains("direction")) {
      const json& a = j.at("direction");
      if (!a.is_array() || a.size() != 2)
        throw ConfigError(where + ".direction: expected an array of 2 numbers");
      dir = Vec2(num(a[0], where), num(a[1], where));
    }
    if (dir.norm() < 1e-12) throw ConfigError(where + ".direction: zero vector");
    return Terrain::Slope(deg * M_PI / 180.0, dir);
  }
  if (kind == "stairs") {
    const double rise = numOr(j, "rise", 0.05, where);
    const double run = numOr(j, "run", 0.25, where);
    if (!(run > 0.0)) throw ConfigError(where + ".run: must be positive");
    return Terrain::Stairs(rise, run);
  }
  if (kind == "rough") {
    const double amplitude = numOr(j, "amplitude", 0.02, where);
    const double spacing = numOr(j, "spacing", 0.15, where);
    const double extent = numOr(j, "extent", 3.0, where);
    if (!(spacing > 0.0)) throw ConfigError(where + ".spacing: must be positive");
    return Terrain::Rough(seed, amplitude, spacing, extent);
  }
  throw ConfigError(where + ".kind: unknown terrain kind '" + kind + "'");
}

VecX jointVector(const json& j, const std::string& key, int n_j, const VecX& fallback,
                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number()) return VecX::Constant(n_j, v.get<double>());
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != n_j)
      throw ConfigError(where + "." + key + ": expected " + std::to_string(n_j) + " entries");
    VecX out(n_j);
    for (int i = 0; i < n_j; ++i) out(i) = num(v[static_cast<size_t>(i)], where + "." + key);
    return out;
  }
  throw ConfigError(where + "." + key + ": expected a number or array");
}

}  // namespace

ScenarioConfig loadScenario(const std::string& path, const ScenarioOverrides& overrides) {
  const json j = parseFile(path);
  if (!j.is_object()) throw ConfigError(path + ": top level must be an object");

  ScenarioConfig cfg;
  cfg.name = j.value("name", std::filesystem::path(path).stem().string());
  if (!j.contains("model") || !j.at("model").is_string())
    throw ConfigError(path + ": missing required string field 'model'");
  std::filesystem::path model_path(j.at("model").get<std::string>());
  if (model_path.is_relative())
    model_path = std::filesystem::path(path).parent_path() / model_path;
  cfg.model_path = model_path.string();

  cfg.duration = overrides.duration.value_or(numOr(j, "duration", 5.0, "scenario"));
  if (!(cfg.duration > 0.0)) throw ConfigError("scenario.duration: must be positive");
  cfg.seed = overrides.seed.value_or(
      static_cast<unsigned>(numOr(j, "seed", 0.0, "scenario")));
  cfg.out_dir = overrides.out_dir.value_or(j.value("out_dir", std::string(".")));
  cfg.async_mpc = boolOr(j, "async_mpc", false, "scenario");

  cfg.terrain = j.contains("terrain") ? parseTerrain(j.at("terrain"), cfg.seed, "terrain")
                                      : Terrain::Flat();

  if (j.contains("contact")) {
    const json& c = j.at("contact");
    cfg.contact.k_n = numOr(c, "k_n", cfg.contact.k_n, "contact");
    cfg.contact.d_n = numOr(c, "d_n", cfg.contact.d_n, "contact");
    cfg.contact.v_reg = numOr(c, "v_reg", cfg.contact.v_reg, "contact");
    cfg.contact.mu_s = numOr(c, "mu_s", cfg.contact.mu_s, "contact");
  }
  if (j.contains("rates")) {
    const json& r = j.at("rates");
    cfg.rates.sim_dt = numOr(r, "sim_dt", cfg.rates.sim_dt, "rates");
    cfg.rates.control_hz = numOr(r, "control_hz", cfg.rates.control_hz, "rates");
    cfg.rates.wbc_hz = numOr(r, "wbc_hz", cfg.rates.wbc_hz, "rates");
    cfg.rates.mpc_hz = numOr(r, "mpc_hz", cfg.rates.mpc_hz, "rates");
    if (!(cfg.rates.sim_dt > 0.0)) throw ConfigError("rates.sim_dt: must be positive");
    if (cfg.rates.control_hz < cfg.rates.wbc_hz || cfg.rates.wbc_hz < cfg.rates.mpc_hz)
      throw ConfigError("rates: require control_hz >= wbc_hz >= mpc_hz");
  }

  if (j.contains("mpc")) {
    const json& m = j.at("mpc");
    cfg.mpc.horizon = static_cast<int>(numOr(m, "horizon", cfg.mpc.horizon, "mpc"));
    if (cfg.mpc.horizon < 1) throw ConfigError("mpc.horizon: must be >= 1");
    cfg.mpc.dt = numOr(m, "dt", cfg.mpc.dt, "mpc");
    cfg.mpc.force_weight = numOr(m, "force_weight", cfg.mpc.force_weight, "mpc");
    cfg.mpc.mu = numOr(m, "mu", cfg.mpc.mu, "mpc");
    cfg.mpc.f_min = numOr(m, "f_min", cfg.mpc.f_min, "mpc");
    cfg.mpc.f_max = numOr(m, "f_max", cfg.mpc.f_max, "mpc");
    if (m.contains("state_weight")) {
      const json& w = m.at("state_weight");
      if (!w.is_array() || w.size() != 12)
        throw ConfigError("mpc.state_weight: expected an array of 12 numbers");
      for (int i = 0; i < 12; ++i) cfg.mpc.state_weight(i) = num(w[static_cast<size_t>(i)], "mpc.state_weight");
    }
    if (m.contains("state_weight_walk")) {
      const json& w = m.at("state_weight_walk");
      if (!w.is_array() || w.size() != 12)
        throw ConfigError("mpc.state_weight_walk: expected an array of 12 numbers");
      for (int i = 0; i < 12; ++i)
        cfg.mpc.state_weight_walk(i) = num(w[static_cast<size_t>(i)], "mpc.state_weight_walk");
    }
    if (m.contains("foothold")) {
      const json& f = m.at("foothold");
      cfg.mpc.foothold.k_raibert = numOr(f, "k_raibert", cfg.mpc.foothold.k_raibert, "mpc.foothold");
      cfg.mpc.foothold.k_lateral = numOr(f, "k_lateral", cfg.mpc.foothold.k_lateral, "mpc.foothold");
      cfg.mpc.foothold.reach_x = numOr(f, "reach_x", cfg.mpc.foothold.reach_x, "mpc.foothold");
      cfg.mpc.foothold.reach_y = numOr(f, "reach_y", cfg.mpc.foothold.reach_y, "mpc.foothold");
    }
  }

  if (j.contains("wbc")) {
    const json& w = j.at("wbc");
    cfg.wbc.w_torso_ori = numOr(w, "w_torso_ori", cfg.wbc.w_torso_ori, "wbc");
    cfg.wbc.w_height = numOr(w, "w_height", cfg.wbc.w_height, "wbc");
    cfg.wbc.w_xy = numOr(w, "w_xy", cfg.wbc.w_xy, "wbc");
    cfg.wbc.w_swing = numOr(w, "w_swing", cfg.wbc.w_swing, "wbc");
    cfg.wbc.w_posture = numOr(w, "w_posture", cfg.wbc.w_posture, "wbc");
    cfg.wbc.w_wrench = numOr(w, "w_wrench", cfg.wbc.w_wrench, "wbc");
    cfg.wbc.w_tau = numOr(w, "w_tau", cfg.wbc.w_tau, "wbc");
    cfg.wbc.eps_qdd = numOr(w, "eps_qdd", cfg.wbc.eps_qdd, "wbc");
    cfg.wbc.mu = numOr(w, "mu", cfg.wbc.mu, "wbc");
    cfg.wbc.f_max = numOr(w, "f_max", cfg.wbc.f_max, "wbc");
    auto gains = [&](const char* key, TaskGains& g) {
      if (!w.contains(key)) return;
      const json& t = w.at(key);
      g.kp = numOr(t, "kp", g.kp, std::string("wbc.") + key);
      g.kd = numOr(t, "kd", g.kd, std::string("wbc.") + key);
    };
    gains("ori", cfg.wbc.ori);
    gains("height", cfg.wbc.height);
    gains("xy", cfg.wbc.xy);
    gains("xy_walk", cfg.wbc.xy_walk);
    gains("swing", cfg.wbc.swing);
    gains("posture", cfg.wbc.posture);
    gains("fallback", cfg.wbc.fallback);
  }

  if (j.contains("gait")) {
    const json& g = j.at("gait");
    cfg.gait.adapt = boolOr(g, "adapt", cfg.gait.adapt, "gait");
    cfg.gait.cycle_time = numOr(g, "cycle_time", cfg.gait.cycle_time, "gait");
    cfg.gait.duty = numOr(g, "duty", cfg.gait.duty, "gait");
    cfg.gait.apex = numOr(g, "apex", cfg.gait.apex, "gait");
    cfg.gait.t_min = numOr(g, "t_min", cfg.gait.t_min, "gait");
    cfg.gait.t_max = numOr(g, "t_max", cfg.gait.t_max, "gait");
    cfg.gait.early_td_force = numOr(g, "early_td_force", cfg.gait.early_td_force, "gait");
    cfg.gait.early_td_phase = numOr(g, "early_td_phase", cfg.gait.early_td_phase, "gait");
    cfg.gait.late_td_extend = numOr(g, "late_td_extend", cfg.gait.late_td_extend, "gait");
    cfg.gait.late_td_drop = numOr(g, "late_td_drop", cfg.gait.late_td_drop, "gait");
    cfg.gait.adapt_shrink = numOr(g, "adapt_shrink", cfg.gait.adapt_shrink, "gait");
    cfg.gait.adapt_var_ratio = numOr(g, "adapt_var_ratio", cfg.gait.adapt_var_ratio, "gait");
    cfg.gait.standing_vcmd = numOr(g, "standing_vcmd", cfg.gait.standing_vcmd, "gait");
    if (!(cfg.gait.duty > 0.0 && cfg.gait.duty < 1.0))
      throw ConfigError("gait.duty: must lie in (0, 1)");
  }

  // PD gains need the joint count; load the model once here for sizing.
  RobotModel model;
  try {
    model = loadModel(cfg.model_path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario.model: ") + e.what());
  }
  // Default motor gains are capped per joint by the reflected inertia seen at
  // the nominal posture: a discrete servo sampled at the control rate goes
  // unstable (period-two) once kd*h or kp*h^2 is large against the joint's
  // mass-matrix diagonal, which the light distal joints would otherwise hit.
  {
    Dynamics dyn(model);
    Configuration nominal = Configuration::Zero(model);
    nominal.q(2) = model.nominal_base_height;
    nominal.q(6) = 1.0;
    nominal.q.tail(model.n_j) = model.nominal_posture;
    dyn.update(nominal);
    const double h = 1.0 / cfg.rates.control_hz;
    VecX kp_def(model.n_j), kd_def(model.n_j);
    for (int i = 0; i < model.n_j; ++i) {
      const double mjj = dyn.massMatrix()(6 + i, 6 + i);
      kp_def(i) = std::min(80.0, 0.02 * mjj / (h * h));
      kd_def(i) = std::min(2.0, 0.25 * mjj / h);
    }
    const json pd = j.contains("pd") ? j.at("pd") : json::object();
    cfg.pd_kp = jointVector(pd, "kp", model.n_j, kp_def, "pd");
    cfg.pd_kd = jointVector(pd, "kd", model.n_j, kd_def, "pd");
  }

  if (j.contains("commands")) {
    const json& cs = j.at("commands");
    if (!cs.is_array()) throw ConfigError("commands: expected an array");
    for (size_t i = 0; i < cs.size(); ++i) {
      const json& c = cs[i];
      const std::string where = "commands[" + std::to_string(i) + "]";
      CommandPoint p;
      p.t = numOr(c, "t", 0.0, where);
      p.v_cmd.x() = numOr(c, "vx", 0.0, where);
      p.v_cmd.y() = numOr(c, "vy", 0.0, where);
      p.yaw_rate = numOr(c, "yaw_rate", 0.0, where);
      p.walk = boolOr(c, "walk", false, where);
      if (!cfg.commands.empty() && p.t < cfg.commands.back().t)
        throw ConfigError(where + ".t: command times must be non-decreasing");
      cfg.commands.push_back(p);
    }
  }
  if (cfg.commands.empty()) cfg.commands.push_back(CommandPoint{});

  if (j.contains("disturbances")) {
    const json& ds = j.at("disturbances");
    if (!ds.is_array()) throw ConfigError("disturbances: expected an array");
    for (size_t i = 0; i < ds.size(); ++i) {
      const json& d = ds[i];
      const std::string where = "disturbances[" + std::to_string(i) + "]";
      Disturbance dist;
      if (!d.contains("frame") || !d.at("frame").is_string())
        throw ConfigError(where + ": missing string field 'frame'");
      dist.frame = d.at("frame").get<std::string>();
      const Vec3 moment = vec3Or(d, "moment", Vec3::Zero(), where);
      const Vec3 force = vec3Or(d, "force", Vec3::Zero(), where);
      dist.wrench.head<3>() = moment;
      dist.wrench.tail<3>() = force;
      dist.start = numOr(d, "start", 0.0, where);
      dist.duration = numOr(d, "duration", 0.0, where);
      cfg.disturbances.push_back(dist);
    }
  }

  cfg.com_height = numOr(j, "com_height", 0.0, "scenario");
  if (j.contains("start")) {
    const json& s = j.at("start");
    cfg.start_x = numOr(s, "x", 0.0, "start");
    cfg.start_y = numOr(s, "y", 0.0, "start");
    cfg.start_yaw = numOr(s, "yaw", 0.0, "start");
  }
  cfg.fall_fraction = numOr(j, "fall_fraction", 0.6, "scenario");
  if (!(cfg.fall_fraction > 0.0 && cfg.fall_fraction < 1.0))
    throw ConfigError("scenario.fall_fraction: must lie in (0, 1)");
  return cfg;
}

std::vector<VecX> loadPostureSweep(const std::string& path, const RobotModel& model) {
  const json j = parseFile(path);
  const json* rows = nullptr;
  if (j.is_array()) {
    rows = &j;
  } else if (j.is_object() && j.contains("postures") && j.at("postures").is_array()) {
    rows = &j.at("postures");
  } else {
    throw ConfigError(path + ": expected an array of postures or {\"postures\": [...]}");
  }
  std::vector<VecX> out;
  for (size_t i = 0; i < rows->size(); ++i) {
    const json& r = (*rows)[i];
    if (!r.is_array() || static_cast<int>(r.size()) != model.n_j)
      throw ConfigError(path + ": posture " + std::to_string(i) + " must list " +
                        std::to_string(model.n_j) + " joint angles");
    VecX q(model.n_j);
    for (int k = 0; k < model.n_j; ++k) q(k) = num(r[static_cast<size_t>(k)], "posture");
    out.push_back(q);
  }
  if (out.empty()) throw ConfigError(path + ": posture sweep is empty");
  return out;
}

}  // namespace biped
