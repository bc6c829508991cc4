#include "biped/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "biped/errors.hpp"
#include "biped/model_io.hpp"

namespace biped {

const char* toString(RunStatus status) {
  switch (status) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Fell: return "fell";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::ConfigError: return "config_error";
  }
  return "unknown";
}

std::vector<std::string> logColumns(const RobotModel& model) {
  std::vector<std::string> cols{"t", "mode", "phase"};
  for (int i = 0; i < model.nq(); ++i) cols.push_back("q" + std::to_string(i));
  for (int i = 0; i < model.nv(); ++i) cols.push_back("v" + std::to_string(i));
  for (int i = 0; i < model.nv(); ++i) cols.push_back("qdd" + std::to_string(i));
  for (int i = 0; i < model.n_j; ++i) cols.push_back("tau" + std::to_string(i));
  for (int i = 0; i < model.n_j; ++i) cols.push_back("tau_cmd" + std::to_string(i));
  for (int i = 0; i < 6; ++i) cols.push_back("u_l" + std::to_string(i));
  for (int i = 0; i < 6; ++i) cols.push_back("u_r" + std::to_string(i));
  cols.insert(cols.end(), {"stance_l", "stance_r", "swing_phase_l", "swing_phase_r",
                           "fz_l", "fz_r", "com_x", "com_y", "com_z",
                           "v_cmd_x", "v_cmd_y", "yaw_rate_cmd", "walk_cmd",
                           "wbc_status", "wbc_fallback", "wbc_fresh", "wbc_iterations",
                           "mpc_status", "mpc_fresh", "mpc_iterations", "fallen"});
  return cols;
}

namespace {

struct AsyncMpc {
  MpcController* controller = nullptr;
  std::thread worker;
  std::mutex mu;
  std::condition_variable cv;
  bool stop = false;
  bool has_job = false;
  bool has_result = false;
  MpcInput job;
  MpcPlan result;

  void start(MpcController* c) {
    controller = c;
    worker = std::thread([this] { loop(); });
  }
  void loop() {
    for (;;) {
      MpcInput in;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [this] { return has_job || stop; });
        if (stop) return;
        in = job;
        has_job = false;
      }
      MpcPlan plan = controller->solve(in);
      {
        std::lock_guard<std::mutex> lock(mu);
        result = std::move(plan);
        has_result = true;
      }
    }
  }
  void submit(const MpcInput& in) {
    {
      std::lock_guard<std::mutex> lock(mu);
      job = in;
      has_job = true;
    }
    cv.notify_one();
  }
  bool take(MpcPlan* plan) {
    std::lock_guard<std::mutex> lock(mu);
    if (!has_result) return false;
    *plan = std::move(result);
    has_result = false;
    return true;
  }
  void shutdown() {
    if (!worker.joinable()) return;
    {
      std::lock_guard<std::mutex> lock(mu);
      stop = true;
    }
    cv.notify_one();
    worker.join();
  }
};

}  // namespace

struct Runtime::Impl {
  ScenarioConfig cfg;
  RobotModel model;
  SimWorld world;
  Dynamics dyn;  // controller-side model evaluation at the tick snapshot
  GaitScheduler gait;
  MpcController mpc;
  WbcController wbc;
  AsyncMpc async;

  MpcPlan plan;
  WbcOutput wbc_out;

  double dt_control = 1e-3;
  int sim_substeps = 10;
  int wbc_div = 2;
  int mpc_div = 10;
  long tick_count = 0;

  double yaw_des = 0.0;
  Vec2 xy_anchor = Vec2::Zero();       // CoM xy reference, advanced by the command
  Vec2 torso_xy_offset = Vec2::Zero();  // torso origin minus CoM, nominal posture, yaw frame
  Vec2 v_ref = Vec2::Zero();           // slewed velocity reference, world xy
  double com_h_des = 0.0;    // commanded CoM height above terrain
  double torso_h_nom = 0.0;  // nominal torso height above terrain
  double torso_h_offset = 0.0;

  std::array<SwingSpec, 2> swing;
  std::array<Vec3, 2> foothold{Vec3::Zero(), Vec3::Zero()};

  VecX q_des_j, v_des_j, tau_ff, tau_cmd;

  bool fallen = false;
  double fall_time = -1.0;
  bool last_wbc_fresh = false;
  bool last_mpc_fresh = false;
  const bool debug_trace = std::getenv("BIPED_DEBUG") != nullptr;

  std::vector<double> mpc_ms, wbc_ms;

  LogWriter log;

  explicit Impl(const ScenarioConfig& config)
      : cfg(config),
        model(loadModel(config.model_path)),
        world(model, config.terrain, config.contact, config.rates.sim_dt),
        dyn(model),
        gait(config.gait),
        mpc(config.mpc),
        wbc(config.wbc) {
    if (!(cfg.rates.control_hz > 0.0)) throw ConfigError("rates.control_hz: must be positive");
    dt_control = 1.0 / cfg.rates.control_hz;
    sim_substeps = static_cast<int>(std::lround(dt_control / cfg.rates.sim_dt));
    if (sim_substeps < 1 ||
        std::abs(sim_substeps * cfg.rates.sim_dt - dt_control) > 1e-9 * dt_control)
      throw ConfigError("rates: control period must be an integer multiple of sim_dt");
    wbc_div = static_cast<int>(std::lround(cfg.rates.control_hz / cfg.rates.wbc_hz));
    mpc_div = static_cast<int>(std::lround(cfg.rates.control_hz / cfg.rates.mpc_hz));
    wbc_div = std::max(wbc_div, 1);
    mpc_div = std::max(mpc_div, 1);

    // Initial state: nominal posture standing at the start pose.
    Configuration c0 = Configuration::Zero(model);
    c0.q(0) = cfg.start_x;
    c0.q(1) = cfg.start_y;
    c0.q(2) = cfg.terrain.height(cfg.start_x, cfg.start_y) + model.nominal_base_height;
    c0.setBaseQuat(Quat(Eigen::AngleAxisd(cfg.start_yaw, Vec3::UnitZ())));
    c0.q.tail(model.n_j) = model.nominal_posture;
    world.state() = c0;
    world.refresh();
    for (const Disturbance& d : cfg.disturbances) world.addDisturbance(d);

    dyn.update(c0);
    yaw_des = cfg.start_yaw;
    const double ground = cfg.terrain.height(cfg.start_x, cfg.start_y);
    const double com_h_nom = dyn.centroidal().com.z() - ground;
    com_h_des = cfg.com_height > 0.0 ? cfg.com_height : com_h_nom;
    torso_h_nom =
        dyn.kinematics().framePose(model.frameIndex("torso")).translation().z() - ground;
    torso_h_offset = com_h_des - com_h_nom;

    for (int i = 0; i < 2; ++i) {
      const Vec3 p = dyn.kinematics().framePose(model.feet[static_cast<size_t>(i)].frame)
                         .translation();
      swing[static_cast<size_t>(i)] = SwingSpec{p, p, cfg.gait.apex, gait.swingDuration()};
      foothold[static_cast<size_t>(i)] = p;
    }

    // Rest the CoM reference over the support centroid (not the initial CoM):
    // that is the only point where balance needs neither net horizontal force
    // nor net contact moment. The torso target keeps its posture offset.
    xy_anchor = 0.5 * (foothold[0].head<2>() + foothold[1].head<2>());
    const Vec2 off_world =
        dyn.kinematics().framePose(model.frameIndex("torso")).translation().head<2>() -
        dyn.centroidal().com.head<2>();
    torso_xy_offset =  // expressed in the yaw frame so it tracks heading
        (rotZ(-cfg.start_yaw) * Vec3(off_world.x(), off_world.y(), 0.0)).head<2>();

    q_des_j = model.nominal_posture;
    v_des_j = VecX::Zero(model.n_j);
    tau_ff = VecX::Zero(model.n_j);
    tau_cmd = VecX::Zero(model.n_j);

    wbc_out.qdd = VecX::Zero(model.nv());
    wbc_out.tau = VecX::Zero(model.n_j);

    if (cfg.async_mpc) async.start(&mpc);
  }

  ~Impl() { async.shutdown(); }

  CommandPoint commandAt(double t) const {
    CommandPoint active;  // defaults: stand in place
    for (const CommandPoint& c : cfg.commands) {
      if (c.t <= t + 1e-12) active = c;
      else break;
    }
    return active;
  }

  static const char* footFrameName(int i) { return i == 0 ? "l_foot" : "r_foot"; }
  static const char* hipFrameName(int i) { return i == 0 ? "hip_l" : "hip_r"; }

  void tick() {
    const double t = world.time();
    const Configuration snapshot = world.state();
    dyn.update(snapshot);
    const Kinematics& kin = dyn.kinematics();

    const CommandPoint cmd = commandAt(t);
    const bool want_walk =
        cmd.walk && (cmd.v_cmd.head<2>().norm() >= gait.params().standing_vcmd ||
                     std::abs(cmd.yaw_rate) >= 0.05);
    if (cmd.walk) yaw_des += cmd.yaw_rate * dt_control;

    const std::array<double, 2> fz = world.footNormalForce();
    gait.advance(dt_control, fz, want_walk);

    // Foothold targets and swing bookkeeping.
    const Vec3 com = dyn.centroidal().com;
    const Vec3 com_vel = kin.comVelocity();

    // Effective velocity command in world axes, slewed so the reference
    // accelerates no faster than the robot plausibly can — stepping the
    // anchor at full speed from standstill would open a large position error
    // and command a violent catch-up force. The anchored CoM reference
    // advances with the slewed value and is kept within reach of the
    // measured CoM so a blocked robot does not accumulate unbounded error.
    const Vec3 v_cmd_raw = want_walk ? Vec3(rotZ(yaw_des) * cmd.v_cmd) : Vec3::Zero();
    const double dv_max = 0.6 * dt_control;  // reference acceleration limit
    const Vec2 dv = v_cmd_raw.head<2>() - v_ref;
    v_ref = dv.norm() > dv_max ? Vec2(v_ref + dv_max * dv.normalized())
                               : Vec2(v_cmd_raw.head<2>());
    const Vec3 v_cmd_world(v_ref.x(), v_ref.y(), 0.0);
    xy_anchor += dt_control * v_cmd_world.head<2>();
    if (!want_walk && gait.foot(0).stance && gait.foot(1).stance) {
      // Standing: relax the reference toward the support centroid (1 s time
      // constant) so equilibrium settles where no net horizontal force or
      // contact moment is required, wherever the feet ended up.
      const Vec2 centroid = 0.5 * (foothold[0].head<2>() + foothold[1].head<2>());
      xy_anchor += dt_control * 1.0 * (centroid - xy_anchor);
    }
    const Vec2 anchor_err = xy_anchor - com.head<2>();
    const double anchor_reach = 0.15;
    if (anchor_err.norm() > anchor_reach)
      xy_anchor = com.head<2>() + anchor_reach * anchor_err.normalized();

    for (int i = 0; i < 2; ++i) {
      const size_t fi = static_cast<size_t>(i);
      const Vec3 foot_p = kin.framePose(model.feet[fi].frame).translation();
      const FootPhase fp = gait.foot(i);
      if (fp.stance) {
        foothold[fi] = foot_p;
        continue;
      }
      if (gait.liftedOff(i)) {
        swing[fi].start = foot_p;
        swing[fi].duration = gait.swingDuration();
        swing[fi].apex = gait.params().apex;
      }
      // Retarget continuously through early swing, then freeze: late changes
      // whip the leg and land it somewhere the force plan never assumed.
      if (fp.swing_phase < 0.7) {
        const Vec3 hip = kin.framePose(model.frameIndex(hipFrameName(i))).translation();
        Vec3 target = planFoothold(hip, com_vel, v_cmd_world, gait.stanceDuration(),
                                   mpc.config().foothold);
        target.z() = cfg.terrain.height(target.x(), target.y());
        foothold[fi] = target;
        swing[fi].target = target;
      }
      swing[fi].target.z() =
          foothold[fi].z() - gait.params().late_td_drop * gait.extension(i);
    }

    // MPC at its divided rate (synchronous by default; optional worker).
    const bool mpc_tick = (tick_count % mpc_div) == 0;
    bool mpc_fresh = false;
    if (mpc_tick) {
      MpcInput in;
      const Iso3 X_base = kin.bodyPose(0);
      in.state.pos = com;
      in.state.rpy = rpyFromRotation(X_base.linear());
      in.state.lin_vel = com_vel;
      in.state.ang_vel = X_base.linear() * snapshot.baseAngVelBody();
      in.command.v_cmd = v_cmd_world;
      in.walking = want_walk;
      in.command.yaw_rate = cmd.walk ? cmd.yaw_rate : 0.0;
      in.command.height = com_h_des;
      in.command.xy_ref = xy_anchor;
      in.command.yaw = yaw_des;
      in.command.terrain_z = cfg.terrain.height(com.x(), com.y());
      const double eps = 1e-4;
      in.command.terrain_slope.x() =
          (cfg.terrain.height(com.x() + eps, com.y()) - cfg.terrain.height(com.x() - eps, com.y())) /
          (2.0 * eps);
      in.command.terrain_slope.y() =
          (cfg.terrain.height(com.x(), com.y() + eps) - cfg.terrain.height(com.x(), com.y() - eps)) /
          (2.0 * eps);
      in.I_world = dyn.centroidal().I_G;
      in.mass = model.totalMass();
      in.gravity = model.gravity;
      in.schedule = gait.contactFlags(mpc.config().horizon, mpc.config().dt);
      for (int i = 0; i < 2; ++i) {
        in.foot_pos[static_cast<size_t>(i)] =
            kin.framePose(model.feet[static_cast<size_t>(i)].frame).translation();
        in.footholds[static_cast<size_t>(i)] = foothold[static_cast<size_t>(i)];
      }
      if (cfg.async_mpc) {
        async.submit(in);
      } else {
        plan = mpc.solve(in);
        mpc_ms.push_back(plan.solve_seconds * 1e3);
        mpc_fresh = true;
      }
      if (debug_trace && !plan.forces.empty()) {
        std::fprintf(stderr,
                     "[mpc] t=%.3f st=%d%d com=%+.3f,%+.3f,%.3f v=%+.3f,%+.3f anc=%+.3f,%+.3f "
                     "f0=(%+.1f,%+.1f,%.1f) f1=(%+.1f,%+.1f,%.1f) fh0=%+.3f,%+.3f fh1=%+.3f,%+.3f rpy=%+.3f,%+.3f\n",
                     t, in.schedule[0][0] ? 1 : 0, in.schedule[0][1] ? 1 : 0, com.x(), com.y(),
                     com.z(), com_vel.x(), com_vel.y(), xy_anchor.x(), xy_anchor.y(),
                     plan.forces[0][0].x(), plan.forces[0][0].y(), plan.forces[0][0].z(),
                     plan.forces[0][1].x(), plan.forces[0][1].y(), plan.forces[0][1].z(),
                     foothold[0].x(), foothold[0].y(), foothold[1].x(), foothold[1].y(),
                     in.state.rpy(0), in.state.rpy(1));
      }
    }
    if (cfg.async_mpc) {
      MpcPlan fresh_plan;
      if (async.take(&fresh_plan)) {
        plan = std::move(fresh_plan);
        mpc_ms.push_back(plan.solve_seconds * 1e3);
        mpc_fresh = true;
      }
    }
    last_mpc_fresh = mpc_fresh;

    // WBC at its divided rate.
    const bool wbc_tick = (tick_count % wbc_div) == 0;
    last_wbc_fresh = false;
    if (wbc_tick) {
      WbcTargets targets;
      targets.torso_R_des = rotZ(yaw_des);
      targets.torso_ang_vel_des = Vec3(0.0, 0.0, cmd.walk ? cmd.yaw_rate : 0.0);
      const double terrain_z = cfg.terrain.height(com.x(), com.y());
      targets.height_des = terrain_z + torso_h_nom + torso_h_offset;
      const Vec2 slope(
          (cfg.terrain.height(com.x() + 1e-4, com.y()) - cfg.terrain.height(com.x() - 1e-4, com.y())) / 2e-4,
          (cfg.terrain.height(com.x(), com.y() + 1e-4) - cfg.terrain.height(com.x(), com.y() - 1e-4)) / 2e-4);
      targets.height_vel_des = slope.dot(v_cmd_world.head<2>());
      targets.torso_xy_des =
          xy_anchor +
          (rotZ(yaw_des) * Vec3(torso_xy_offset.x(), torso_xy_offset.y(), 0.0)).head<2>();
      targets.torso_xy_vel_des = v_cmd_world.head<2>();
      targets.walking = want_walk;
      targets.posture_q = model.nominal_posture;
      for (int i = 0; i < 2; ++i) {
        const size_t fi = static_cast<size_t>(i);
        const FootPhase fp = gait.foot(i);
        targets.stance[fi] = fp.stance;
        if (!fp.stance) {
          Vec3 pos, vel, acc;
          swingReference(swing[fi], fp.swing_phase, &pos, &vel, &acc);
          targets.swing_pos[fi] = pos;
          targets.swing_vel[fi] = vel;
          targets.swing_acc[fi] = acc;
        }
      }

      WbcController::Input in;
      in.dyn = &dyn;
      in.tasks = buildTaskSet(dyn, targets, wbc.config());
      in.stance = targets.stance;
      in.dt = 1.0 / cfg.rates.wbc_hz;
      for (int i = 0; i < 2; ++i) {
        const size_t fi = static_cast<size_t>(i);
        if (!targets.stance[fi]) continue;
        Vec3 f_world = Vec3::Zero();
        if (!plan.forces.empty()) f_world = plan.forces[0][fi];
        const Mat3 R_f =
            kin.framePose(model.feet[fi].frame).linear();
        in.u_des[fi].head<3>().setZero();
        in.u_des[fi].tail<3>() = R_f.transpose() * f_world;
      }
      wbc_out = wbc.solve(in);
      wbc_ms.push_back(wbc_out.solve_seconds * 1e3);
      last_wbc_fresh = true;
      if (debug_trace) {
        const Vec3 swing_err =
            !targets.stance[0]
                ? Vec3(targets.swing_pos[0] -
                       kin.framePose(model.feet[0].frame).translation())
                : (!targets.stance[1]
                       ? Vec3(targets.swing_pos[1] -
                              kin.framePose(model.feet[1].frame).translation())
                       : Vec3::Zero());
        std::fprintf(stderr,
                     "[wbc] t=%.3f st=%d%d u0=(my%+.1f f %+.1f,%+.1f,%.1f) u1=(my%+.1f f "
                     "%+.1f,%+.1f,%.1f) swerr=%+.3f,%+.3f,%+.3f it=%d%s\n",
                     t, targets.stance[0] ? 1 : 0, targets.stance[1] ? 1 : 0, wbc_out.u[0](1),
                     wbc_out.u[0](3), wbc_out.u[0](4), wbc_out.u[0](5), wbc_out.u[1](1),
                     wbc_out.u[1](3), wbc_out.u[1](4), wbc_out.u[1](5), swing_err.x(),
                     swing_err.y(), swing_err.z(), wbc_out.iterations,
                     wbc_out.fallback ? " FALLBACK" : "");
      }

      if (wbc_out.fallback) {
        q_des_j = model.nominal_posture;
        v_des_j.setZero();
        tau_ff.setZero();
      } else {
        // Integrate the motor setpoints from the previous setpoints, not the
        // measured state: re-anchoring to measurements every solve adds a
        // lagged feedback path that destabilizes the servo loop. A small leak
        // toward the measured state keeps the reference from wandering off
        // after slips or impacts.
        const double h = 1.0 / cfg.rates.wbc_hz;
        const double leak = 0.05;
        const VecX qdd_j = wbc_out.qdd.tail(model.n_j);
        q_des_j = (1.0 - leak) * (q_des_j + h * v_des_j + 0.5 * h * h * qdd_j) +
                  leak * snapshot.jointPos();
        v_des_j = (1.0 - leak) * (v_des_j + h * qdd_j) + leak * snapshot.jointVel();
        tau_ff = wbc_out.tau;
      }
    }

    tau_cmd = jointPd(q_des_j, v_des_j, tau_ff, snapshot.jointPos(), snapshot.jointVel(),
                      cfg.pd_kp, cfg.pd_kd, model.torque_limit);

    // Fall detection: torso dropped below the configured fraction of its
    // nominal height above local terrain.
    const Vec3 torso_p = kin.framePose(model.frameIndex("torso")).translation();
    const double torso_h = torso_p.z() - cfg.terrain.height(torso_p.x(), torso_p.y());
    if (!fallen && torso_h < cfg.fall_fraction * torso_h_nom) {
      fallen = true;
      fall_time = t;
    }

    if (log.isOpen()) {
      std::vector<double> row;
      row.reserve(96);
      row.push_back(t);
      row.push_back(gait.mode() == GaitMode::Walking ? 1.0 : 0.0);
      row.push_back(gait.phase());
      for (int i = 0; i < model.nq(); ++i) row.push_back(snapshot.q(i));
      for (int i = 0; i < model.nv(); ++i) row.push_back(snapshot.v(i));
      for (int i = 0; i < model.nv(); ++i) row.push_back(wbc_out.qdd(i));
      for (int i = 0; i < model.n_j; ++i) row.push_back(wbc_out.tau(i));
      for (int i = 0; i < model.n_j; ++i) row.push_back(tau_cmd(i));
      for (int f = 0; f < 2; ++f)
        for (int i = 0; i < 6; ++i) row.push_back(wbc_out.u[static_cast<size_t>(f)](i));
      const FootPhase fl = gait.foot(0), fr = gait.foot(1);
      row.push_back(fl.stance ? 1.0 : 0.0);
      row.push_back(fr.stance ? 1.0 : 0.0);
      row.push_back(fl.swing_phase);
      row.push_back(fr.swing_phase);
      row.push_back(fz[0]);
      row.push_back(fz[1]);
      row.push_back(com.x());
      row.push_back(com.y());
      row.push_back(com.z());
      row.push_back(cmd.v_cmd.x());
      row.push_back(cmd.v_cmd.y());
      row.push_back(cmd.walk ? cmd.yaw_rate : 0.0);
      row.push_back(cmd.walk ? 1.0 : 0.0);
      row.push_back(static_cast<double>(static_cast<int>(wbc_out.status)));
      row.push_back(wbc_out.fallback ? 1.0 : 0.0);
      row.push_back(last_wbc_fresh ? 1.0 : 0.0);
      row.push_back(static_cast<double>(wbc_out.iterations));
      row.push_back(static_cast<double>(static_cast<int>(plan.status)));
      row.push_back(last_mpc_fresh ? 1.0 : 0.0);
      row.push_back(static_cast<double>(plan.iterations));
      row.push_back(fallen ? 1.0 : 0.0);
      log.row(row);
    }

    for (int s = 0; s < sim_substeps; ++s) world.step(tau_cmd);
    ++tick_count;
  }

  RunResult run() {
    RunResult result;
    std::filesystem::create_directories(cfg.out_dir);
    const std::string log_path = cfg.out_dir + "/" + cfg.name + "_log.csv";
    const std::string summary_path = cfg.out_dir + "/" + cfg.name + "_summary.json";
    log.open(log_path, logColumns(model));

    const long n_ticks = std::lround(cfg.duration * cfg.rates.control_hz);
    result.status = RunStatus::Ok;
    try {
      for (long k = 0; k < n_ticks; ++k) {
        tick();
        if (fallen) {
          result.status = RunStatus::Fell;
          break;
        }
      }
    } catch (const SimDivergedError&) {
      result.status = RunStatus::Diverged;
    }
    result.end_time = world.time();
    log.close();

    Metrics m = computeMetrics(LogTable::Read(log_path));
    auto fill = [](const std::vector<double>& xs, double* mean, double* p95) {
      if (xs.empty()) return;
      double acc = 0.0;
      for (double x : xs) acc += x;
      *mean = acc / static_cast<double>(xs.size());
      std::vector<double> sorted = xs;
      std::sort(sorted.begin(), sorted.end());
      const size_t idx = static_cast<size_t>(std::min<double>(
          static_cast<double>(sorted.size()) - 1.0,
          std::ceil(0.95 * static_cast<double>(sorted.size())) - 1.0));
      *p95 = sorted[idx];
    };
    fill(mpc_ms, &m.mpc_mean_ms, &m.mpc_p95_ms);
    fill(wbc_ms, &m.wbc_mean_ms, &m.wbc_p95_ms);
    result.metrics = m;
    result.log_path = log_path;
    result.summary_path = summary_path;

    nlohmann::json j;
    j["scenario"] = cfg.name;
    j["status"] = toString(result.status);
    j["end_time_s"] = result.end_time;
    j["seed"] = cfg.seed;
    j["metrics"] = nlohmann::json::parse(metricsToJson(m));
    j["gait_events"] = {{"early_touchdowns", gait.earlyTouchdowns()},
                        {"late_touchdowns", gait.lateTouchdowns()},
                        {"pace_shrinks", gait.paceShrinks()}};
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + summary_path);
    out << j.dump(2) << "\n";
    return result;
  }
};

Runtime::Runtime(const ScenarioConfig& config) : impl_(std::make_unique<Impl>(config)) {}
Runtime::~Runtime() = default;

RunResult Runtime::run() { return impl_->run(); }
void Runtime::tick() { impl_->tick(); }
double Runtime::time() const { return impl_->world.time(); }
const SimWorld& Runtime::world() const { return impl_->world; }
SimWorld& Runtime::world() { return impl_->world; }
const GaitScheduler& Runtime::gait() const { return impl_->gait; }
const MpcPlan& Runtime::plan() const { return impl_->plan; }
const WbcOutput& Runtime::wbcOutput() const { return impl_->wbc_out; }
const RobotModel& Runtime::robotModel() const { return impl_->model; }
CommandPoint Runtime::commandAt(double t) const { return impl_->commandAt(t); }
bool Runtime::fallen() const { return impl_->fallen; }

}  // namespace biped
