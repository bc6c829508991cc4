#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "biped/gait.hpp"
#include "biped/log.hpp"
#include "biped/model.hpp"
#include "biped/mpc.hpp"
#include "biped/sim.hpp"
#include "biped/wbc.hpp"

namespace biped {

struct RatesConfig {
  double sim_dt = 1e-4;     // s
  double control_hz = 1000;  // PD + logging
  double wbc_hz = 500;
  double mpc_hz = 100;
};

/// Time-stamped command: held from t until the next point.
struct CommandPoint {
  double t = 0.0;
  Vec3 v_cmd = Vec3::Zero();  // world x/y velocity command (z ignored)
  double yaw_rate = 0.0;
  bool walk = false;
};

struct ScenarioConfig {
  std::string name;
  std::string model_path;
  Terrain terrain;
  ContactParams contact;
  RatesConfig rates;
  double duration = 5.0;
  unsigned seed = 0;
  std::string out_dir = ".";
  bool async_mpc = false;

  MpcConfig mpc;
  WbcConfig wbc;
  GaitParams gait;

  VecX pd_kp;  // per joint; sized at load
  VecX pd_kd;

  std::vector<CommandPoint> commands;
  std::vector<Disturbance> disturbances;

  double com_height = 0.0;  // commanded CoM height; 0 = model nominal
  double start_x = 0.0;
  double start_y = 0.0;
  double start_yaw = 0.0;
  double fall_fraction = 0.6;  // of nominal torso height above terrain
};

enum class RunStatus { Ok = 0, Fell = 1, Diverged = 2, ConfigError = 3 };

const char* toString(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::Ok;
  double end_time = 0.0;
  Metrics metrics;
  std::string log_path;
  std::string summary_path;
};

/// Multi-rate orchestrator: sim substeps at sim_dt; PD + logging at the
/// control rate; WBC and MPC at their divided rates on the tick snapshot.
/// Single-threaded and deterministic by default; optional asynchronous MPC
/// worker (snapshot in, latest plan wins) for throughput experiments.
class Runtime {
 public:
  explicit Runtime(const ScenarioConfig& config);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Runs the full scenario, writing log and summary into config.out_dir.
  RunResult run();

  /// One control tick (controllers, optional log row, sim substeps).
  void tick();

  double time() const;
  const SimWorld& world() const;
  SimWorld& world();
  const GaitScheduler& gait() const;
  const MpcPlan& plan() const;
  const WbcOutput& wbcOutput() const;
  const RobotModel& robotModel() const;

  /// Active command at time t.
  CommandPoint commandAt(double t) const;

  bool fallen() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<std::string> logColumns(const RobotModel& model);

}  // namespace biped
