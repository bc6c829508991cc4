#pragma once

#include <map>
#include <string>
#include <vector>

#include "biped/model.hpp"
#include "biped/wbc.hpp"

namespace biped {

/// Delimited text log: one header row naming columns, then one row per
/// control tick. Values are written with "%.17g" so doubles round-trip
/// exactly; identical runs produce identical bytes.
class LogWriter {
 public:
  LogWriter() = default;

  void open(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void close();
  bool isOpen() const { return !path_.empty(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string buffer_;
  size_t width_ = 0;
};

/// In-memory parsed log.
struct LogTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  int columnOrThrow(const std::string& name) const;
  double at(size_t row, int col) const { return rows[row][static_cast<size_t>(col)]; }

  static LogTable Read(const std::string& path);
};

/// Summary statistics of a run log.
struct Metrics {
  double duration = 0.0;
  double distance = 0.0;              // CoM horizontal path start->end
  double mean_vel_error = 0.0;        // mean |v_x - v_cmd_x| while walking commanded
  double mean_speed = 0.0;
  VecX max_torque;                    // per joint
  bool fell = false;
  double fall_time = -1.0;
  double mpc_mean_ms = 0.0, mpc_p95_ms = 0.0;
  double wbc_mean_ms = 0.0, wbc_p95_ms = 0.0;
  double elevation_gain = 0.0;        // CoM z end - start
};

Metrics computeMetrics(const LogTable& log);

/// Renders metrics as a JSON document. Solve-time fields are wall-clock and
/// excluded from determinism comparisons (they live here, never in log rows).
std::string metricsToJson(const Metrics& metrics);

/// Post-processor for the controller contract: at every tick with a fresh
/// optimal WBC solution, re-derive the model terms at the logged state and
/// verify the dynamics equality, the wrench cones, and the torque limits.
struct ContractReport {
  int ticks_checked = 0;
  double max_dynamics_residual = 0.0;
  double max_cone_violation = 0.0;
  double max_torque_excess = 0.0;  // beyond limits; 0 when all clamped
  bool ok(double tol_dyn = 1e-8, double tol_cone = 1e-8) const {
    return ticks_checked > 0 && max_dynamics_residual <= tol_dyn &&
           max_cone_violation <= tol_cone && max_torque_excess <= 0.0;
  }
};

ContractReport checkWbcContract(const LogTable& log, const RobotModel& model,
                                const WbcConfig& wbc_config);

}  // namespace biped
