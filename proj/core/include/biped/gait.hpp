#pragma once

#include <array>
#include <vector>

#include "biped/spatial.hpp"

namespace biped {

enum class GaitMode { Standing, Walking };

struct GaitParams {
  bool adapt = true;                   // force-feedback touchdown/pace handling
  double cycle_time = 0.6;             // s
  double duty = 0.6;                   // stance fraction per foot
  std::array<double, 2> offset{0.0, 0.5};  // per-foot phase offset
  double apex = 0.04;                  // swing clearance above endpoints, m
  double t_min = 0.5;                  // adapted cycle-time bounds, s
  double t_max = 1.2;
  double early_td_force = 20.0;        // N, swing-foot force ending swing early
  double early_td_phase = 0.75;        // earliest swing phase for early touchdown
  double late_td_extend = 0.2;         // max swing extension, fraction of swing time
  double late_td_drop = 0.02;          // target lowering while extending, m
  double adapt_shrink = 0.95;          // cycle-time factor on force-variance spike
  double adapt_var_ratio = 4.0;        // variance spike = var > ratio * running mean
  double standing_vcmd = 0.05;         // |v_cmd| below which standing may engage, m/s
};

/// Per-foot gait status for one instant.
struct FootPhase {
  bool stance = true;
  double swing_phase = 0.0;  // in [0,1] while swinging, 0 otherwise
};

/// Cyclic two-foot gait machine: phase/duty/offset windows, standing<->walking
/// transitions at phase boundaries, touchdown-driven phase corrections, and
/// cycle-time adaptation from stance-force variance.
class GaitScheduler {
 public:
  explicit GaitScheduler(const GaitParams& params);

  GaitParams& params() { return params_; }
  const GaitParams& params() const { return params_; }

  /// Advances the machine by dt. `stance_force` carries the measured normal
  /// force under each foot; `want_walk` is the commanded mode (transitions
  /// happen only at phase boundaries, and standing additionally requires both
  /// feet in stance).
  void advance(double dt, const std::array<double, 2>& stance_force, bool want_walk);

  GaitMode mode() const { return mode_; }
  double phase() const { return phase_; }
  double cycleTime() const { return t_cycle_; }

  FootPhase foot(int i) const { return footAt(phase_, i); }

  /// Stance table over an MPC horizon: N rows, flags per foot, propagated
  /// from the current phase at the current cycle time. Standing: all stance.
  std::vector<std::array<bool, 2>> contactFlags(int N, double dt_mpc) const;

  /// Seconds a foot spends in stance per cycle at the current cycle time.
  double stanceDuration() const { return params_.duty * t_cycle_; }
  double swingDuration() const { return (1.0 - params_.duty) * t_cycle_; }

  /// True on the tick a foot transitioned (for liftoff/touchdown bookkeeping).
  bool liftedOff(int i) const { return lifted_[i]; }
  bool touchedDown(int i) const { return touched_[i]; }

  /// Swing-extension progress (0 when not extending): fraction of the allowed
  /// extension consumed while waiting for a missed touchdown.
  double extension(int i) const { return extend_[i]; }

  /// Cumulative adaptation event counts (logged for diagnosis).
  int earlyTouchdowns() const { return early_count_; }
  int lateTouchdowns() const { return late_count_; }
  int paceShrinks() const { return shrink_count_; }

 private:
  FootPhase footAt(double phase, int i) const;
  double wrap(double x) const;

  GaitParams params_;
  GaitMode mode_ = GaitMode::Standing;
  double phase_ = 0.0;
  double t_cycle_;
  std::array<bool, 2> prev_stance_{true, true};
  std::array<bool, 2> lifted_{false, false};
  std::array<bool, 2> touched_{false, false};
  std::array<bool, 2> hold_{false, false};
  std::array<double, 2> extend_{0.0, 0.0};

  // stance-force variance tracking (per completed stance window)
  std::array<std::vector<double>, 2> force_window_;
  double var_mean_ = 0.0;
  int var_count_ = 0;
  int early_count_ = 0;
  int late_count_ = 0;
  int shrink_count_ = 0;
};

/// Quartic swing interpolant from `start` to `target` peaking `apex` above
/// the higher endpoint at s = 1/2; endpoint velocities are zero. Derivatives
/// are with respect to time given the swing duration.
struct SwingSpec {
  Vec3 start = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  double apex = 0.08;
  double duration = 0.3;
};

void swingReference(const SwingSpec& spec, double s, Vec3* pos, Vec3* vel, Vec3* acc);

}  // namespace biped
