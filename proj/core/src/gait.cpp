#include "biped/gait.hpp"

#include <algorithm>
#include <cmath>

namespace biped {

GaitScheduler::GaitScheduler(const GaitParams& params) : params_(params) {
  t_cycle_ = std::clamp(params_.cycle_time, params_.t_min, params_.t_max);
}

double GaitScheduler::wrap(double x) const { return x - std::floor(x); }

FootPhase GaitScheduler::footAt(double phase, int i) const {
  if (mode_ == GaitMode::Standing) return {true, 0.0};
  if (hold_[static_cast<size_t>(i)]) return {false, 1.0};
  const double s = wrap(phase - params_.offset[static_cast<size_t>(i)]);
  if (s < params_.duty) return {true, 0.0};
  return {false, (s - params_.duty) / (1.0 - params_.duty)};
}

void GaitScheduler::advance(double dt, const std::array<double, 2>& stance_force,
                            bool want_walk) {
  lifted_ = {false, false};
  touched_ = {false, false};

  if (mode_ == GaitMode::Standing) {
    if (want_walk) {
      mode_ = GaitMode::Walking;
      phase_ = 0.0;
      prev_stance_ = {true, true};
    }
    return;
  }

  const double swing_dur = swingDuration();
  bool holding = false;

  // Resolve active swing-extension holds first: release on ground force or
  // when the allowance runs out, otherwise keep the phase frozen.
  for (int i = 0; i < 2; ++i) {
    if (!hold_[static_cast<size_t>(i)]) continue;
    extend_[static_cast<size_t>(i)] += dt / (params_.late_td_extend * swing_dur);
    if (stance_force[static_cast<size_t>(i)] >= params_.early_td_force ||
        extend_[static_cast<size_t>(i)] >= 1.0) {
      hold_[static_cast<size_t>(i)] = false;
      extend_[static_cast<size_t>(i)] = 0.0;
      phase_ = params_.offset[static_cast<size_t>(i)];  // touchdown instant
    } else {
      holding = true;
    }
  }

  if (!holding) {
    bool snapped = false;
    if (params_.adapt) {
      // Early touchdown: force on a late-swing foot ends its swing now.
      for (int i = 0; i < 2 && !snapped; ++i) {
        const FootPhase fp = footAt(phase_, i);
        if (!fp.stance && fp.swing_phase > params_.early_td_phase &&
            stance_force[static_cast<size_t>(i)] >= params_.early_td_force) {
          phase_ = params_.offset[static_cast<size_t>(i)];
          ++early_count_;
          snapped = true;
        }
      }
    }
    if (!snapped) {
      const double next = phase_ + dt / t_cycle_;
      bool held_now = false;
      if (params_.adapt) {
        // Missed touchdown: a swing foot about to cross its stance onset with
        // no ground force underneath holds the phase and extends the swing.
        for (int i = 0; i < 2; ++i) {
          const FootPhase fp = footAt(phase_, i);
          if (fp.stance) continue;
          const double off = params_.offset[static_cast<size_t>(i)];
          // distance (in phase) from current position to the touchdown point
          const double to_td = wrap(off - phase_);
          if (to_td <= next - phase_ && to_td < 0.5 &&
              stance_force[static_cast<size_t>(i)] < params_.early_td_force) {
            hold_[static_cast<size_t>(i)] = true;
            extend_[static_cast<size_t>(i)] = 0.0;
            phase_ = off;  // footAt reports swing while the hold is on
            ++late_count_;
            held_now = true;
            break;
          }
        }
      }
      if (!held_now) phase_ = wrap(next);
    }
  }

  // Stance transitions and per-window force statistics.
  for (int i = 0; i < 2; ++i) {
    const bool st = footAt(phase_, i).stance;
    auto& win = force_window_[static_cast<size_t>(i)];
    if (st) win.push_back(stance_force[static_cast<size_t>(i)]);
    if (st && !prev_stance_[static_cast<size_t>(i)]) touched_[static_cast<size_t>(i)] = true;
    if (!st && prev_stance_[static_cast<size_t>(i)]) {
      lifted_[static_cast<size_t>(i)] = true;
      if (win.size() >= 4) {
        double mean = 0.0;
        for (double f : win) mean += f;
        mean /= static_cast<double>(win.size());
        double var = 0.0;
        for (double f : win) var += (f - mean) * (f - mean);
        var /= static_cast<double>(win.size());
        if (params_.adapt && var_count_ >= 3 && var > params_.adapt_var_ratio * var_mean_) {
          t_cycle_ = std::max(params_.t_min, t_cycle_ * params_.adapt_shrink);
          ++shrink_count_;
        }
        var_mean_ = var_count_ == 0 ? var : 0.8 * var_mean_ + 0.2 * var;
        ++var_count_;
      }
      win.clear();
    }
    prev_stance_[static_cast<size_t>(i)] = st;
  }

  if (!want_walk && prev_stance_[0] && prev_stance_[1]) {
    mode_ = GaitMode::Standing;
    phase_ = 0.0;
    hold_ = {false, false};
    extend_ = {0.0, 0.0};
  }
}

std::vector<std::array<bool, 2>> GaitScheduler::contactFlags(int N, double dt_mpc) const {
  std::vector<std::array<bool, 2>> flags(static_cast<size_t>(N), {true, true});
  if (mode_ == GaitMode::Standing) return flags;
  for (int k = 0; k < N; ++k) {
    const double ph = wrap(phase_ + static_cast<double>(k) * dt_mpc / t_cycle_);
    for (int i = 0; i < 2; ++i) {
      // nominal windows; an active hold only affects the instantaneous flags
      const double s = wrap(ph - params_.offset[static_cast<size_t>(i)]);
      flags[static_cast<size_t>(k)][static_cast<size_t>(i)] = s < params_.duty;
    }
  }
  if (N > 0) {
    for (int i = 0; i < 2; ++i) flags[0][static_cast<size_t>(i)] = footAt(phase_, i).stance;
  }
  return flags;
}

void swingReference(const SwingSpec& spec, double s, Vec3* pos, Vec3* vel, Vec3* acc) {
  const double T = spec.duration;
  Vec3 mid = 0.5 * (spec.start + spec.target);
  mid.z() = std::max(spec.start.z(), spec.target.z()) + spec.apex;

  for (int axis = 0; axis < 3; ++axis) {
    const double a = spec.start(axis);
    const double A = spec.target(axis) - a;
    const double C = mid(axis) - a;
    const double k2 = 16.0 * C - 5.0 * A;
    const double k3 = 14.0 * A - 32.0 * C;
    const double k4 = 16.0 * C - 8.0 * A;
    if (pos) (*pos)(axis) = a + s * s * (k2 + s * (k3 + s * k4));
    if (vel) (*vel)(axis) = (s * (2.0 * k2 + s * (3.0 * k3 + s * 4.0 * k4))) / T;
    if (acc) (*acc)(axis) = (2.0 * k2 + s * (6.0 * k3 + s * 12.0 * k4)) / (T * T);
  }
}

}  // namespace biped
