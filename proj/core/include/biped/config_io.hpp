#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biped/model.hpp"
#include "biped/runtime.hpp"

namespace biped {

struct ScenarioOverrides {
  std::optional<unsigned> seed;
  std::optional<double> duration;
  std::optional<std::string> out_dir;
};

/// Parses a scenario document (JSON). Overrides are applied before any
/// seed-dependent content (procedural terrain) is generated. Throws
/// ConfigError with a field path on any invalid entry.
ScenarioConfig loadScenario(const std::string& path, const ScenarioOverrides& overrides = {});

/// Posture sweep: a JSON document with rows of joint angles (n_j each).
std::vector<VecX> loadPostureSweep(const std::string& path, const RobotModel& model);

}  // namespace biped
