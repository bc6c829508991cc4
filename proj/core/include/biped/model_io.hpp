#pragma once

#include <string>

#include "biped/model.hpp"

namespace biped {

/// Parses a JSON model file. Throws ModelError on malformed input or on any
/// violated model invariant (the model is validated before being returned).
RobotModel loadModel(const std::string& path);

RobotModel parseModel(const std::string& json_text, const std::string& origin = "<string>");

}  // namespace biped
