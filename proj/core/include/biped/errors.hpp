#pragma once

#include <stdexcept>
#include <string>

namespace biped {

/// Malformed or invariant-violating model description.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Simulation state went non-finite. Message carries a diagnostic dump.
class SimDivergedError : public std::runtime_error {
 public:
  explicit SimDivergedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace biped
