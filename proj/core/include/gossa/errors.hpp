#pragma once

#include <stdexcept>
#include <string>

namespace gossa {

/// Raised when an experiment configuration fails validation before any run
/// starts. The CLI maps this to a distinct exit code.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an agent estimate falls within the singularity guard distance
/// of a sensor location, where the localization score is undefined.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(int agent, int sensor, const std::string& what)
      : std::runtime_error(what), agent_(agent), sensor_(sensor) {}

  int agent() const { return agent_; }
  int sensor() const { return sensor_; }

 private:
  int agent_;
  int sensor_;
};

}  // namespace gossa
