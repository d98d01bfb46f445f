#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dekf {

// Base for all errors thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateQuaternionError : Error {
  using Error::Error;
};

struct SimulationDivergedError : Error {
  SimulationDivergedError(const std::string& msg, long step)
      : Error(msg + " (step " + std::to_string(step) + ")"), step_index(step) {}
  long step_index;
};

struct IdentificationTimeoutError : Error {
  using Error::Error;
};

struct NotSettledError : Error {
  NotSettledError(const std::string& msg, std::vector<double> periods_seen)
      : Error(msg), periods(std::move(periods_seen)) {}
  std::vector<double> periods;
};

struct InputSizeExceededError : Error {
  using Error::Error;
};

struct TuningFailedError : Error {
  using Error::Error;
};

struct GridTooCoarseError : Error {
  GridTooCoarseError(const std::string& msg, double worst_j)
      : Error(msg), worst_sensitivity(worst_j) {}
  double worst_sensitivity;
};

struct FilterDivergedError : Error {
  using Error::Error;
};

struct SingularUpdateError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace dekf
