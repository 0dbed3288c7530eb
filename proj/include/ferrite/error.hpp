#pragma once

#include <stdexcept>
#include <string>

namespace ferrite {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

struct SolverError : Error {
  SolverError(const std::string& msg, double residual)
      : Error("solver: " + msg), last_residual(residual) {}
  double last_residual;
};

}  // namespace ferrite
