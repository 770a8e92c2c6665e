#pragma once

#include <stdexcept>
#include <string>

namespace slabtax {

/// Bad or missing configuration (unknown key, out-of-range size, ...).
/// Mapped to process exit code 2 by the CLI.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Input data violates a model requirement (sigma <= 0, epsilon <= 0, ...).
/// Mapped to exit code 2 as well: the run never starts.
class ValidationError : public ConfigError {
  public:
    explicit ValidationError(const std::string& what) : ConfigError(what) {}
};

/// Field/grid shape mismatch between arguments.
class DimensionError : public std::runtime_error {
  public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at run time (zero pivot, NaN detected, ...).
/// Mapped to exit code 3 by the CLI.
class SolverError : public std::runtime_error {
  public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace slabtax
