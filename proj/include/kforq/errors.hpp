#pragma once

#include <stdexcept>
#include <string>

namespace kforq {

/// Two operands live on incompatible grids.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A time integration or linear solve produced a non-finite or inaccurate value.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int time_index = -1)
      : std::runtime_error(what), time_index_(time_index) {}

  /// Step index at which the failure was detected, -1 if not time dependent.
  int time_index() const noexcept { return time_index_; }

 private:
  int time_index_;
};

/// Invalid experiment configuration. `field()` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace kforq
