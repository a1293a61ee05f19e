#pragma once

#include <stdexcept>
#include <string>

namespace cctb {

/// Argument outside the domain of a kinematic function (negative speed, negative distance, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A distance cannot be covered from the given state (no acceleration capability).
class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Calibration scan found no collision-free obstacle distance below its cap.
class ObstacleUnavoidableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; carries the offending field and, when known, the source line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {}, int line = 0)
      : std::runtime_error(format(what, field, line)), reason_(what), field_(std::move(field)), line_(line) {}

  const std::string& reason() const noexcept { return reason_; }
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, const std::string& field, int line) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "'" + field + "': ";
    return out + what;
  }

  std::string reason_;
  std::string field_;
  int line_;
};

/// Operation invoked outside its contract (e.g. light phase for a context without lights).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ClassificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cctb
