#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cms {

// All library failures derive from cms::Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Thrown by project_point when the depth is not above the near plane.
class BehindCamera : public Error {
 public:
  explicit BehindCamera(double depth)
      : Error("point is behind the camera (depth " + std::to_string(depth) + ")"), depth_(depth) {}
  double depth() const noexcept { return depth_; }

 private:
  double depth_;
};

class PlyError : public Error {
 public:
  enum class Kind { Malformed, Schema, Truncated };

  PlyError(Kind kind, std::size_t line, const std::string& what)
      : Error(describe(kind, line, what)), kind_(kind), line_(line) {}

  Kind kind() const noexcept { return kind_; }
  /// 1-based header line, or 0 when the failure is in the body.
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string describe(Kind kind, std::size_t line, const std::string& what) {
    std::string prefix = kind == Kind::Schema      ? "ply schema error"
                         : kind == Kind::Truncated ? "ply truncated"
                                                   : "ply parse error";
    if (line > 0) prefix += " at line " + std::to_string(line);
    return prefix + ": " + what;
  }

  Kind kind_;
  std::size_t line_;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class ClassifierIoError : public Error {
 public:
  using Error::Error;
};

/// A motion has a nonzero coordinate on an axis that carries no smoothing noise.
class NotCertifiable : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Configuration or manifest schema violation. `field` is a dotted path such as
/// "classes[2].ply".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace cms
