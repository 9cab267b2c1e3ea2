#pragma once

#include <stdexcept>
#include <string>

namespace driftcheck {

// Base class for every error this library raises on purpose. Catching this
// separates expected failures (bad config, malformed file, unsupported model)
// from genuine bugs that surface as other exception types.
class DriftError : public std::runtime_error {
 public:
  explicit DriftError(const std::string& what) : std::runtime_error(what) {}
};

class ShapeError : public DriftError {
 public:
  using DriftError::DriftError;
};

class EmptyReductionError : public DriftError {
 public:
  using DriftError::DriftError;
};

class InvalidConfigError : public DriftError {
 public:
  using DriftError::DriftError;
};

// Raised when a file's bytes do not match the container format being parsed
// (tensor files, model JSON).
class FormatError : public DriftError {
 public:
  using DriftError::DriftError;
};

class UnsupportedOpError : public DriftError {
 public:
  explicit UnsupportedOpError(const std::string& op)
      : DriftError("unsupported op: " + op), op_(op) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

class GraphError : public DriftError {
 public:
  using DriftError::DriftError;
};

// YAML that does not parse at all, as opposed to YAML that parses but carries
// invalid values (InvalidConfigError).
class ConfigParseError : public DriftError {
 public:
  using DriftError::DriftError;
};

class LogWriteError : public DriftError {
 public:
  using DriftError::DriftError;
};

class LogReadError : public DriftError {
 public:
  using DriftError::DriftError;
};

class EmptyReportError : public DriftError {
 public:
  using DriftError::DriftError;
};

}  // namespace driftcheck
