#pragma once

#include <stdexcept>
#include <string>

namespace atvmc {

/// Configuration file or option rejected before any computation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between a spin configuration / parameter vector and the
/// object consuming it.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite value encountered where a finite one is required.
class NumericDomainError : public std::runtime_error {
 public:
  explicit NumericDomainError(const std::string& what, int site = -1)
      : std::runtime_error(what), site_(site) {}
  /// Offending site index, or -1 when not site-specific.
  int site() const noexcept { return site_; }

 private:
  int site_;
};

/// Requested exact enumeration or dense-vector work above the configured cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every eigendirection of the quantum geometric tensor was discarded.
class RankZeroError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metropolis chain accepted no move over a full burn-in or sampling phase.
class SamplerStallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive step controller drove dt below dt_min.
class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground-state optimization made no progress over the stall window.
class OptimizationStallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact-reference computation failed to converge to its tolerance.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace atvmc
