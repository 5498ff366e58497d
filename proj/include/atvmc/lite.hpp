#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "atvmc/types.hpp"

namespace atvmc {

/// Local-in-time error diagnostics for one step (hbar = 1).
struct LiteReport {
  double epsilon_sq = 0.0;      // clamped at zero
  double epsilon_sq_raw = 0.0;  // pre-clamp value
  double fs_epsilon_sq = 0.0;   // Fubini-Study rate for the same alpha_dot
  double var_h = 0.0;
  double threshold = std::numeric_limits<double>::quiet_NaN();  // resolved lambda^2
  double cumulative_bound = 0.0;  // integral of epsilon dt' up to now
};

/// Squared LITE: Var(H) - alpha_dot^dagger S alpha_dot, clamped at zero.
/// The pre-clamp value is reported through `raw` when requested; magnitudes
/// below roughly -1e-8 indicate estimator inconsistency rather than noise.
inline double lite_squared(double var_h, const MatrixXc& s_matrix, const VectorXc& alpha_dot,
                           double* raw = nullptr) {
  const double quad = (alpha_dot.dot(s_matrix * alpha_dot)).real();
  const double value = var_h - quad;
  if (raw != nullptr) *raw = value;
  return std::max(0.0, value);
}

/// Squared Fubini-Study rate for an arbitrary trajectory alpha_dot (it need
/// not solve the equations of motion):
///   Var(H) + alpha_dot^dag S alpha_dot + i alpha_dot^dag F - i F^dag alpha_dot.
inline double fs_error_squared(double var_h, const MatrixXc& s_matrix, const VectorXc& force,
                               const VectorXc& alpha_dot) {
  const double quad = (alpha_dot.dot(s_matrix * alpha_dot)).real();
  const Complex mixed = alpha_dot.dot(force);  // alpha_dot^dagger F
  return var_h + quad - 2.0 * mixed.imag();
}

/// Left-endpoint accumulation of the a-posteriori global error bound:
/// bound += sqrt(epsilon^2) dt.
inline double accumulate_global_bound(double cumulative, double epsilon_sq, double dt) {
  return cumulative + std::sqrt(std::max(0.0, epsilon_sq)) * dt;
}

}  // namespace atvmc
