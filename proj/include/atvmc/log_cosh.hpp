#pragma once

#include <cmath>
#include <complex>

#include "atvmc/types.hpp"

namespace atvmc {

namespace detail {
inline constexpr double kLn2 = 0.69314718055994530941723212145818;
// exp(-2x) is below double round-off relative to 1 beyond this point.
inline constexpr double kCoshSaturation = 20.0;
}  // namespace detail

/// Overflow-safe ln cosh(z). Evaluated as zeta - ln 2 + ln(1 + e^{-2 zeta})
/// with zeta = +-z chosen so Re(zeta) >= 0 (cosh is even); |e^{-2 zeta}| <= 1
/// keeps the correction term tame for arbitrarily large arguments.
///
/// The branch of the imaginary part is fixed by this evaluation; differences
/// of values computed this way telescope exactly, which is what wave-function
/// ratios rely on.
inline Complex log_cosh(Complex z) {
  if (z.real() < 0.0) z = -z;
  if (z.real() > detail::kCoshSaturation) return z - detail::kLn2;
  return z - detail::kLn2 + std::log(1.0 + std::exp(-2.0 * z));
}

/// tanh(z) that saturates instead of overflowing for |Re z| large.
inline Complex tanh_safe(const Complex& z) {
  if (z.real() > detail::kCoshSaturation) return Complex(1.0, 0.0);
  if (z.real() < -detail::kCoshSaturation) return Complex(-1.0, 0.0);
  return std::tanh(z);
}

}  // namespace atvmc
