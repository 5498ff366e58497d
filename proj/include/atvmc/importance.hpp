#pragma once

#include <cmath>

#include "atvmc/lite.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

struct FreezeImportance {
  double delta_eps_sq = 0.0;
  // False when the reduced inverse cannot be formed from the regularized
  // factors (j has almost no weight in the retained subspace); callers fall
  // back to the approximate formula.
  bool determinate = true;
};

/// Exact importance of freezing active parameter j (local index into the
/// active block). Reuses the regularized inverse from the last solve: with
/// S^-1 written in block form around j, the reduced inverse is the rank-one
/// update
///   S~^-1 = K~ - W_j W_j^dagger / [S^-1]_jj,
/// the reduced velocities are alpha' = -i S~^-1 F~, and the importance is the
/// LITE increase eps_j^2 - eps^2 evaluated on the reduced system.
inline FreezeImportance importance_freeze_exact(const MatrixXc& s_active,
                                                const MatrixXc& s_inv,
                                                const VectorXc& force_active, double var_h,
                                                double eps_sq_current, int j,
                                                double pinv_rtol, double max_eigenvalue) {
  const int a = static_cast<int>(s_active.rows());
  FreezeImportance out;
  const double k_jj = s_inv(j, j).real();
  // For a full-rank inverse k_jj >= 1 / lambda_max; under truncation it decays
  // with j's weight in the retained subspace. Below the cutoff scale the
  // reduced dynamics is not recoverable from these factors.
  if (!(k_jj > 0.0) || k_jj * max_eigenvalue <= pinv_rtol) {
    out.determinate = false;
    return out;
  }

  MatrixXc reduced_inv(a - 1, a - 1);
  VectorXc w(a - 1);
  VectorXc force_reduced(a - 1);
  for (int r = 0, rr = 0; r < a; ++r) {
    if (r == j) continue;
    w[rr] = s_inv(r, j);
    force_reduced[rr] = force_active[r];
    ++rr;
  }
  for (int r = 0, rr = 0; r < a; ++r) {
    if (r == j) continue;
    for (int c = 0, cc = 0; c < a; ++c) {
      if (c == j) continue;
      reduced_inv(rr, cc) = s_inv(r, c) - w[rr] * std::conj(w[cc]) / k_jj;
      ++cc;
    }
    ++rr;
  }

  const VectorXc alpha_dot_reduced = -kImaginaryUnit * (reduced_inv * force_reduced);

  MatrixXc s_reduced(a - 1, a - 1);
  for (int r = 0, rr = 0; r < a; ++r) {
    if (r == j) continue;
    for (int c = 0, cc = 0; c < a; ++c) {
      if (c == j) continue;
      s_reduced(rr, cc) = s_active(r, c);
      ++cc;
    }
    ++rr;
  }
  const double eps_sq_reduced = lite_squared(var_h, s_reduced, alpha_dot_reduced);
  out.delta_eps_sq = eps_sq_reduced - eps_sq_current;
  return out;
}

/// Approximate freeze importance, assuming the other velocities are
/// unchanged: Delta eps_j^2 ~= S_jj |alpha_dot_j|^2. Overestimates the exact
/// value (the reduced dynamics re-minimizes the error).
inline double importance_freeze_approx(double s_jj, Complex alpha_dot_j) {
  return s_jj * std::norm(alpha_dot_j);
}

struct UnfreezeImportance {
  double delta_eps_sq = 0.0;
  // True when the frozen parameter is linearly dependent on the active set
  // at solver resolution; its reactivation cannot reduce the error.
  bool degenerate = false;
};

/// Importance of reactivating frozen parameter l:
///   Delta eps_l^2 = |-i Fbar_l - Vbar_l^dagger alpha_dot|^2
///                   / (Sbar_ll - Vbar_l^dagger S^-1 Vbar_l),
/// with the regularized S^-1 from the last solve.
inline UnfreezeImportance importance_unfreeze(const MatrixXc& s_inv, const VectorXc& alpha_dot,
                                              const VectorXc& v_bar, double s_bar_ll,
                                              Complex f_bar_l, double pinv_rtol) {
  UnfreezeImportance out;
  const double schur = s_bar_ll - (v_bar.dot(s_inv * v_bar)).real();
  if (schur <= pinv_rtol * s_bar_ll || !(s_bar_ll > 0.0)) {
    out.degenerate = true;
    out.delta_eps_sq = 0.0;
    return out;
  }
  const Complex numerator = -kImaginaryUnit * f_bar_l - v_bar.dot(alpha_dot);
  out.delta_eps_sq = std::norm(numerator) / schur;
  return out;
}

}  // namespace atvmc
