#pragma once

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "atvmc/errors.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

/// Regularization policy for the equations of motion. The pseudoinverse drops
/// eigendirections of S below pinv_rtol relative to the largest eigenvalue;
/// SNR mode additionally drops directions whose rotated force component is
/// statistically indistinguishable from sampling noise. A positive
/// diagonal_shift is added to S before decomposition (used by ground-state
/// optimization).
struct SolverPolicy {
  enum class Kind { Pseudoinverse, Snr };

  Kind kind = Kind::Pseudoinverse;
  double pinv_rtol = 1e-7;
  double snr_threshold = 4.0;
  double diagonal_shift = 0.0;

  void validate() const {
    if (!(pinv_rtol > 0.0 && pinv_rtol < 1.0)) {
      throw ConfigError("solver: pinv_rtol must be in (0, 1)");
    }
    if (!(snr_threshold > 0.0)) throw ConfigError("solver: snr_threshold must be positive");
    if (diagonal_shift < 0.0) throw ConfigError("solver: diagonal_shift must be >= 0");
  }
};

/// Factors and diagnostics from one regularized solve. s_inv is the
/// regularized inverse built from the retained eigendirections; the adaptive
/// controller reuses it for the block-update importance formulas.
struct SolveResult {
  VectorXc alpha_dot;  // -i S^+ F on the active set
  MatrixXc s_inv;      // U_kept diag(1/lambda) U_kept^dagger
  int rank = 0;
  int dimension = 0;
  int snr_discarded = 0;
  double max_eigenvalue = 0.0;
  double discarded_mass = 0.0;  // discarded eigenvalue weight / total

  bool full_rank() const { return rank == dimension; }
};

/// Solves i S alpha_dot = F for the active parameters (hbar = 1):
/// alpha_dot = -i S^+ F. S is symmetrized as (S + S^dagger)/2 before the
/// eigendecomposition.
///
/// For SNR filtering, chain_forces holds per-chain force estimates on the
/// active set (one column per chain); the per-direction noise is estimated
/// from the spread of the chain means. Directions with zero noise estimate
/// (exact summation) always pass the filter.
inline SolveResult solve_equations_of_motion(const MatrixXc& s_matrix, const VectorXc& force,
                                             const SolverPolicy& policy,
                                             const MatrixXc* chain_forces = nullptr) {
  policy.validate();
  const int dim = static_cast<int>(s_matrix.rows());
  if (dim == 0 || force.size() != dim || s_matrix.cols() != dim) {
    throw RankZeroError("solver: empty or inconsistent system");
  }

  MatrixXc sym = 0.5 * (s_matrix + s_matrix.adjoint());
  if (policy.diagonal_shift > 0.0) {
    sym += policy.diagonal_shift * MatrixXc::Identity(dim, dim);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(sym);
  if (es.info() != Eigen::Success) {
    throw RankZeroError("solver: eigendecomposition failed");
  }
  const VectorXr eigenvalues = es.eigenvalues();
  const MatrixXc& basis = es.eigenvectors();
  const double max_eig = eigenvalues.maxCoeff();
  if (!(max_eig > 0.0)) {
    throw RankZeroError("solver: quantum geometric tensor has no positive eigenvalue");
  }
  const double cutoff = policy.pinv_rtol * max_eig;

  const VectorXc rotated_force = basis.adjoint() * force;

  MatrixXc rotated_chains;
  const bool use_snr = policy.kind == SolverPolicy::Kind::Snr && chain_forces != nullptr &&
                       chain_forces->cols() >= 2;
  if (use_snr) rotated_chains = basis.adjoint() * (*chain_forces);

  SolveResult result;
  result.dimension = dim;
  result.max_eigenvalue = max_eig;
  result.alpha_dot = VectorXc::Zero(dim);
  result.s_inv = MatrixXc::Zero(dim, dim);

  VectorXc solution = VectorXc::Zero(dim);
  double kept_mass = 0.0;
  double total_mass = 0.0;
  for (int q = 0; q < dim; ++q) {
    total_mass += std::max(eigenvalues[q], 0.0);
    if (eigenvalues[q] < cutoff) continue;
    if (use_snr) {
      const int chains = static_cast<int>(rotated_chains.cols());
      Complex chain_mean = rotated_chains.row(q).sum() / static_cast<double>(chains);
      double spread = 0.0;
      for (int c = 0; c < chains; ++c) {
        spread += std::norm(rotated_chains(q, c) - chain_mean);
      }
      const double noise = std::sqrt(spread / (chains - 1) / chains);
      if (noise > 0.0 && std::abs(rotated_force[q]) < policy.snr_threshold * noise) {
        ++result.snr_discarded;
        continue;
      }
    }
    ++result.rank;
    kept_mass += std::max(eigenvalues[q], 0.0);
    solution.noalias() += basis.col(q) * (rotated_force[q] / eigenvalues[q]);
    result.s_inv.noalias() +=
        basis.col(q) * basis.col(q).adjoint() / eigenvalues[q];
  }
  if (result.rank == 0) {
    throw RankZeroError("solver: every eigendirection was discarded (rank zero)");
  }
  result.discarded_mass = total_mass > 0.0 ? 1.0 - kept_mass / total_mass : 0.0;
  result.alpha_dot = -kImaginaryUnit * solution;
  return result;
}

}  // namespace atvmc
