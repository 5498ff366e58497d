#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "atvmc/ansatz.hpp"
#include "atvmc/errors.hpp"
#include "atvmc/rng.hpp"
#include "atvmc/spin_chain.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

using SparseOperator = Eigen::SparseMatrix<Complex>;

/// Normalized dense state vector over the 2^N computational basis.
/// Convention: spin i is bit i, +1 corresponds to bit 0.
struct DenseState {
  VectorXc amplitudes;
  int sites = 0;

  double norm() const { return amplitudes.norm(); }
  void normalize() { amplitudes /= amplitudes.norm(); }
};

/// Sparse TFI Hamiltonian (N+1 terms per row: the diagonal plus one
/// single-flip entry per site). Hermitian exactly by construction.
inline SparseOperator build_hamiltonian(const TfiHamiltonian& hamiltonian, int cap = 14) {
  const int n = hamiltonian.sites;
  if (n > cap) {
    throw CapacityError("dense oracle needs N <= " + std::to_string(cap) + ", got N = " +
                        std::to_string(n));
  }
  const long dim = 1L << n;
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(dim * (n + 1));
  for (long x = 0; x < dim; ++x) {
    const auto config = SpinConfiguration::from_bits(static_cast<std::uint64_t>(x), n);
    triplets.emplace_back(x, x, Complex(diagonal_energy(config, hamiltonian), 0.0));
    for (int i = 0; i < n; ++i) {
      triplets.emplace_back(x ^ (1L << i), x, Complex(-hamiltonian.field_h, 0.0));
    }
  }
  SparseOperator op(dim, dim);
  op.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

namespace detail {

/// Lanczos tridiagonalization with full reorthogonalization. Returns the
/// basis (columns) and the tridiagonal coefficients.
struct LanczosFactors {
  MatrixXc basis;      // dim x m
  VectorXr diagonal;   // m
  VectorXr offdiag;    // m-1
  int steps = 0;
};

inline LanczosFactors lanczos(const SparseOperator& op, const VectorXc& start, int max_steps) {
  const long dim = op.rows();
  const int m = static_cast<int>(std::min<long>(max_steps, dim));
  LanczosFactors factors;
  factors.basis.resize(dim, m);
  factors.diagonal.resize(m);
  factors.offdiag.resize(std::max(0, m - 1));

  VectorXc v = start / start.norm();
  VectorXc w(dim);
  for (int j = 0; j < m; ++j) {
    factors.basis.col(j) = v;
    w.noalias() = op * v;
    const double alpha = v.dot(w).real();
    factors.diagonal[j] = alpha;
    w.noalias() -= alpha * v;
    if (j > 0) w.noalias() -= factors.offdiag[j - 1] * factors.basis.col(j - 1);
    // Full reorthogonalization keeps the basis numerically orthonormal.
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k <= j; ++k) {
        w.noalias() -= factors.basis.col(k) * factors.basis.col(k).dot(w);
      }
    }
    const double beta = w.norm();
    factors.steps = j + 1;
    if (j + 1 < m) {
      if (beta < 1e-14) {
        factors.basis.conservativeResize(Eigen::NoChange, factors.steps);
        factors.diagonal.conservativeResize(factors.steps);
        factors.offdiag.conservativeResize(factors.steps - 1);
        break;
      }
      factors.offdiag[j] = beta;
      v = w / beta;
    }
  }
  return factors;
}

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiagonal_eigen(
    const LanczosFactors& factors) {
  const int m = factors.steps;
  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) tri(j, j) = factors.diagonal[j];
  for (int j = 0; j + 1 < m; ++j) {
    tri(j, j + 1) = factors.offdiag[j];
    tri(j + 1, j) = factors.offdiag[j];
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(tri);
}

}  // namespace detail

/// Lowest eigenpair by Lanczos iteration; the residual ||Hv - Ev|| is
/// verified to 1e-10 (absolute, energies O(N)).
inline std::pair<double, DenseState> exact_ground_state(const SparseOperator& op, int n_sites,
                                                        std::uint64_t seed = 7) {
  const long dim = op.rows();
  RandomStream rng(seed, 0);
  VectorXc start(dim);
  for (long x = 0; x < dim; ++x) start[x] = Complex(rng.next_normal(), rng.next_normal());

  double energy = 0.0;
  VectorXc vector;
  for (int rounds = 0; rounds < 4; ++rounds) {
    const int steps = std::min<long>(dim, 120 + 90 * rounds);
    const auto factors = detail::lanczos(op, start, steps);
    const auto eig = detail::tridiagonal_eigen(factors);
    energy = eig.eigenvalues()[0];
    vector.noalias() = factors.basis * eig.eigenvectors().col(0).cast<Complex>();
    vector /= vector.norm();
    const double residual = (op * vector - energy * vector).norm();
    if (residual <= 1e-10) {
      DenseState state;
      state.amplitudes = vector;
      state.sites = n_sites;
      return {energy, state};
    }
    start = vector;  // restart from the best estimate
  }
  throw OracleError("ground-state Lanczos failed to reach residual 1e-10");
}

/// Krylov-subspace propagator for exp(-i H t). The substep is capped so the
/// 30-dimensional Krylov approximation is accurate far below the 1e-10
/// target; unitarity is verified at every requested snapshot.
class ExactPropagator {
 public:
  ExactPropagator(const SparseOperator& op, double hamiltonian_norm_bound)
      : op_(op), norm_bound_(hamiltonian_norm_bound) {}

  /// Evolves through the sorted, nonnegative times (measured from the state's
  /// own t = 0) and returns one snapshot per entry.
  std::vector<DenseState> evolve(const DenseState& initial,
                                 const std::vector<double>& times) const {
    DenseState current = initial;
    std::vector<DenseState> snapshots;
    snapshots.reserve(times.size());
    double now = 0.0;
    for (double target : times) {
      if (target < now - 1e-15) throw OracleError("evolution times must be nondecreasing");
      advance(current, target - now);
      now = target;
      if (std::abs(current.norm() - 1.0) > 1e-10) {
        throw OracleError("Krylov propagation lost unitarity beyond 1e-10");
      }
      DenseState snapshot = current;
      snapshot.normalize();
      snapshots.push_back(std::move(snapshot));
    }
    return snapshots;
  }

 private:
  void advance(DenseState& state, double dt) const {
    if (dt <= 0.0) return;
    // (norm_bound * tau)^m / m! ~ 1e-21 for tau = 2.5 / norm_bound, m = 30.
    const double tau_max = 2.5 / std::max(norm_bound_, 1e-12);
    double remaining = dt;
    while (remaining > 1e-15) {
      const double tau = std::min(remaining, tau_max);
      const auto factors = detail::lanczos(op_, state.amplitudes, 30);
      const auto eig = detail::tridiagonal_eigen(factors);
      const int m = factors.steps;
      Eigen::VectorXcd phases(m);
      for (int q = 0; q < m; ++q) {
        phases[q] = std::exp(Complex(0.0, -eig.eigenvalues()[q] * tau));
      }
      // exp(-i T tau) e_1 in the Krylov basis, scaled back by the norm.
      const Eigen::VectorXcd first_row = eig.eigenvectors().row(0).transpose().cast<Complex>();
      const Eigen::VectorXcd krylov_coeffs =
          eig.eigenvectors().cast<Complex>() * phases.cwiseProduct(first_row);
      state.amplitudes = factors.basis * (krylov_coeffs * state.amplitudes.norm());
      remaining -= tau;
    }
  }

  const SparseOperator& op_;
  double norm_bound_;
};

/// Convenience wrapper around the sparse operator and propagator for one
/// Hamiltonian.
class ExactOracle {
 public:
  explicit ExactOracle(const TfiHamiltonian& hamiltonian, int cap = 14)
      : hamiltonian_(hamiltonian),
        op_(build_hamiltonian(hamiltonian, cap)),
        propagator_(op_, hamiltonian.sites *
                             (std::abs(hamiltonian.coupling_j) + std::abs(hamiltonian.field_h))) {}

  ExactOracle(const ExactOracle&) = delete;
  ExactOracle& operator=(const ExactOracle&) = delete;

  const SparseOperator& hamiltonian() const { return op_; }

  std::pair<double, DenseState> ground_state(std::uint64_t seed = 7) const {
    return exact_ground_state(op_, hamiltonian_.sites, seed);
  }

  std::vector<DenseState> evolve(const DenseState& initial,
                                 const std::vector<double>& times) const {
    return propagator_.evolve(initial, times);
  }

  Complex energy(const DenseState& state) const {
    return state.amplitudes.dot(op_ * state.amplitudes);
  }

  double energy_variance(const DenseState& state) const {
    const VectorXc h_psi = op_ * state.amplitudes;
    const Complex mean = state.amplitudes.dot(h_psi);
    return h_psi.squaredNorm() - std::norm(mean);
  }

  double sigma_x(const DenseState& state) const {
    const int n = hamiltonian_.sites;
    Complex total = 0.0;
    for (long x = 0; x < state.amplitudes.size(); ++x) {
      for (int i = 0; i < n; ++i) {
        total += std::conj(state.amplitudes[x ^ (1L << i)]) * state.amplitudes[x];
      }
    }
    return total.real() / n;
  }

 private:
  TfiHamiltonian hamiltonian_;
  SparseOperator op_;
  ExactPropagator propagator_;
};

/// Normalized dense vector of the variational state, from log_psi over all
/// configurations (overflow-safe via the max log-amplitude).
inline DenseState dense_variational_state(const Ansatz& ansatz, const VectorXc& params,
                                          int cap = 14) {
  const int n = ansatz.sites();
  if (n > cap) {
    throw CapacityError("dense variational state needs N <= " + std::to_string(cap));
  }
  const long dim = 1L << n;
  VectorXc log_amp(dim);
  double max_re = -1e300;
  for (long x = 0; x < dim; ++x) {
    log_amp[x] = ansatz.log_psi(SpinConfiguration::from_bits(x, n), params);
    max_re = std::max(max_re, log_amp[x].real());
  }
  DenseState state;
  state.sites = n;
  state.amplitudes.resize(dim);
  for (long x = 0; x < dim; ++x) state.amplitudes[x] = std::exp(log_amp[x] - max_re);
  state.normalize();
  return state;
}

struct FidelityReport {
  double fidelity = 0.0;       // |<ref|psi(alpha)>|^2
  double norm_distance = 0.0;  // min over a global phase of ||psi - ref||
  DenseState variational;      // the normalized dense vector of the ansatz
};

/// Builds the normalized dense vector of the variational state from log_psi
/// over all configurations and compares it against a reference.
inline FidelityReport variational_fidelity(const Ansatz& ansatz, const VectorXc& params,
                                           const DenseState& reference, int cap = 14) {
  const int n = ansatz.sites();
  if (n > cap) {
    throw CapacityError("variational_fidelity needs N <= " + std::to_string(cap));
  }
  const long dim = 1L << n;
  if (reference.amplitudes.size() != dim) {
    throw ShapeError("reference state dimension mismatch");
  }
  FidelityReport report;
  report.variational = dense_variational_state(ansatz, params, cap);
  const double overlap = std::abs(reference.amplitudes.dot(report.variational.amplitudes));
  report.fidelity = overlap * overlap;
  report.norm_distance = std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap));
  return report;
}

}  // namespace atvmc
