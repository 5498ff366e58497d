#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "atvmc/errors.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

/// An N-site spin configuration in the computational basis. Spins are stored
/// as signed integers (+1 / -1) so pair products need no decoding in the
/// local-energy inner loop.
struct SpinConfiguration {
  std::vector<int> spins;

  SpinConfiguration() = default;
  explicit SpinConfiguration(std::vector<int> values) : spins(std::move(values)) {}

  int size() const { return static_cast<int>(spins.size()); }

  bool valid() const {
    for (int s : spins) {
      if (s != 1 && s != -1) return false;
    }
    return !spins.empty();
  }

  /// Basis convention shared with the dense oracle: spin i is bit i,
  /// +1 corresponds to bit 0.
  static SpinConfiguration from_bits(std::uint64_t bits, int n_sites) {
    SpinConfiguration config;
    config.spins.resize(n_sites);
    for (int i = 0; i < n_sites; ++i) {
      config.spins[i] = ((bits >> i) & 1ULL) ? -1 : 1;
    }
    return config;
  }

  std::uint64_t to_bits() const {
    std::uint64_t bits = 0;
    for (int i = 0; i < size(); ++i) {
      if (spins[i] < 0) bits |= (1ULL << i);
    }
    return bits;
  }

  SpinConfiguration rotated(int shift) const {
    const int n = size();
    SpinConfiguration out;
    out.spins.resize(n);
    for (int i = 0; i < n; ++i) out.spins[i] = spins[((i + shift) % n + n) % n];
    return out;
  }
};

/// Transverse-field Ising Hamiltonian on a periodic chain:
///   H = -J sum_i sigma^z_i sigma^z_{i+1} - h sum_i sigma^x_i
/// Units are hbar = 1 and energies in units of J; time is reported in 1/J.
struct TfiHamiltonian {
  double coupling_j = 1.0;
  double field_h = 1.0;
  int sites = 0;
  // Boundary conditions are always periodic.

  TfiHamiltonian() = default;
  TfiHamiltonian(int n_sites, double j, double h)
      : coupling_j(j), field_h(h), sites(n_sites) {
    if (n_sites < 2) throw ShapeError("TfiHamiltonian: need at least 2 sites");
    if (j == 0.0) throw ShapeError("TfiHamiltonian: J must be nonzero (g = |h/J|)");
  }

  static TfiHamiltonian with_field_ratio(int n_sites, double g, double j = 1.0) {
    return TfiHamiltonian(n_sites, j, g * j);
  }

  double g() const { return std::abs(field_h / coupling_j); }
};

inline void require_matching_shape(const SpinConfiguration& config,
                                   const TfiHamiltonian& hamiltonian) {
  if (config.size() != hamiltonian.sites) {
    throw ShapeError("spin configuration has " + std::to_string(config.size()) +
                     " sites, Hamiltonian expects " + std::to_string(hamiltonian.sites));
  }
}

/// -J sum_i sigma_i sigma_{i+1} with periodic wrap.
inline double diagonal_energy(const SpinConfiguration& config,
                              const TfiHamiltonian& hamiltonian) {
  require_matching_shape(config, hamiltonian);
  const int n = hamiltonian.sites;
  long long bond_sum = 0;
  for (int i = 0; i < n; ++i) {
    bond_sum += config.spins[i] * config.spins[(i + 1) % n];
  }
  return -hamiltonian.coupling_j * static_cast<double>(bond_sum);
}

struct Connection {
  SpinConfiguration config;
  Complex amplitude;
};

/// All configurations x' with <x|H|x'> != 0: the diagonal entry followed by
/// one single-flip entry per site with amplitude -h. For h = 0 the
/// off-diagonal entries are still emitted with amplitude 0 unless
/// skip_zero_offdiagonal is set.
inline std::vector<Connection> connections(const SpinConfiguration& config,
                                           const TfiHamiltonian& hamiltonian,
                                           bool skip_zero_offdiagonal = false) {
  require_matching_shape(config, hamiltonian);
  std::vector<Connection> result;
  const bool emit_offdiagonal = !(skip_zero_offdiagonal && hamiltonian.field_h == 0.0);
  result.reserve(emit_offdiagonal ? hamiltonian.sites + 1 : 1);
  result.push_back({config, Complex(diagonal_energy(config, hamiltonian), 0.0)});
  if (emit_offdiagonal) {
    for (int i = 0; i < hamiltonian.sites; ++i) {
      Connection flip{config, Complex(-hamiltonian.field_h, 0.0)};
      flip.config.spins[i] = -flip.config.spins[i];
      result.push_back(std::move(flip));
    }
  }
  return result;
}

}  // namespace atvmc
