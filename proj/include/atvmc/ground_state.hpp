#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "atvmc/ansatz.hpp"
#include "atvmc/engine.hpp"
#include "atvmc/errors.hpp"
#include "atvmc/estimator.hpp"
#include "atvmc/rng.hpp"
#include "atvmc/solver.hpp"
#include "atvmc/spin_chain.hpp"

namespace atvmc {

struct SrConfig {
  double learning_rate = 0.02;
  int iterations = 2000;
  double shift_initial = 1e-3;
  double shift_floor = 1e-5;
  double shift_decay = 0.9;
  int shift_decay_every = 100;
  double convergence_rtol = 1e-8;  // relative energy change over the window
  int convergence_window = 50;
  int stall_window = 500;
  double init_scale = 1e-2;
  std::uint64_t seed = 12345;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("sr: learning_rate must be positive");
    if (iterations < 1) throw ConfigError("sr: iterations must be >= 1");
    if (!(shift_initial >= shift_floor && shift_floor > 0.0)) {
      throw ConfigError("sr: need shift_initial >= shift_floor > 0");
    }
    if (!(shift_decay > 0.0 && shift_decay <= 1.0)) {
      throw ConfigError("sr: shift_decay must be in (0, 1]");
    }
    if (shift_decay_every < 1 || convergence_window < 1 || stall_window < 1) {
      throw ConfigError("sr: window lengths must be >= 1");
    }
    if (!(init_scale > 0.0)) throw ConfigError("sr: init_scale must be positive");
  }
};

struct SrResult {
  ParameterState params;  // best-energy parameters seen
  double energy = 0.0;
  double variance = 0.0;
  int iterations_run = 0;
  bool converged = false;
  std::vector<double> energy_history;
};

/// Stochastic reconfiguration toward the ground state: imaginary-time flow
/// delta alpha = -eta (S + shift I)^-1 F, sharing the tVMC solver with a
/// decaying diagonal shift in place of the pseudoinverse cutoff. All
/// parameters stay active throughout; the best-energy snapshot is returned.
inline SrResult optimize_ground_state(const Ansatz& ansatz, const TfiHamiltonian& hamiltonian,
                                      const SrConfig& sr, const EstimateFn& estimate) {
  sr.validate();
  (void)hamiltonian;  // the Hamiltonian enters through the estimate closure

  ParameterState params = ansatz.make_parameter_state();
  RandomStream init_stream(sr.seed, 0);
  const double scale = sr.init_scale / std::sqrt(2.0);
  for (int k = 0; k < params.size(); ++k) {
    params.values[k] = scale * Complex(init_stream.next_normal(), init_stream.next_normal());
  }

  SrResult result;
  result.params = params;
  double best_energy = std::numeric_limits<double>::infinity();
  int best_iteration = 0;

  for (int it = 0; it < sr.iterations; ++it) {
    const EstimateBundle bundle = estimate(params);
    const double energy = bundle.energy_mean.real();
    result.energy_history.push_back(energy);
    result.iterations_run = it + 1;

    if (energy < best_energy) {
      best_energy = energy;
      best_iteration = it;
      result.params = params;
      result.energy = energy;
      result.variance = bundle.energy_variance;
    }

    if (it >= sr.convergence_window) {
      const double previous = result.energy_history[it - sr.convergence_window];
      if (std::abs(energy - previous) <
          sr.convergence_rtol * std::max(1.0, std::abs(energy))) {
        result.converged = true;
        break;
      }
    }
    if (it - best_iteration >= sr.stall_window) {
      throw OptimizationStallError(
          "ground-state optimization stalled: no energy improvement over " +
          std::to_string(sr.stall_window) + " iterations (best " +
          std::to_string(best_energy) + " at iteration " + std::to_string(best_iteration) +
          ", current " + std::to_string(energy) + ")");
    }

    SolverPolicy policy;
    policy.pinv_rtol = 1e-12;
    policy.diagonal_shift = std::max(
        sr.shift_initial * std::pow(sr.shift_decay, it / sr.shift_decay_every),
        sr.shift_floor);
    const auto solve =
        solve_equations_of_motion(bundle.s_active, bundle.force_active(), policy);
    // alpha_dot = -i S^+ F, so S^+ F = i alpha_dot.
    const VectorXc natural_gradient = kImaginaryUnit * solve.alpha_dot;
    for (int a = 0; a < bundle.active_count(); ++a) {
      params.values[bundle.active_indices[a]] -= sr.learning_rate * natural_gradient[a];
    }
  }
  return result;
}

}  // namespace atvmc
