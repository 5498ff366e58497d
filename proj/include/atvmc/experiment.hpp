#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "atvmc/config.hpp"
#include "atvmc/engine.hpp"
#include "atvmc/exact.hpp"
#include "atvmc/ground_state.hpp"
#include "atvmc/trajectory.hpp"

namespace atvmc {

inline std::shared_ptr<Ansatz> make_ansatz(const ExperimentConfig& config) {
  if (config.ansatz_kind == "jastrow") return std::make_shared<JastrowAnsatz>(config.n);
  return std::make_shared<SymmetricRbmAnsatz>(config.n, config.density);
}

/// Estimate closure for the configured mode and Hamiltonian. The ansatz is
/// captured shared so the closure owns everything it touches.
inline EstimateFn make_estimate_fn(const ExperimentConfig& config,
                                   std::shared_ptr<Ansatz> ansatz,
                                   const TfiHamiltonian& hamiltonian) {
  if (config.estimator_mode == "exact-sum") {
    const int cap = config.enumeration_cap;
    return [ansatz, hamiltonian, cap](const ParameterState& params) {
      return estimate_exact_sum(*ansatz, params, hamiltonian, cap);
    };
  }
  SamplerConfig sampler;
  sampler.n_samples = config.samples;
  sampler.n_burn = config.burn;
  sampler.n_chains = config.chains;
  sampler.seed = config.seed;
  return [ansatz, hamiltonian, sampler](const ParameterState& params) {
    return estimate_metropolis(*ansatz, params, hamiltonian, sampler);
  };
}

// ---------------------------------------------------------------------------
// ground-state preparation
// ---------------------------------------------------------------------------

struct GroundStateArtifacts {
  std::filesystem::path checkpoint_path;
  std::filesystem::path summary_path;
  SrResult result;
  double ed_energy = std::numeric_limits<double>::quiet_NaN();
  double ed_overlap = std::numeric_limits<double>::quiet_NaN();
};

inline GroundStateArtifacts run_ground_state(const ExperimentConfig& config) {
  config.validate();
  const TfiHamiltonian hamiltonian = config.hamiltonian_initial();
  auto ansatz = make_ansatz(config);
  const EstimateFn estimate = make_estimate_fn(config, ansatz, hamiltonian);

  GroundStateArtifacts artifacts;
  artifacts.result = optimize_ground_state(*ansatz, hamiltonian, config.sr, estimate);

  if (config.n <= config.oracle_cap) {
    ExactOracle oracle(hamiltonian, config.oracle_cap);
    const auto [e0, ground] = oracle.ground_state();
    artifacts.ed_energy = e0;
    artifacts.ed_overlap =
        variational_fidelity(*ansatz, artifacts.result.params.values, ground,
                             config.oracle_cap)
            .fidelity;
  }

  Checkpoint ckpt;
  ckpt.ansatz_kind = ansatz->kind();
  ckpt.sites = config.n;
  ckpt.density = config.ansatz_kind == "rbm" ? config.density : 0;
  ckpt.seed = config.seed;
  ckpt.g = config.g1;
  ckpt.energy = Complex(artifacts.result.energy, 0.0);
  ckpt.variance = artifacts.result.variance;
  ckpt.labels = ansatz->parameter_labels();
  ckpt.values = artifacts.result.params.values;
  artifacts.checkpoint_path = config.checkpoint_path();
  write_checkpoint(artifacts.checkpoint_path, ckpt);

  artifacts.summary_path =
      std::filesystem::path(config.output_directory) / "ground_state_summary.txt";
  std::filesystem::create_directories(config.output_directory);
  std::ofstream summary(artifacts.summary_path, std::ios::trunc);
  summary << "energy\t" << io::format_double(artifacts.result.energy) << "\n";
  summary << "variance\t" << io::format_double(artifacts.result.variance) << "\n";
  summary << "iterations\t" << artifacts.result.iterations_run << "\n";
  summary << "converged\t" << (artifacts.result.converged ? "true" : "false") << "\n";
  summary << "ed_energy\t" << io::format_double(artifacts.ed_energy) << "\n";
  summary << "ed_overlap\t" << io::format_double(artifacts.ed_overlap) << "\n";
  return artifacts;
}

// ---------------------------------------------------------------------------
// quench runs
// ---------------------------------------------------------------------------

struct QuenchArtifacts {
  std::filesystem::path trajectory_path;
  std::filesystem::path events_path;
  std::vector<TrajectoryRecord> records;
  std::vector<ParameterState> snapshots;  // filled when requested
  bool aborted = false;
  std::string error;
  int negative_lite_warnings = 0;
  int rejected_steps = 0;
};

/// Executes the quench from the checkpoint parameters under H(g2), writing
/// the trajectory and event logs. Numerical failures abort the run, leaving
/// the partial trajectory intact with a terminal error record.
inline QuenchArtifacts run_quench(const ExperimentConfig& config, bool keep_snapshots = false,
                                  const std::string& file_tag = "") {
  config.validate();
  auto ansatz = make_ansatz(config);
  const Checkpoint ckpt = read_checkpoint(config.checkpoint_path());
  ParameterState initial = checkpoint_to_state(ckpt, *ansatz);

  const TfiHamiltonian hamiltonian = config.hamiltonian_quench();
  const EstimateFn estimate = make_estimate_fn(config, ansatz, hamiltonian);
  TvmcEngine engine(estimate, config.solver, config.adaptive, config.integrator);
  QuenchRunner runner(engine, std::move(initial));

  QuenchArtifacts artifacts;
  const std::filesystem::path dir(config.output_directory);
  artifacts.trajectory_path = dir / ("trajectory" + file_tag + ".tsv");
  artifacts.events_path = dir / ("events" + file_tag + ".tsv");

  TrajectoryWriter trajectory;
  trajectory.open(artifacts.trajectory_path, config.hash(), config.seed);
  EventWriter events;
  events.open(artifacts.events_path, config.hash(), config.seed);

  try {
    runner.run(
        config.t_total, config.record_every,
        [&](const TrajectoryRecord& record, const ParameterState& params) {
          trajectory.write(record);
          artifacts.records.push_back(record);
          if (keep_snapshots) artifacts.snapshots.push_back(params);
        },
        [&](long step, double time, const ControllerEvent& event) {
          events.write(step, time, event);
        });
  } catch (const RankZeroError& e) {
    artifacts.aborted = true;
    artifacts.error = std::string("rank-zero: ") + e.what();
  } catch (const StiffnessError& e) {
    artifacts.aborted = true;
    artifacts.error = std::string("stiffness: ") + e.what();
  } catch (const SamplerStallError& e) {
    artifacts.aborted = true;
    artifacts.error = std::string("sampler-stall: ") + e.what();
  } catch (const NumericDomainError& e) {
    artifacts.aborted = true;
    artifacts.error = std::string("numeric-domain: ") + e.what();
  }
  if (artifacts.aborted) trajectory.write_error(artifacts.error);
  artifacts.negative_lite_warnings = runner.negative_lite_warnings();
  artifacts.rejected_steps = runner.rejected_steps();
  trajectory.close();
  events.close();
  return artifacts;
}

// ---------------------------------------------------------------------------
// variational-vs-exact comparison
// ---------------------------------------------------------------------------

struct CompareRow {
  double time = 0.0;
  double sigma_x_variational = 0.0;
  double sigma_x_exact = 0.0;
  double sigma_x_abs_diff = 0.0;
  double fidelity = 0.0;
  double bound = 0.0;     // cumulative integral of epsilon dt'
  double distance = 0.0;  // phase-minimized norm distance
};

struct CompareArtifacts {
  std::filesystem::path report_path;
  std::filesystem::path oracle_trajectory_path;
  QuenchArtifacts quench;
  std::vector<CompareRow> rows;
  double max_sigma_x_diff = 0.0;
  bool bound_satisfied = true;  // bound >= distance at every recorded time
};

/// Runs the quench and the exact Krylov propagation of the same initial
/// state on the same time grid, and checks the a-posteriori error bound
/// against the true phase-minimized distance.
inline CompareArtifacts run_compare(const ExperimentConfig& config) {
  config.validate();
  if (config.n > config.oracle_cap) {
    throw CapacityError("compare needs model.n <= oracle.cap (" +
                        std::to_string(config.oracle_cap) + ")");
  }
  CompareArtifacts artifacts;
  artifacts.quench = run_quench(config, /*keep_snapshots=*/true);

  auto ansatz = make_ansatz(config);
  const TfiHamiltonian hamiltonian = config.hamiltonian_quench();
  ExactOracle oracle(hamiltonian, config.oracle_cap);

  // The exact reference starts from the variational initial state, so the
  // distance is zero at t = 0 and the cumulative bound applies exactly.
  const Checkpoint ckpt = read_checkpoint(config.checkpoint_path());
  ParameterState initial = checkpoint_to_state(ckpt, *ansatz);
  const DenseState reference =
      dense_variational_state(*ansatz, initial.values, config.oracle_cap);

  std::vector<double> times;
  times.reserve(artifacts.quench.records.size());
  for (const auto& record : artifacts.quench.records) times.push_back(record.time);
  const auto exact_states = oracle.evolve(reference, times);

  const std::filesystem::path dir(config.output_directory);
  artifacts.report_path = dir / "compare.tsv";
  artifacts.oracle_trajectory_path = dir / "oracle_trajectory.tsv";
  std::ofstream report(artifacts.report_path, std::ios::trunc);
  report << "# atvmc-compare v1.0\n# config-hash " << config.hash() << "\n";
  report << "# columns time\tsigma_x_var\tsigma_x_exact\tabs_diff\tfidelity\tbound\tdistance\n";

  TrajectoryWriter oracle_trajectory;
  oracle_trajectory.open(artifacts.oracle_trajectory_path, config.hash(), config.seed);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < artifacts.quench.records.size(); ++i) {
    const auto& record = artifacts.quench.records[i];
    const auto& snapshot = artifacts.quench.snapshots[i];
    const auto fidelity =
        variational_fidelity(*ansatz, snapshot.values, exact_states[i], config.oracle_cap);

    CompareRow row;
    row.time = record.time;
    row.sigma_x_variational = record.sigma_x;
    row.sigma_x_exact = oracle.sigma_x(exact_states[i]);
    row.sigma_x_abs_diff = std::abs(row.sigma_x_variational - row.sigma_x_exact);
    row.fidelity = fidelity.fidelity;
    row.bound = record.cumulative_bound;
    row.distance = fidelity.norm_distance;
    artifacts.rows.push_back(row);
    artifacts.max_sigma_x_diff = std::max(artifacts.max_sigma_x_diff, row.sigma_x_abs_diff);
    if (row.bound < row.distance) artifacts.bound_satisfied = false;

    report << io::format_double(row.time) << '\t'
           << io::format_double(row.sigma_x_variational) << '\t'
           << io::format_double(row.sigma_x_exact) << '\t'
           << io::format_double(row.sigma_x_abs_diff) << '\t'
           << io::format_double(row.fidelity) << '\t' << io::format_double(row.bound) << '\t'
           << io::format_double(row.distance) << '\n';
    report.flush();

    // Oracle observables in the trajectory schema, for diff tooling.
    TrajectoryRecord oracle_record;
    oracle_record.step = record.step;
    oracle_record.time = record.time;
    oracle_record.sigma_x = row.sigma_x_exact;
    oracle_record.energy_re = oracle.energy(exact_states[i]).real();
    oracle_record.energy_im = oracle.energy(exact_states[i]).imag();
    oracle_record.energy_variance = oracle.energy_variance(exact_states[i]);
    oracle_record.epsilon_sq = nan;
    oracle_record.epsilon_sq_raw = nan;
    oracle_record.fs_epsilon_sq = nan;
    oracle_record.lambda_sq = nan;
    oracle_record.active_count = 0;
    oracle_record.cumulative_bound = nan;
    oracle_record.dt_used = record.dt_used;
    oracle_record.solver_rank = 0;
    oracle_record.discarded_mass = nan;
    oracle_trajectory.write(oracle_record);
  }
  oracle_trajectory.close();
  return artifacts;
}

}  // namespace atvmc
