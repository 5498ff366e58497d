#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "atvmc/controller.hpp"
#include "atvmc/errors.hpp"
#include "atvmc/estimator.hpp"
#include "atvmc/lite.hpp"
#include "atvmc/parameters.hpp"
#include "atvmc/solver.hpp"
#include "atvmc/trajectory.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

struct IntegratorConfig {
  enum class Kind { Euler, Heun };

  Kind kind = Kind::Heun;
  double dt = 1e-3;
  bool adaptive = false;   // step-doubling controller, Heun only
  double tol_step = 1e-6;  // relative discrepancy accepted per step
  double dt_min = 1e-9;
  double dt_max = 1e-1;
  double growth_factor = 1.3;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("integrator: dt must be positive");
    if (adaptive && kind != Kind::Heun) {
      throw ConfigError("integrator: the adaptive step controller requires Heun");
    }
    if (!(tol_step > 0.0)) throw ConfigError("integrator: tol_step must be positive");
    if (!(dt_min > 0.0 && dt_max >= dt_min)) {
      throw ConfigError("integrator: need 0 < dt_min <= dt_max");
    }
    if (!(growth_factor > 1.0)) throw ConfigError("integrator: growth_factor must exceed 1");
  }
};

/// Everything known at one parameter point: the statistical bundle, the
/// regularized solve on the active set, and the LITE diagnostics.
struct Evaluation {
  EstimateBundle bundle;
  SolveResult solve;
  LiteReport lite;
};

using EstimateFn = std::function<EstimateBundle(const ParameterState&)>;

/// One time step is the sequential pipeline estimate -> solve -> control ->
/// advance. The engine owns no state; it maps parameter states to new
/// parameter states, leaving frozen entries bit-for-bit untouched.
class TvmcEngine {
 public:
  TvmcEngine(EstimateFn estimate, SolverPolicy solver, AdaptivePolicy adaptive,
             IntegratorConfig integrator)
      : estimate_(std::move(estimate)),
        solver_(solver),
        adaptive_(adaptive),
        integrator_(integrator) {
    solver_.validate();
    adaptive_.validate();
    integrator_.validate();
  }

  const SolverPolicy& solver_policy() const { return solver_; }
  const AdaptivePolicy& adaptive_policy() const { return adaptive_; }
  const IntegratorConfig& integrator() const { return integrator_; }

  Evaluation evaluate(const ParameterState& params) const {
    Evaluation eval;
    eval.bundle = estimate_(params);
    MatrixXc chains;
    const MatrixXc* chains_ptr = nullptr;
    if (eval.bundle.chain_forces.cols() >= 2) {
      chains = eval.bundle.chain_forces_active();
      chains_ptr = &chains;
    }
    eval.solve = solve_equations_of_motion(eval.bundle.s_active, eval.bundle.force_active(),
                                           solver_, chains_ptr);
    eval.lite.var_h = eval.bundle.energy_variance;
    eval.lite.epsilon_sq = lite_squared(eval.lite.var_h, eval.bundle.s_active,
                                        eval.solve.alpha_dot, &eval.lite.epsilon_sq_raw);
    eval.lite.fs_epsilon_sq = fs_error_squared(eval.lite.var_h, eval.bundle.s_active,
                                               eval.bundle.force_active(),
                                               eval.solve.alpha_dot);
    eval.lite.threshold = adaptive_.resolve_lambda_sq(eval.lite.var_h);
    return eval;
  }

  /// Euler step on the active entries only.
  ParameterState advance_euler(const ParameterState& params, const Evaluation& eval,
                               double dt) const {
    ParameterState next = params;
    const auto& active = eval.bundle.active_indices;
    for (std::size_t a = 0; a < active.size(); ++a) {
      next.values[active[a]] += eval.solve.alpha_dot[a] * dt;
    }
    return next;
  }

  /// Heun step: Euler predictor, re-estimate at the predicted parameters,
  /// trapezoidal corrector. Aborts atomically on estimator/solver errors.
  ParameterState advance_heun(const ParameterState& params, const Evaluation& eval,
                              double dt) const {
    const ParameterState predicted = advance_euler(params, eval, dt);
    const Evaluation predicted_eval = evaluate(predicted);
    ParameterState next = params;
    const auto& active = eval.bundle.active_indices;
    for (std::size_t a = 0; a < active.size(); ++a) {
      next.values[active[a]] +=
          0.5 * dt * (eval.solve.alpha_dot[a] + predicted_eval.solve.alpha_dot[a]);
    }
    return next;
  }

  ParameterState advance(const ParameterState& params, const Evaluation& eval,
                         double dt) const {
    return integrator_.kind == IntegratorConfig::Kind::Euler
               ? advance_euler(params, eval, dt)
               : advance_heun(params, eval, dt);
  }

  struct StepAttempt {
    bool accepted = false;
    double discrepancy = 0.0;
    double dt_next = 0.0;
    ParameterState result;
  };

  /// One attempt of the step-doubling controller: a full Heun step is
  /// compared against two half steps; the relative parameter-change
  /// discrepancy decides acceptance. Accepted steps return the two-half-step
  /// state (the finer solution). dt underflow is reported by the caller.
  StepAttempt adaptive_step_control(const ParameterState& params, const Evaluation& eval,
                                    double dt, double tol_step) const {
    StepAttempt attempt;
    const ParameterState full = advance_heun(params, eval, dt);
    const ParameterState half_one = advance_heun(params, eval, 0.5 * dt);
    const Evaluation half_eval = evaluate(half_one);
    const ParameterState half_two = advance_heun(half_one, half_eval, 0.5 * dt);

    const double change = (half_two.values - params.values).norm();
    const double difference = (full.values - half_two.values).norm();
    if (difference == 0.0) {
      attempt.discrepancy = 0.0;
    } else if (change == 0.0) {
      attempt.discrepancy = std::numeric_limits<double>::infinity();
    } else {
      attempt.discrepancy = difference / change;
    }

    if (attempt.discrepancy <= tol_step) {
      attempt.accepted = true;
      attempt.result = half_two;
      attempt.dt_next = attempt.discrepancy < 0.25 * tol_step
                            ? std::min(integrator_.growth_factor * dt, integrator_.dt_max)
                            : dt;
    } else {
      attempt.accepted = false;
      attempt.dt_next = 0.5 * dt;
    }
    return attempt;
  }

 private:
  EstimateFn estimate_;
  SolverPolicy solver_;
  AdaptivePolicy adaptive_;
  IntegratorConfig integrator_;
};

/// Drives the stepping loop from t = 0 to t_total, invoking the adaptive
/// controller at its cadence and reporting one record per accepted step.
/// Set changes decided by the controller apply after the step's advance,
/// i.e. between estimator refreshes.
class QuenchRunner {
 public:
  using RecordCallback = std::function<void(const TrajectoryRecord&, const ParameterState&)>;
  using EventCallback = std::function<void(long step, double time, const ControllerEvent&)>;

  QuenchRunner(const TvmcEngine& engine, ParameterState initial)
      : engine_(engine), params_(std::move(initial)) {}

  const ParameterState& params() const { return params_; }
  int negative_lite_warnings() const { return negative_lite_warnings_; }
  int rejected_steps() const { return rejected_steps_; }

  void run(double t_total, long record_every, const RecordCallback& on_record,
           const EventCallback& on_event = {}) {
    const auto& integrator = engine_.integrator();
    double t = 0.0;
    double dt = integrator.dt;
    long accepted = 0;
    // With the adaptive Heun scheme the active set is updated only once
    // every two accepted steps.
    const long controller_cadence =
        (integrator.adaptive && integrator.kind == IntegratorConfig::Kind::Heun) ? 2 : 1;

    while (t < t_total - 1e-12) {
      double dt_eff = std::min(dt, t_total - t);
      Evaluation eval = engine_.evaluate(params_);
      if (eval.lite.epsilon_sq_raw < -1e-8) ++negative_lite_warnings_;

      ControllerOutcome outcome;
      outcome.new_active = params_.active;
      const bool controller_due =
          engine_.adaptive_policy().enabled && (accepted % controller_cadence == 0);
      if (controller_due) {
        outcome = controller_step(params_, engine_.adaptive_policy(),
                                  engine_.solver_policy(), eval.bundle, eval.solve,
                                  eval.lite.epsilon_sq, eval.lite.var_h);
      }

      ParameterState next;
      if (!integrator.adaptive) {
        next = engine_.advance(params_, eval, dt_eff);
      } else {
        for (;;) {
          const auto attempt =
              engine_.adaptive_step_control(params_, eval, dt_eff, integrator.tol_step);
          if (attempt.accepted) {
            next = attempt.result;
            dt = attempt.dt_next;
            break;
          }
          ++rejected_steps_;
          dt_eff = attempt.dt_next;
          dt = attempt.dt_next;
          if (dt_eff < integrator.dt_min) {
            throw StiffnessError("adaptive step controller: dt underflow below dt_min at t=" +
                                 std::to_string(t));
          }
        }
      }

      if (on_record && accepted % record_every == 0) {
        on_record(make_record(accepted, t, dt_eff, eval, outcome), params_);
      }
      if (on_event && controller_due) {
        for (const auto& event : outcome.events) on_event(accepted, t, event);
      }

      cumulative_bound_ =
          accumulate_global_bound(cumulative_bound_, eval.lite.epsilon_sq, dt_eff);
      params_ = std::move(next);
      params_.active = outcome.new_active;
      t += dt_eff;
      ++accepted;
    }
  }

 private:
  TrajectoryRecord make_record(long step, double time, double dt_used, const Evaluation& eval,
                               const ControllerOutcome& outcome) const {
    TrajectoryRecord r;
    r.step = step;
    r.time = time;
    r.sigma_x = eval.bundle.sigma_x;
    r.energy_re = eval.bundle.energy_mean.real();
    r.energy_im = eval.bundle.energy_mean.imag();
    r.energy_variance = eval.bundle.energy_variance;
    r.epsilon_sq = eval.lite.epsilon_sq;
    r.epsilon_sq_raw = eval.lite.epsilon_sq_raw;
    r.fs_epsilon_sq = eval.lite.fs_epsilon_sq;
    r.lambda_sq = eval.lite.threshold;
    r.active_count = static_cast<int>(eval.bundle.active_indices.size());
    r.cumulative_bound = cumulative_bound_;
    r.dt_used = dt_used;
    r.solver_rank = eval.solve.rank;
    r.discarded_mass = eval.solve.discarded_mass;
    r.event_summary = summarize_events(outcome);
    return r;
  }

  static std::string summarize_events(const ControllerOutcome& outcome) {
    std::string summary;
    for (const auto& event : outcome.events) {
      if (event.action == ControllerEvent::Action::NoOp) continue;
      if (!summary.empty()) summary += '|';
      summary += to_string(event.action);
      summary += '[';
      for (std::size_t i = 0; i < event.indices.size(); ++i) {
        if (i > 0) summary += ';';
        summary += std::to_string(event.indices[i]);
      }
      summary += ']';
    }
    return summary.empty() ? "-" : summary;
  }

  const TvmcEngine& engine_;
  ParameterState params_;
  double cumulative_bound_ = 0.0;
  int negative_lite_warnings_ = 0;
  int rejected_steps_ = 0;
};

}  // namespace atvmc
