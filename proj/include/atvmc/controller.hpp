#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "atvmc/errors.hpp"
#include "atvmc/estimator.hpp"
#include "atvmc/importance.hpp"
#include "atvmc/lite.hpp"
#include "atvmc/parameters.hpp"
#include "atvmc/solver.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

/// Knobs of the adaptive parameter selection.
struct AdaptivePolicy {
  enum class LambdaMode { Fraction, Absolute };
  enum class ImportanceMode { Exact, Approximate };

  bool enabled = false;
  LambdaMode lambda_mode = LambdaMode::Fraction;
  double lambda_value = 1e-2;  // fraction of Var(H), or absolute lambda^2
  double eta_sig_sq = 0.0;     // significance threshold; 0 disables the filter
  bool collective_updates = true;
  bool binary_search_refinement = true;
  ImportanceMode importance_mode = ImportanceMode::Approximate;

  void validate() const {
    if (!(lambda_value > 0.0)) throw ConfigError("adaptive: lambda_value must be positive");
    if (eta_sig_sq < 0.0 || eta_sig_sq >= 1.0) {
      throw ConfigError("adaptive: eta_sig_sq must be in [0, 1)");
    }
  }

  double resolve_lambda_sq(double var_h) const {
    return lambda_mode == LambdaMode::Fraction ? lambda_value * var_h : lambda_value;
  }
};

/// Per-parameter error contribution with its provenance.
struct ImportanceEntry {
  int index = -1;  // global parameter index
  double delta_eps_sq = 0.0;
  bool currently_active = false;
  bool approximate = false;  // true when Eq.-level exact evaluation was not used
  bool degenerate = false;   // frozen parameter linearly dependent on the active set
};

struct ImportanceReport {
  std::vector<ImportanceEntry> entries;  // one per parameter, in index order
  int negative_clamped = 0;  // entries below -1e-10 before clamping

  const ImportanceEntry& at(int global_index) const { return entries[global_index]; }

  /// Active entries sorted ascending by importance (freeze candidates);
  /// ties break toward the lowest index.
  std::vector<int> ascending_active() const {
    std::vector<int> order;
    for (const auto& e : entries) {
      if (e.currently_active) order.push_back(e.index);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return entries[a].delta_eps_sq < entries[b].delta_eps_sq;
    });
    return order;
  }

  /// Frozen entries sorted descending by importance (unfreeze candidates);
  /// ties break toward the lowest index.
  std::vector<int> descending_frozen() const {
    std::vector<int> order;
    for (const auto& e : entries) {
      if (!e.currently_active) order.push_back(e.index);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return entries[a].delta_eps_sq > entries[b].delta_eps_sq;
    });
    return order;
  }
};

struct ControllerEvent {
  enum class Action { Freeze, Unfreeze, CollectiveFreeze, CollectiveUnfreeze, Suppress, NoOp };

  Action action = Action::NoOp;
  std::vector<int> indices;         // global parameter indices
  std::vector<double> delta_values; // matching importance values
  double eps_sq_before = 0.0;
  double eps_sq_after = 0.0;  // estimated (or probed) value after the change
  std::string note;
};

inline const char* to_string(ControllerEvent::Action action) {
  switch (action) {
    case ControllerEvent::Action::Freeze: return "freeze";
    case ControllerEvent::Action::Unfreeze: return "unfreeze";
    case ControllerEvent::Action::CollectiveFreeze: return "collective-freeze";
    case ControllerEvent::Action::CollectiveUnfreeze: return "collective-unfreeze";
    case ControllerEvent::Action::Suppress: return "suppress";
    case ControllerEvent::Action::NoOp: return "no-op";
  }
  return "unknown";
}

struct ControllerOutcome {
  std::vector<ControllerEvent> events;
  std::vector<std::uint8_t> new_active;
  int suppressed_count = 0;
  int negative_clamped = 0;
  bool changed = false;
};

/// Importance of every parameter from the current bundle and solve factors.
/// Active parameters get freeze importances (approximate by default, exact
/// block-update where requested and determinate); frozen parameters get the
/// reactivation importance. Negative values are clamped at zero; values below
/// -1e-10 are counted as diagnostics.
inline ImportanceReport build_importance_report(const EstimateBundle& bundle,
                                                const SolveResult& solve,
                                                const AdaptivePolicy& policy,
                                                const SolverPolicy& solver_policy,
                                                double eps_sq, double var_h) {
  ImportanceReport report;
  report.entries.resize(bundle.parameter_count());

  const VectorXc force_active = bundle.force_active();
  for (int a = 0; a < bundle.active_count(); ++a) {
    const int k = bundle.active_indices[a];
    ImportanceEntry entry;
    entry.index = k;
    entry.currently_active = true;
    if (policy.importance_mode == AdaptivePolicy::ImportanceMode::Exact) {
      const auto exact =
          importance_freeze_exact(bundle.s_active, solve.s_inv, force_active, var_h, eps_sq,
                                  a, solver_policy.pinv_rtol, solve.max_eigenvalue);
      if (exact.determinate) {
        entry.delta_eps_sq = exact.delta_eps_sq;
      } else {
        entry.delta_eps_sq =
            importance_freeze_approx(bundle.s_active(a, a).real(), solve.alpha_dot[a]);
        entry.approximate = true;
      }
    } else {
      entry.delta_eps_sq =
          importance_freeze_approx(bundle.s_active(a, a).real(), solve.alpha_dot[a]);
      entry.approximate = true;
    }
    report.entries[k] = entry;
  }

  for (int l = 0; l < static_cast<int>(bundle.frozen_indices.size()); ++l) {
    const int k = bundle.frozen_indices[l];
    ImportanceEntry entry;
    entry.index = k;
    entry.currently_active = false;
    const auto unfreeze =
        importance_unfreeze(solve.s_inv, solve.alpha_dot, bundle.v_bar(l), bundle.s_diag[k],
                            bundle.force[k], solver_policy.pinv_rtol);
    entry.delta_eps_sq = unfreeze.delta_eps_sq;
    entry.degenerate = unfreeze.degenerate;
    report.entries[k] = entry;
  }

  for (auto& entry : report.entries) {
    if (entry.delta_eps_sq < 0.0) {
      if (entry.delta_eps_sq < -1e-10) ++report.negative_clamped;
      entry.delta_eps_sq = 0.0;
    }
  }
  return report;
}

/// Parameters with Delta eps^2 strictly below eta_sig^2 * eps^2 are
/// non-relevant (global indices, both active and frozen).
inline std::vector<int> significance_filter(const ImportanceReport& report, double eps_sq,
                                            double eta_sig_sq) {
  std::vector<int> suppressed;
  if (eta_sig_sq <= 0.0) return suppressed;
  const double floor = eta_sig_sq * eps_sq;
  for (const auto& entry : report.entries) {
    if (entry.delta_eps_sq < floor) suppressed.push_back(entry.index);
  }
  return suppressed;
}

namespace detail {

inline int active_count(const std::vector<std::uint8_t>& mask) {
  int count = 0;
  for (auto a : mask) count += (a != 0);
  return count;
}

/// Re-solve the tVMC system restricted to `keep` (local indices into the
/// bundle's active block) and evaluate the LITE directly.
inline double probe_lite(const EstimateBundle& bundle, const SolverPolicy& solver_policy,
                         double var_h, const std::vector<int>& keep) {
  const int m = static_cast<int>(keep.size());
  if (m == 0) return var_h;
  MatrixXc s_sub(m, m);
  VectorXc f_sub(m);
  const VectorXc force_active = bundle.force_active();
  for (int r = 0; r < m; ++r) {
    f_sub[r] = force_active[keep[r]];
    for (int c = 0; c < m; ++c) s_sub(r, c) = bundle.s_active(keep[r], keep[c]);
  }
  MatrixXc chains_sub;
  const MatrixXc* chains_ptr = nullptr;
  if (bundle.chain_forces.cols() >= 2) {
    const MatrixXc chains_active = bundle.chain_forces_active();
    chains_sub.resize(m, chains_active.cols());
    for (int r = 0; r < m; ++r) chains_sub.row(r) = chains_active.row(keep[r]);
    chains_ptr = &chains_sub;
  }
  try {
    const auto solve = solve_equations_of_motion(s_sub, f_sub, solver_policy, chains_ptr);
    return lite_squared(var_h, s_sub, solve.alpha_dot);
  } catch (const RankZeroError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// Freeze the least important active parameter if that keeps the squared LITE
/// below the threshold. Never freezes the last active parameter.
inline bool try_freeze_one(std::vector<std::uint8_t>& mask, const ImportanceReport& report,
                           double eps_sq, double lambda_sq, double consumed,
                           std::vector<ControllerEvent>& events) {
  const auto order = report.ascending_active();
  // Entries already frozen by the significance filter this step are not in
  // the mask anymore.
  for (int candidate : order) {
    if (!mask[candidate]) continue;
    if (detail::active_count(mask) <= 1) return false;
    const double delta = report.at(candidate).delta_eps_sq;
    if (eps_sq + consumed + delta <= lambda_sq) {
      mask[candidate] = 0;
      ControllerEvent event;
      event.action = ControllerEvent::Action::Freeze;
      event.indices = {candidate};
      event.delta_values = {delta};
      event.eps_sq_before = eps_sq;
      event.eps_sq_after = eps_sq + consumed + delta;
      events.push_back(std::move(event));
      return true;
    }
    return false;  // the minimum already breaks the budget
  }
  return false;
}

/// Reactivate the frozen parameter with the largest importance, excluding
/// significance-suppressed ones. No candidates is a logged no-op.
inline bool try_unfreeze_one(std::vector<std::uint8_t>& mask, const ImportanceReport& report,
                             const std::vector<int>& suppressed, double eps_sq,
                             std::vector<ControllerEvent>& events) {
  const auto order = report.descending_frozen();
  for (int candidate : order) {
    if (mask[candidate]) continue;  // already re-activated this step
    if (std::find(suppressed.begin(), suppressed.end(), candidate) != suppressed.end()) {
      continue;
    }
    mask[candidate] = 1;
    ControllerEvent event;
    event.action = ControllerEvent::Action::Unfreeze;
    event.indices = {candidate};
    event.delta_values = {report.at(candidate).delta_eps_sq};
    event.eps_sq_before = eps_sq;
    event.eps_sq_after = std::max(0.0, eps_sq - report.at(candidate).delta_eps_sq);
    events.push_back(std::move(event));
    return true;
  }
  ControllerEvent event;
  event.action = ControllerEvent::Action::NoOp;
  event.eps_sq_before = eps_sq;
  event.eps_sq_after = eps_sq;
  event.note = "no unfreeze candidates";
  events.push_back(std::move(event));
  return false;
}

/// Freeze the largest group of low-importance parameters whose summed
/// contributions keep the LITE below threshold. When the sum test finds at
/// least two candidates and refinement is enabled, a binary search with
/// from-scratch reduced solves finds the true maximal group.
inline bool collective_freeze(std::vector<std::uint8_t>& mask, const ImportanceReport& report,
                              const EstimateBundle& bundle, const SolverPolicy& solver_policy,
                              double eps_sq, double lambda_sq, double var_h, double consumed,
                              bool binary_search, std::vector<ControllerEvent>& events) {
  // Candidates: currently active in the mask, sorted ascending by importance.
  std::vector<int> order;
  for (int k : report.ascending_active()) {
    if (mask[k]) order.push_back(k);
  }
  const int max_freezable = detail::active_count(mask) - 1;  // keep one active
  if (max_freezable <= 0) return false;

  int m_sum = 0;
  double running = eps_sq + consumed;
  for (int k : order) {
    if (m_sum >= max_freezable) break;
    const double delta = report.at(k).delta_eps_sq;
    if (running + delta > lambda_sq) break;
    running += delta;
    ++m_sum;
  }

  int chosen = m_sum;
  double eps_after = running;
  bool probed = false;
  if (binary_search && m_sum >= 2) {
    // Probe feasibility of freezing the first m candidates by re-solving the
    // reduced system on the remaining active set.
    std::vector<int> global_to_local(report.entries.size(), -1);
    for (int a = 0; a < bundle.active_count(); ++a) {
      global_to_local[bundle.active_indices[a]] = a;
    }
    auto probe = [&](int m) {
      std::vector<int> keep;
      for (int a = 0; a < bundle.active_count(); ++a) {
        const int k = bundle.active_indices[a];
        if (!mask[k]) continue;  // frozen earlier this step
        const auto first = order.begin();
        if (std::find(first, first + m, k) != first + m) continue;
        keep.push_back(a);
      }
      return detail::probe_lite(bundle, solver_policy, var_h, keep);
    };
    int lo = 0, hi = std::min<int>(max_freezable, static_cast<int>(order.size()));
    double lite_lo = eps_sq;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      const double lite_mid = probe(mid);
      if (lite_mid <= lambda_sq) {
        lo = mid;
        lite_lo = lite_mid;
      } else {
        hi = mid - 1;
      }
    }
    chosen = lo;
    eps_after = lite_lo;
    probed = true;
  }

  if (chosen <= 0) return false;
  ControllerEvent event;
  event.action = chosen == 1 ? ControllerEvent::Action::Freeze
                             : ControllerEvent::Action::CollectiveFreeze;
  for (int i = 0; i < chosen; ++i) {
    mask[order[i]] = 0;
    event.indices.push_back(order[i]);
    event.delta_values.push_back(report.at(order[i]).delta_eps_sq);
  }
  event.eps_sq_before = eps_sq;
  event.eps_sq_after = eps_after;
  if (probed) event.note = "binary-search refinement";
  events.push_back(std::move(event));
  return true;
}

/// Reactivate frozen parameters in descending importance, subtracting their
/// estimated contributions from the current LITE until it falls below the
/// threshold or candidates run out.
inline bool collective_unfreeze(std::vector<std::uint8_t>& mask, const ImportanceReport& report,
                                const std::vector<int>& suppressed, double eps_sq,
                                double lambda_sq, double consumed,
                                std::vector<ControllerEvent>& events) {
  double running = eps_sq + consumed;
  ControllerEvent event;
  event.eps_sq_before = eps_sq;
  for (int candidate : report.descending_frozen()) {
    if (running <= lambda_sq) break;
    if (mask[candidate]) continue;
    if (std::find(suppressed.begin(), suppressed.end(), candidate) != suppressed.end()) {
      continue;
    }
    mask[candidate] = 1;
    event.indices.push_back(candidate);
    event.delta_values.push_back(report.at(candidate).delta_eps_sq);
    running = std::max(0.0, running - report.at(candidate).delta_eps_sq);
  }
  if (event.indices.empty()) {
    event.action = ControllerEvent::Action::NoOp;
    event.eps_sq_after = eps_sq;
    event.note = "no unfreeze candidates (saturated)";
    events.push_back(std::move(event));
    return false;
  }
  event.action = event.indices.size() == 1 ? ControllerEvent::Action::Unfreeze
                                           : ControllerEvent::Action::CollectiveUnfreeze;
  event.eps_sq_after = running;
  if (running > lambda_sq) event.note = "candidates exhausted above threshold";
  events.push_back(std::move(event));
  return true;
}

/// One controller invocation: (1) the squared LITE is compared against the
/// threshold, (2) the significance filter marks non-relevant parameters and
/// freezes the least significant active one among them, (3) above threshold
/// parameters are unfrozen, (4) below threshold parameters are frozen.
/// Mask changes are returned to the caller and apply between estimator
/// refreshes; the current step's velocities are untouched.
inline ControllerOutcome controller_step(const ParameterState& params,
                                         const AdaptivePolicy& policy,
                                         const SolverPolicy& solver_policy,
                                         const EstimateBundle& bundle,
                                         const SolveResult& solve, double eps_sq,
                                         double var_h) {
  policy.validate();
  ControllerOutcome outcome;
  outcome.new_active = params.active;
  const double lambda_sq = policy.resolve_lambda_sq(var_h);

  const ImportanceReport report =
      build_importance_report(bundle, solve, policy, solver_policy, eps_sq, var_h);
  outcome.negative_clamped = report.negative_clamped;

  const std::vector<int> suppressed = significance_filter(report, eps_sq, policy.eta_sig_sq);
  outcome.suppressed_count = static_cast<int>(suppressed.size());

  double consumed = 0.0;
  if (!suppressed.empty()) {
    // Freeze the least significant active parameter among the non-relevant.
    int least = -1;
    for (int k : suppressed) {
      if (!outcome.new_active[k]) continue;
      if (least < 0 || report.at(k).delta_eps_sq < report.at(least).delta_eps_sq) least = k;
    }
    if (least >= 0 && detail::active_count(outcome.new_active) > 1) {
      outcome.new_active[least] = 0;
      consumed = report.at(least).delta_eps_sq;
      ControllerEvent event;
      event.action = ControllerEvent::Action::Suppress;
      event.indices = {least};
      event.delta_values = {consumed};
      event.eps_sq_before = eps_sq;
      event.eps_sq_after = eps_sq + consumed;
      event.note = "non-relevant: " + std::to_string(suppressed.size());
      outcome.events.push_back(std::move(event));
    }
  }

  if (eps_sq > lambda_sq) {
    if (policy.collective_updates) {
      collective_unfreeze(outcome.new_active, report, suppressed, eps_sq, lambda_sq, consumed,
                          outcome.events);
    } else {
      try_unfreeze_one(outcome.new_active, report, suppressed, eps_sq, outcome.events);
    }
  } else {
    if (policy.collective_updates) {
      collective_freeze(outcome.new_active, report, bundle, solver_policy, eps_sq, lambda_sq,
                        var_h, consumed, policy.binary_search_refinement, outcome.events);
    } else {
      try_freeze_one(outcome.new_active, report, eps_sq, lambda_sq, consumed, outcome.events);
    }
  }

  outcome.changed = outcome.new_active != params.active;
  return outcome;
}

}  // namespace atvmc
