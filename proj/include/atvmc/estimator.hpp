#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "atvmc/ansatz.hpp"
#include "atvmc/errors.hpp"
#include "atvmc/parameters.hpp"
#include "atvmc/rng.hpp"
#include "atvmc/spin_chain.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

/// Metropolis sampling layout. One sweep proposes one flip per site; kept
/// samples are separated by one sweep. All chain randomness derives from
/// `seed` through per-chain counter streams.
struct SamplerConfig {
  long n_samples = 70000;
  long n_burn = 100;  // sweeps
  int n_chains = 8;
  std::uint64_t seed = 12345;

  void validate() const {
    if (n_samples <= 0) throw ConfigError("sampler: n_samples must be positive");
    if (n_chains < 1) throw ConfigError("sampler: n_chains must be >= 1");
    if (n_burn < 0) throw ConfigError("sampler: n_burn must be >= 0");
  }
};

/// Statistical bundle at one parameter point. The quantum geometric tensor is
/// held in active scope: the active-active block, the full force vector, the
/// diagonal entry for every frozen parameter, and the frozen-active cross
/// vectors. Frozen-frozen off-diagonal entries are never computed.
struct EstimateBundle {
  enum class Mode { ExactSum, Metropolis };

  Mode mode = Mode::ExactSum;
  long sample_count = 0;

  Complex energy_mean{0.0, 0.0};
  double energy_variance = 0.0;      // clamped at zero
  double energy_variance_raw = 0.0;  // pre-clamp value
  double sigma_x = 0.0;
  double se_energy = 0.0;   // Metropolis only (chain spread)
  double se_sigma_x = 0.0;  // Metropolis only
  double acceptance_rate = 1.0;  // sampling-phase fraction, Metropolis only

  std::vector<int> active_indices;
  std::vector<int> frozen_indices;

  MatrixXc s_active;   // A x A, Hermitian
  VectorXc force;      // length P
  VectorXr s_diag;     // length P
  MatrixXc cross;      // A x (P - A); column l is V-bar for frozen index l

  // Per-chain force estimates (P x n_chains) for signal-to-noise filtering;
  // empty in exact-sum mode.
  MatrixXc chain_forces;
  VectorXr chain_weights;

  int parameter_count() const { return static_cast<int>(force.size()); }
  int active_count() const { return static_cast<int>(active_indices.size()); }

  VectorXc force_active() const {
    VectorXc f(active_count());
    for (int a = 0; a < active_count(); ++a) f[a] = force[active_indices[a]];
    return f;
  }

  /// Correlations between frozen parameter l (local column index) and the
  /// active set.
  VectorXc v_bar(int frozen_local) const { return cross.col(frozen_local); }

  MatrixXc chain_forces_active() const {
    MatrixXc out(active_count(), chain_forces.cols());
    for (int a = 0; a < active_count(); ++a) out.row(a) = chain_forces.row(active_indices[a]);
    return out;
  }
};

/// Local energy of the TFI chain:
///   E(x) = E_diag(x) - h sum_i exp(ln psi(flip_i x) - ln psi(x)).
inline Complex local_energy(const SpinConfiguration& config, const Ansatz& ansatz,
                            const VectorXc& params, const TfiHamiltonian& hamiltonian) {
  require_matching_shape(config, hamiltonian);
  Complex offdiag = 0.0;
  for (int i = 0; i < hamiltonian.sites; ++i) {
    const Complex ratio = std::exp(ansatz.log_psi_ratio_flip(config, i, params));
    if (!std::isfinite(ratio.real()) || !std::isfinite(ratio.imag())) {
      throw NumericDomainError("non-finite flip ratio at site " + std::to_string(i), i);
    }
    offdiag += ratio;
  }
  return diagonal_energy(config, hamiltonian) - hamiltonian.field_h * offdiag;
}

namespace detail {

/// Single-pass moment accumulator over weighted samples. Matrix moments are
/// accumulated by batched rank-B updates; scalar energy moments use extended
/// precision so variances survive the large cancellations near convergence.
class MomentAccumulator {
 public:
  MomentAccumulator(int p, std::vector<int> active)
      : p_(p), active_(std::move(active)), batch_capacity_(64) {
    const int a = static_cast<int>(active_.size());
    g_ = MatrixXc::Zero(a, p_);
    m1_o_ = VectorXc::Zero(p_);
    m_abs_o2_ = VectorXr::Zero(p_);
    m_oce_ = VectorXc::Zero(p_);
    o_batch_.resize(p_, batch_capacity_);
    w_batch_.resize(batch_capacity_);
    e_batch_.resize(batch_capacity_);
  }

  void add(const VectorXc& derivs, Complex e_loc, Complex sigma_x_sum, double weight) {
    o_batch_.col(batch_fill_) = derivs;
    w_batch_[batch_fill_] = weight;
    e_batch_[batch_fill_] = e_loc;
    ++batch_fill_;
    weight_sum_ += weight;
    m_e_re_ += static_cast<long double>(weight) * e_loc.real();
    m_e_im_ += static_cast<long double>(weight) * e_loc.imag();
    m_abs_e2_ += static_cast<long double>(weight) * std::norm(e_loc);
    m_sx_re_ += static_cast<long double>(weight) * sigma_x_sum.real();
    if (batch_fill_ == batch_capacity_) flush();
  }

  void flush() {
    if (batch_fill_ == 0) return;
    const auto o = o_batch_.leftCols(batch_fill_);
    const auto w = w_batch_.head(batch_fill_);
    const auto e = e_batch_.head(batch_fill_);
    MatrixXc o_active(active_.size(), batch_fill_);
    for (std::size_t a = 0; a < active_.size(); ++a) o_active.row(a) = o.row(active_[a]);
    g_.noalias() += (o_active.conjugate() * w.asDiagonal()) * o.transpose();
    m1_o_.noalias() += o * w.cast<Complex>();
    m_abs_o2_.noalias() += o.cwiseAbs2() * w;
    m_oce_.noalias() += o.conjugate() * (w.cast<Complex>().cwiseProduct(e));
    batch_fill_ = 0;
  }

  double weight_sum() const { return static_cast<double>(weight_sum_); }

  /// Normalized first and second moments.
  struct Moments {
    MatrixXc g;        // <O_a^* O_k> for active rows a, all columns k
    VectorXc m1_o;     // <O_k>
    VectorXr m_abs_o2; // <|O_k|^2>
    VectorXc m_oce;    // <O_k^* E>
    Complex m_e;
    double m_abs_e2;
    double m_sx;
    double weight;
  };

  Moments finalize() {
    flush();
    if (weight_sum_ <= 0.0L) throw NumericDomainError("estimator: zero total weight");
    const double z = static_cast<double>(weight_sum_);
    Moments m;
    m.g = g_ / z;
    m.m1_o = m1_o_ / z;
    m.m_abs_o2 = m_abs_o2_ / z;
    m.m_oce = m_oce_ / z;
    m.m_e = Complex(static_cast<double>(m_e_re_ / weight_sum_),
                    static_cast<double>(m_e_im_ / weight_sum_));
    m.m_abs_e2 = static_cast<double>(m_abs_e2_ / weight_sum_);
    m.m_sx = static_cast<double>(m_sx_re_ / weight_sum_);
    m.weight = z;
    return m;
  }

 private:
  int p_;
  std::vector<int> active_;
  int batch_capacity_;
  int batch_fill_ = 0;
  MatrixXc o_batch_;
  VectorXr w_batch_;
  VectorXc e_batch_;

  MatrixXc g_;
  VectorXc m1_o_;
  VectorXr m_abs_o2_;
  VectorXc m_oce_;
  long double weight_sum_ = 0.0L;
  long double m_e_re_ = 0.0L, m_e_im_ = 0.0L;
  long double m_abs_e2_ = 0.0L;
  long double m_sx_re_ = 0.0L;
};

/// Covariance assembly shared by both estimate modes.
inline void fill_bundle_from_moments(const MomentAccumulator::Moments& m,
                                     const std::vector<int>& active,
                                     const std::vector<int>& frozen, int n_sites,
                                     EstimateBundle& bundle) {
  const int p = static_cast<int>(m.m1_o.size());
  const int a_count = static_cast<int>(active.size());
  const int f_count = static_cast<int>(frozen.size());

  bundle.active_indices = active;
  bundle.frozen_indices = frozen;
  bundle.force.resize(p);
  for (int k = 0; k < p; ++k) {
    bundle.force[k] = m.m_oce[k] - std::conj(m.m1_o[k]) * m.m_e;
  }
  bundle.s_diag.resize(p);
  for (int k = 0; k < p; ++k) {
    bundle.s_diag[k] = std::max(0.0, m.m_abs_o2[k] - std::norm(m.m1_o[k]));
  }

  bundle.s_active.resize(a_count, a_count);
  for (int r = 0; r < a_count; ++r) {
    for (int c = 0; c < a_count; ++c) {
      bundle.s_active(r, c) =
          m.g(r, active[c]) - std::conj(m.m1_o[active[r]]) * m.m1_o[active[c]];
    }
  }
  // Mirror to make Hermiticity exact; keep the diagonal real.
  bundle.s_active = 0.5 * (bundle.s_active + bundle.s_active.adjoint()).eval();
  for (int r = 0; r < a_count; ++r) bundle.s_active(r, r) = Complex(bundle.s_active(r, r).real(), 0.0);

  bundle.cross.resize(a_count, f_count);
  for (int c = 0; c < f_count; ++c) {
    for (int r = 0; r < a_count; ++r) {
      bundle.cross(r, c) =
          m.g(r, frozen[c]) - std::conj(m.m1_o[active[r]]) * m.m1_o[frozen[c]];
    }
  }

  bundle.energy_mean = m.m_e;
  bundle.energy_variance_raw = m.m_abs_e2 - std::norm(m.m_e);
  bundle.energy_variance = std::max(0.0, bundle.energy_variance_raw);
  bundle.sigma_x = m.m_sx / n_sites;
}

/// E_loc and the sigma_x estimator share the per-site flip ratios.
inline void local_terms(const LocalEvaluation& eval, const SpinConfiguration& config,
                        const TfiHamiltonian& hamiltonian, Complex& e_loc,
                        Complex& sigma_x_sum) {
  Complex sum_exp = 0.0;
  for (int i = 0; i < hamiltonian.sites; ++i) {
    const Complex ratio = std::exp(eval.flip_ratios[i]);
    if (!std::isfinite(ratio.real()) || !std::isfinite(ratio.imag())) {
      throw NumericDomainError("non-finite flip ratio at site " + std::to_string(i), i);
    }
    sum_exp += ratio;
  }
  sigma_x_sum = sum_exp;
  e_loc = diagonal_energy(config, hamiltonian) - hamiltonian.field_h * sum_exp;
}

/// Rotate an N-bit word left by r.
inline std::uint64_t rotate_bits(std::uint64_t x, int r, int n, std::uint64_t mask) {
  return ((x >> r) | (x << (n - r))) & mask;
}

/// Representatives of the translation classes of N-bit configurations,
/// weighted by orbit size. Valid whenever weight, derivatives and local
/// energy are all rotation invariant.
inline void translation_classes(int n, std::vector<std::uint64_t>& reps,
                                std::vector<double>& weights) {
  const std::uint64_t mask = (n == 64) ? ~0ULL : ((1ULL << n) - 1ULL);
  reps.clear();
  weights.clear();
  for (std::uint64_t x = 0; x <= mask; ++x) {
    int period = n;
    bool minimal = true;
    for (int r = 1; r < n; ++r) {
      const std::uint64_t y = rotate_bits(x, r, n, mask);
      if (y < x) {
        minimal = false;
        break;
      }
      if (y == x) {
        period = r;
        break;
      }
    }
    if (minimal) {
      reps.push_back(x);
      weights.push_back(static_cast<double>(period));
    }
  }
}

}  // namespace detail

/// Exact estimate: iterates all 2^N configurations weighted by |psi|^2.
/// Translation-invariant ansaetze are summed over translation classes, which
/// is algebraically identical and N times cheaper; set use_translation_classes
/// to false to force the plain enumeration.
inline EstimateBundle estimate_exact_sum(const Ansatz& ansatz, const ParameterState& params,
                                         const TfiHamiltonian& hamiltonian,
                                         int enumeration_cap = 14,
                                         bool use_translation_classes = true) {
  params.require_consistent();
  const int n = ansatz.sites();
  require_matching_shape(SpinConfiguration::from_bits(0, n), hamiltonian);
  if (n > enumeration_cap) {
    throw CapacityError("exact-sum estimate needs N <= " + std::to_string(enumeration_cap) +
                        ", got N = " + std::to_string(n));
  }

  std::vector<std::uint64_t> reps;
  std::vector<double> orbit_weights;
  if (use_translation_classes && ansatz.translation_invariant()) {
    detail::translation_classes(n, reps, orbit_weights);
  } else {
    const std::uint64_t count = 1ULL << n;
    reps.resize(count);
    orbit_weights.assign(count, 1.0);
    for (std::uint64_t x = 0; x < count; ++x) reps[x] = x;
  }

  // Pass 1: log-amplitudes, for overflow-safe |psi|^2 weights.
  std::vector<double> log_weight(reps.size());
  double max_log = -1e300;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto config = SpinConfiguration::from_bits(reps[i], n);
    log_weight[i] = 2.0 * ansatz.log_psi(config, params.values).real();
    max_log = std::max(max_log, log_weight[i]);
  }

  detail::MomentAccumulator acc(ansatz.parameter_count(), params.active_indices());
  LocalEvaluation eval;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const double weight = orbit_weights[i] * std::exp(log_weight[i] - max_log);
    if (weight == 0.0) continue;
    const auto config = SpinConfiguration::from_bits(reps[i], n);
    const auto state = ansatz.make_local_state(config, params.values);
    state->evaluate(eval);
    Complex e_loc, sx;
    detail::local_terms(eval, config, hamiltonian, e_loc, sx);
    acc.add(eval.derivatives, e_loc, sx, weight);
  }

  EstimateBundle bundle;
  bundle.mode = EstimateBundle::Mode::ExactSum;
  bundle.sample_count = static_cast<long>(1ULL << n);
  detail::fill_bundle_from_moments(acc.finalize(), params.active_indices(),
                                   params.frozen_indices(), n, bundle);
  return bundle;
}

/// Metropolis estimate: single-spin-flip chains with acceptance
/// min(1, exp(2 Re ratio)), merged by sample-weighted averaging in chain
/// order. Standard errors come from the spread of per-chain means.
inline EstimateBundle estimate_metropolis(const Ansatz& ansatz, const ParameterState& params,
                                          const TfiHamiltonian& hamiltonian,
                                          const SamplerConfig& sampler) {
  params.require_consistent();
  sampler.validate();
  const int n = ansatz.sites();
  require_matching_shape(SpinConfiguration::from_bits(0, n), hamiltonian);
  const int p = ansatz.parameter_count();
  const std::vector<int> active = params.active_indices();
  const std::vector<int> frozen = params.frozen_indices();

  std::vector<detail::MomentAccumulator::Moments> chain_moments;
  chain_moments.reserve(sampler.n_chains);

  const long base = sampler.n_samples / sampler.n_chains;
  const long remainder = sampler.n_samples % sampler.n_chains;
  long total_accepted = 0;
  long total_proposed = 0;

  for (int chain = 0; chain < sampler.n_chains; ++chain) {
    RandomStream stream(sampler.seed, static_cast<std::uint64_t>(chain) + 1);
    SpinConfiguration config;
    config.spins.resize(n);
    for (auto& s : config.spins) s = stream.next_spin();
    auto state = ansatz.make_local_state(config, params.values);

    auto sweep = [&](long& accepted) {
      for (int site = 0; site < n; ++site) {
        const Complex ratio = state->ratio_flip(site);
        const double log_accept = 2.0 * ratio.real();
        const double u = stream.next_uniform();
        if (log_accept >= 0.0 || u < std::exp(log_accept)) {
          state->apply_flip(site);
          ++accepted;
        }
      }
    };

    long burn_accepted = 0;
    for (long b = 0; b < sampler.n_burn; ++b) sweep(burn_accepted);
    if (sampler.n_burn > 0 && burn_accepted == 0) {
      throw SamplerStallError("chain " + std::to_string(chain) +
                              " accepted no move over the burn-in phase");
    }

    detail::MomentAccumulator acc(p, active);
    LocalEvaluation eval;
    const long n_keep = base + (chain < remainder ? 1 : 0);
    long sample_accepted = 0;
    for (long sample = 0; sample < n_keep; ++sample) {
      sweep(sample_accepted);
      state->evaluate(eval);
      Complex e_loc, sx;
      detail::local_terms(eval, state->config(), hamiltonian, e_loc, sx);
      acc.add(eval.derivatives, e_loc, sx, 1.0);
    }
    if (n_keep > 0 && sample_accepted == 0) {
      throw SamplerStallError("chain " + std::to_string(chain) +
                              " accepted no move over the sampling phase");
    }
    total_accepted += sample_accepted;
    total_proposed += n_keep * n;
    chain_moments.push_back(acc.finalize());
  }

  // Deterministic sample-weighted merge in chain order.
  const int a_count = static_cast<int>(active.size());
  detail::MomentAccumulator::Moments merged;
  merged.g = MatrixXc::Zero(a_count, p);
  merged.m1_o = VectorXc::Zero(p);
  merged.m_abs_o2 = VectorXr::Zero(p);
  merged.m_oce = VectorXc::Zero(p);
  merged.m_e = 0.0;
  merged.m_abs_e2 = 0.0;
  merged.m_sx = 0.0;
  merged.weight = 0.0;
  for (const auto& m : chain_moments) {
    merged.g += m.weight * m.g;
    merged.m1_o += m.weight * m.m1_o;
    merged.m_abs_o2 += m.weight * m.m_abs_o2;
    merged.m_oce += m.weight * m.m_oce;
    merged.m_e += m.weight * m.m_e;
    merged.m_abs_e2 += m.weight * m.m_abs_e2;
    merged.m_sx += m.weight * m.m_sx;
    merged.weight += m.weight;
  }
  merged.g /= merged.weight;
  merged.m1_o /= merged.weight;
  merged.m_abs_o2 /= merged.weight;
  merged.m_oce /= merged.weight;
  merged.m_e /= merged.weight;
  merged.m_abs_e2 /= merged.weight;
  merged.m_sx /= merged.weight;

  EstimateBundle bundle;
  bundle.mode = EstimateBundle::Mode::Metropolis;
  bundle.sample_count = sampler.n_samples;
  detail::fill_bundle_from_moments(merged, active, frozen, n, bundle);
  bundle.acceptance_rate =
      total_proposed > 0 ? static_cast<double>(total_accepted) / total_proposed : 1.0;

  bundle.chain_forces.resize(p, sampler.n_chains);
  bundle.chain_weights.resize(sampler.n_chains);
  for (int c = 0; c < sampler.n_chains; ++c) {
    const auto& m = chain_moments[c];
    for (int k = 0; k < p; ++k) {
      bundle.chain_forces(k, c) = m.m_oce[k] - std::conj(m.m1_o[k]) * m.m_e;
    }
    bundle.chain_weights[c] = m.weight;
  }
  if (sampler.n_chains > 1) {
    double var_e = 0.0, var_sx = 0.0;
    for (const auto& m : chain_moments) {
      var_e += std::norm(m.m_e - bundle.energy_mean);
      var_sx += (m.m_sx / n - bundle.sigma_x) * (m.m_sx / n - bundle.sigma_x);
    }
    const int c = sampler.n_chains;
    bundle.se_energy = std::sqrt(var_e / (c - 1) / c);
    bundle.se_sigma_x = std::sqrt(var_sx / (c - 1) / c);
  }
  return bundle;
}

}  // namespace atvmc
