#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "atvmc/errors.hpp"
#include "atvmc/log_cosh.hpp"
#include "atvmc/parameters.hpp"
#include "atvmc/spin_chain.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

/// Log-derivatives and all single-flip log-ratios at one configuration;
/// everything an estimator needs per sample.
struct LocalEvaluation {
  VectorXc derivatives;  // O_k = d ln psi / d alpha_k, all P parameters
  VectorXc flip_ratios;  // ln psi(flip i) - ln psi, one per site
};

class Ansatz;

/// Chain-local evaluation state with the usual VMC look-up tables: a flip
/// proposal is priced without re-deriving the wave function from scratch, and
/// accepted flips update the tables incrementally.
class LocalState {
 public:
  virtual ~LocalState() = default;
  virtual const SpinConfiguration& config() const = 0;
  virtual Complex ratio_flip(int site) const = 0;
  virtual void apply_flip(int site) = 0;
  virtual void evaluate(LocalEvaluation& out) const = 0;
};

/// Variational wave function interface. Evaluation is a pure function of
/// (configuration, parameter values); parameter snapshots may be shared
/// read-only across sampler workers.
///
/// Parameters are holomorphic complex degrees of freedom: log_derivatives
/// returns d ln psi / d alpha_k without any real/imaginary splitting, and
/// derivatives are produced for all parameters, active or frozen (the
/// controller needs frozen-parameter entries).
class Ansatz {
 public:
  virtual ~Ansatz() = default;

  virtual int sites() const = 0;
  virtual int parameter_count() const = 0;
  virtual std::vector<std::string> parameter_labels() const = 0;
  virtual std::string kind() const = 0;
  virtual bool translation_invariant() const { return true; }

  virtual Complex log_psi(const SpinConfiguration& config, const VectorXc& params) const = 0;
  virtual VectorXc log_derivatives(const SpinConfiguration& config,
                                   const VectorXc& params) const = 0;
  virtual Complex log_psi_ratio_flip(const SpinConfiguration& config, int site,
                                     const VectorXc& params) const = 0;

  virtual std::unique_ptr<LocalState> make_local_state(const SpinConfiguration& config,
                                                       const VectorXc& params) const = 0;

  /// Zero-initialized, fully active parameter state with this ansatz's labels.
  ParameterState make_parameter_state() const {
    ParameterState state;
    state.values = VectorXc::Zero(parameter_count());
    state.active.assign(parameter_count(), 1);
    state.labels = parameter_labels();
    return state;
  }

 protected:
  void check_inputs(const SpinConfiguration& config, const VectorXc& params) const {
    if (config.size() != sites()) {
      throw ShapeError("configuration has " + std::to_string(config.size()) +
                       " sites, ansatz expects " + std::to_string(sites()));
    }
    if (params.size() != parameter_count()) {
      throw ShapeError("parameter vector has " + std::to_string(params.size()) +
                       " entries, ansatz expects " + std::to_string(parameter_count()));
    }
    for (Eigen::Index k = 0; k < params.size(); ++k) {
      if (!std::isfinite(params[k].real()) || !std::isfinite(params[k].imag())) {
        throw NumericDomainError("non-finite parameter value at index " + std::to_string(k));
      }
    }
  }

  void check_site(int site) const {
    if (site < 0 || site >= sites()) {
      throw std::out_of_range("flip site " + std::to_string(site) + " out of range");
    }
  }
};

// ---------------------------------------------------------------------------
// Spin-Jastrow ansatz
// ---------------------------------------------------------------------------

/// Translation- and reflection-symmetric spin-Jastrow wave function,
///   ln psi(sigma) = sum_d alpha_d C_d(sigma),
/// where C_d is the sum of sigma_i sigma_j over all site pairs at periodic
/// distance d. Independent parameters: d = 1 .. floor(N/2). For even N the
/// pair set at d = N/2 contains each pair exactly once (N/2 pairs); shorter
/// distances contain N pairs.
class JastrowAnsatz final : public Ansatz {
 public:
  explicit JastrowAnsatz(int n_sites) : n_(n_sites) {
    if (n_sites < 2) throw ShapeError("JastrowAnsatz: need at least 2 sites");
  }

  int sites() const override { return n_; }
  int parameter_count() const override { return n_ / 2; }
  std::string kind() const override { return "jastrow"; }

  std::vector<std::string> parameter_labels() const override {
    std::vector<std::string> labels;
    for (int d = 1; d <= parameter_count(); ++d) {
      labels.push_back("jastrow-distance-" + std::to_string(d));
    }
    return labels;
  }

  /// C_d(sigma) for d = 1 .. floor(N/2).
  VectorXr pair_sums(const SpinConfiguration& config) const {
    VectorXr sums = VectorXr::Zero(parameter_count());
    for (int d = 1; d <= parameter_count(); ++d) {
      const int pairs = (2 * d == n_) ? n_ / 2 : n_;
      long long sum = 0;
      for (int i = 0; i < pairs; ++i) {
        sum += config.spins[i] * config.spins[(i + d) % n_];
      }
      sums[d - 1] = static_cast<double>(sum);
    }
    return sums;
  }

  Complex log_psi(const SpinConfiguration& config, const VectorXc& params) const override {
    check_inputs(config, params);
    const VectorXr sums = pair_sums(config);
    Complex total = 0.0;
    for (int k = 0; k < parameter_count(); ++k) total += params[k] * sums[k];
    return total;
  }

  VectorXc log_derivatives(const SpinConfiguration& config,
                           const VectorXc& params) const override {
    check_inputs(config, params);
    return pair_sums(config).cast<Complex>();
  }

  Complex log_psi_ratio_flip(const SpinConfiguration& config, int site,
                             const VectorXc& params) const override {
    check_inputs(config, params);
    check_site(site);
    return ratio_flip_impl(config, site, params);
  }

  std::unique_ptr<LocalState> make_local_state(const SpinConfiguration& config,
                                               const VectorXc& params) const override;

 private:
  friend class JastrowLocalState;

  Complex ratio_flip_impl(const SpinConfiguration& config, int site,
                          const VectorXc& params) const {
    // Flipping sigma_k changes C_d by -2 sigma_k (sigma_{k-d} + sigma_{k+d}),
    // except at d = N/2 where the single pair {k, k+N/2} flips once.
    Complex delta = 0.0;
    const double sk = config.spins[site];
    for (int d = 1; d <= parameter_count(); ++d) {
      double neighbor_sum;
      if (2 * d == n_) {
        neighbor_sum = config.spins[(site + d) % n_];
      } else {
        neighbor_sum = config.spins[(site + d) % n_] + config.spins[(site - d + n_) % n_];
      }
      delta += params[d - 1] * (-2.0 * sk * neighbor_sum);
    }
    return delta;
  }

  int n_;
};

class JastrowLocalState final : public LocalState {
 public:
  JastrowLocalState(const JastrowAnsatz& ansatz, SpinConfiguration config, VectorXc params)
      : ansatz_(ansatz), config_(std::move(config)), params_(std::move(params)) {}

  const SpinConfiguration& config() const override { return config_; }

  Complex ratio_flip(int site) const override {
    return ansatz_.ratio_flip_impl(config_, site, params_);
  }

  void apply_flip(int site) override { config_.spins[site] = -config_.spins[site]; }

  void evaluate(LocalEvaluation& out) const override {
    out.derivatives = ansatz_.pair_sums(config_).cast<Complex>();
    out.flip_ratios.resize(ansatz_.sites());
    for (int i = 0; i < ansatz_.sites(); ++i) {
      out.flip_ratios[i] = ansatz_.ratio_flip_impl(config_, i, params_);
    }
  }

 private:
  const JastrowAnsatz& ansatz_;
  SpinConfiguration config_;
  VectorXc params_;
};

inline std::unique_ptr<LocalState> JastrowAnsatz::make_local_state(
    const SpinConfiguration& config, const VectorXc& params) const {
  check_inputs(config, params);
  return std::make_unique<JastrowLocalState>(*this, config, params);
}

// ---------------------------------------------------------------------------
// Translation-invariant restricted Boltzmann machine
// ---------------------------------------------------------------------------

/// Symmetric RBM wave function,
///   ln psi(sigma) = a sum_i sigma_i + sum_{f,s} ln cosh(theta_{f,s}),
///   theta_{f,s}  = b_f + sum_i W_{f,i} sigma_{(i+s) mod N},
/// with d weight filters of length N tied across all N cyclic shifts s.
/// Parameter layout: [a, b_1..b_d, W_1(0..N-1), ..., W_d(0..N-1)], giving
/// P = N d + d + 1 (exactly one visible bias survives the symmetry tying).
class SymmetricRbmAnsatz final : public Ansatz {
 public:
  SymmetricRbmAnsatz(int n_sites, int density) : n_(n_sites), d_(density) {
    if (n_sites < 2) throw ShapeError("SymmetricRbmAnsatz: need at least 2 sites");
    if (density < 1) throw ShapeError("SymmetricRbmAnsatz: density must be positive");
  }

  int sites() const override { return n_; }
  int density() const { return d_; }
  int parameter_count() const override { return n_ * d_ + d_ + 1; }
  std::string kind() const override { return "rbm"; }

  std::vector<std::string> parameter_labels() const override {
    std::vector<std::string> labels;
    labels.push_back("rbm-visible-bias");
    for (int f = 0; f < d_; ++f) labels.push_back("rbm-hidden-bias-" + std::to_string(f));
    for (int f = 0; f < d_; ++f) {
      for (int i = 0; i < n_; ++i) {
        labels.push_back("rbm-weight-" + std::to_string(f) + "-" + std::to_string(i));
      }
    }
    return labels;
  }

  int weight_index(int filter, int offset) const { return 1 + d_ + filter * n_ + offset; }

  Complex log_psi(const SpinConfiguration& config, const VectorXc& params) const override {
    check_inputs(config, params);
    MatrixXc theta;
    compute_theta(config, params, theta);
    long long spin_sum = 0;
    for (int s : config.spins) spin_sum += s;
    Complex total = params[0] * static_cast<double>(spin_sum);
    for (int f = 0; f < d_; ++f) {
      for (int s = 0; s < n_; ++s) total += log_cosh(theta(f, s));
    }
    return total;
  }

  VectorXc log_derivatives(const SpinConfiguration& config,
                           const VectorXc& params) const override {
    check_inputs(config, params);
    MatrixXc theta;
    compute_theta(config, params, theta);
    VectorXc derivs(parameter_count());
    derivatives_from_theta(config, theta, derivs);
    return derivs;
  }

  Complex log_psi_ratio_flip(const SpinConfiguration& config, int site,
                             const VectorXc& params) const override {
    check_inputs(config, params);
    check_site(site);
    MatrixXc theta;
    compute_theta(config, params, theta);
    return ratio_from_theta(config, params, theta, site);
  }

  std::unique_ptr<LocalState> make_local_state(const SpinConfiguration& config,
                                               const VectorXc& params) const override;

 private:
  friend class RbmLocalState;

  void compute_theta(const SpinConfiguration& config, const VectorXc& params,
                     MatrixXc& theta) const {
    theta.resize(d_, n_);
    for (int f = 0; f < d_; ++f) {
      for (int s = 0; s < n_; ++s) {
        Complex t = params[1 + f];
        for (int i = 0; i < n_; ++i) {
          t += params[weight_index(f, i)] * static_cast<double>(config.spins[(i + s) % n_]);
        }
        theta(f, s) = t;
      }
    }
  }

  void derivatives_from_theta(const SpinConfiguration& config, const MatrixXc& theta,
                              VectorXc& derivs) const {
    derivs.resize(parameter_count());
    long long spin_sum = 0;
    for (int s : config.spins) spin_sum += s;
    derivs[0] = static_cast<double>(spin_sum);
    MatrixXc tanh_theta(d_, n_);
    for (int f = 0; f < d_; ++f) {
      Complex bias_sum = 0.0;
      for (int s = 0; s < n_; ++s) {
        tanh_theta(f, s) = tanh_safe(theta(f, s));
        bias_sum += tanh_theta(f, s);
      }
      derivs[1 + f] = bias_sum;
    }
    for (int f = 0; f < d_; ++f) {
      for (int i = 0; i < n_; ++i) {
        Complex w_sum = 0.0;
        for (int s = 0; s < n_; ++s) {
          w_sum += tanh_theta(f, s) * static_cast<double>(config.spins[(i + s) % n_]);
        }
        derivs[weight_index(f, i)] = w_sum;
      }
    }
  }

  Complex ratio_from_theta(const SpinConfiguration& config, const VectorXc& params,
                           const MatrixXc& theta, int site) const {
    const double sk = config.spins[site];
    Complex delta = -2.0 * params[0] * sk;
    for (int f = 0; f < d_; ++f) {
      for (int s = 0; s < n_; ++s) {
        const Complex shift =
            -2.0 * sk * params[weight_index(f, (site - s + n_) % n_)];
        delta += log_cosh(theta(f, s) + shift) - log_cosh(theta(f, s));
      }
    }
    return delta;
  }

  int n_;
  int d_;
};

class RbmLocalState final : public LocalState {
 public:
  RbmLocalState(const SymmetricRbmAnsatz& ansatz, SpinConfiguration config, VectorXc params)
      : ansatz_(ansatz), config_(std::move(config)), params_(std::move(params)) {
    ansatz_.compute_theta(config_, params_, theta_);
  }

  const SpinConfiguration& config() const override { return config_; }

  Complex ratio_flip(int site) const override {
    return ansatz_.ratio_from_theta(config_, params_, theta_, site);
  }

  void apply_flip(int site) override {
    const double sk = config_.spins[site];
    const int n = ansatz_.sites();
    for (int f = 0; f < ansatz_.density(); ++f) {
      for (int s = 0; s < n; ++s) {
        theta_(f, s) += -2.0 * sk * params_[ansatz_.weight_index(f, (site - s + n) % n)];
      }
    }
    config_.spins[site] = -config_.spins[site];
  }

  void evaluate(LocalEvaluation& out) const override {
    ansatz_.derivatives_from_theta(config_, theta_, out.derivatives);
    out.flip_ratios.resize(ansatz_.sites());
    for (int i = 0; i < ansatz_.sites(); ++i) {
      out.flip_ratios[i] = ansatz_.ratio_from_theta(config_, params_, theta_, i);
    }
  }

 private:
  const SymmetricRbmAnsatz& ansatz_;
  SpinConfiguration config_;
  VectorXc params_;
  MatrixXc theta_;
};

inline std::unique_ptr<LocalState> SymmetricRbmAnsatz::make_local_state(
    const SpinConfiguration& config, const VectorXc& params) const {
  check_inputs(config, params);
  return std::make_unique<RbmLocalState>(*this, config, params);
}

}  // namespace atvmc
