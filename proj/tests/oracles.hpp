// Test-side reference implementations. Everything here recomputes results
// from first principles (dense linear algebra, finite differences, from-
// scratch solves) and stays independent of the library code paths it checks.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "atvmc/ansatz.hpp"
#include "atvmc/rng.hpp"
#include "atvmc/spin_chain.hpp"
#include "atvmc/types.hpp"

namespace oracle {

using atvmc::Complex;
using atvmc::MatrixXc;
using atvmc::VectorXc;
using atvmc::VectorXr;

// Dense TFI Hamiltonian built by direct bit arithmetic (spin i = bit i,
// +1 <-> bit 0), not via the library's connection list.
inline MatrixXc dense_hamiltonian(int n, double j, double h) {
  const int dim = 1 << n;
  MatrixXc ham = MatrixXc::Zero(dim, dim);
  for (int x = 0; x < dim; ++x) {
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      const int si = ((x >> i) & 1) ? -1 : 1;
      const int sj = ((x >> ((i + 1) % n)) & 1) ? -1 : 1;
      diag += si * sj;
    }
    ham(x, x) = -j * diag;
    for (int i = 0; i < n; ++i) ham(x ^ (1 << i), x) += -h;
  }
  return ham;
}

// Normalized wave-function vector from per-configuration log-amplitudes.
inline VectorXc dense_state(const atvmc::Ansatz& ansatz, const VectorXc& params) {
  const int n = ansatz.sites();
  const int dim = 1 << n;
  VectorXc log_amp(dim);
  double max_re = -1e300;
  for (int x = 0; x < dim; ++x) {
    log_amp[x] = ansatz.log_psi(atvmc::SpinConfiguration::from_bits(x, n), params);
    max_re = std::max(max_re, log_amp[x].real());
  }
  VectorXc psi(dim);
  for (int x = 0; x < dim; ++x) psi[x] = std::exp(log_amp[x] - max_re);
  return psi / psi.norm();
}

inline Complex expectation(const MatrixXc& op, const VectorXc& psi) {
  return psi.dot(op * psi);
}

inline double sigma_x(const VectorXc& psi, int n) {
  Complex total = 0.0;
  for (int x = 0; x < psi.size(); ++x) {
    for (int i = 0; i < n; ++i) total += std::conj(psi[x ^ (1 << i)]) * psi[x];
  }
  return total.real() / n;
}

// Central finite difference of ln psi along a complex direction.
inline Complex fd_derivative(const atvmc::Ansatz& ansatz, const atvmc::SpinConfiguration& config,
                             const VectorXc& params, int k, Complex direction, double step) {
  VectorXc plus = params, minus = params;
  plus[k] += direction * step;
  minus[k] -= direction * step;
  return (ansatz.log_psi(config, plus) - ansatz.log_psi(config, minus)) /
         (2.0 * step * direction);
}

// Exact S, F, energy moments by direct summation over all configurations,
// using only the ansatz log_psi/log_derivatives and the dense Hamiltonian.
struct DenseEstimates {
  MatrixXc s;
  VectorXc f;
  Complex energy;
  double variance;
  double sigma_x;
};

inline DenseEstimates dense_estimates(const atvmc::Ansatz& ansatz, const VectorXc& params,
                                      const MatrixXc& ham) {
  const int n = ansatz.sites();
  const int dim = 1 << n;
  const int p = ansatz.parameter_count();
  VectorXc psi = dense_state(ansatz, params);
  VectorXr prob(dim);
  for (int x = 0; x < dim; ++x) prob[x] = std::norm(psi[x]);

  VectorXc hpsi = ham * psi;
  MatrixXc all_derivs(p, dim);
  VectorXc eloc(dim);
  for (int x = 0; x < dim; ++x) {
    all_derivs.col(x) =
        ansatz.log_derivatives(atvmc::SpinConfiguration::from_bits(x, n), params);
    eloc[x] = (prob[x] > 0.0) ? hpsi[x] / psi[x] : Complex(0.0, 0.0);
  }

  VectorXc mean_o = VectorXc::Zero(p);
  Complex mean_e = 0.0;
  double mean_abs_e2 = 0.0;
  for (int x = 0; x < dim; ++x) {
    mean_o += prob[x] * all_derivs.col(x);
    mean_e += prob[x] * eloc[x];
    mean_abs_e2 += prob[x] * std::norm(eloc[x]);
  }
  MatrixXc s = MatrixXc::Zero(p, p);
  VectorXc f = VectorXc::Zero(p);
  for (int x = 0; x < dim; ++x) {
    const VectorXc centered = all_derivs.col(x) - mean_o;
    s += prob[x] * centered.conjugate() * centered.transpose();
    f += prob[x] * centered.conjugate() * (eloc[x] - mean_e);
  }
  DenseEstimates out;
  out.s = s;
  out.f = f;
  out.energy = mean_e;
  out.variance = mean_abs_e2 - std::norm(mean_e);
  out.sigma_x = sigma_x(psi, n);
  return out;
}

// Random Hermitian positive-definite system for block-identity checks.
struct RandomSystem {
  MatrixXc s;
  VectorXc f;
  double var_h;
};

inline RandomSystem random_hpd_system(int p, atvmc::RandomStream& rng, double ridge = 0.05) {
  MatrixXc a(p, p);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) a(r, c) = Complex(rng.next_normal(), rng.next_normal());
  }
  RandomSystem sys;
  sys.s = a * a.adjoint() / p + ridge * MatrixXc::Identity(p, p);
  sys.f.resize(p);
  for (int r = 0; r < p; ++r) sys.f[r] = Complex(rng.next_normal(), rng.next_normal());
  // Headroom above F^dag S^-1 F keeps the reference LITE positive.
  sys.var_h = (sys.f.dot(sys.s.ldlt().solve(sys.f))).real() * (1.0 + rng.next_uniform()) + 0.5;
  return sys;
}

// epsilon^2 from a from-scratch exact solve restricted to `keep`.
inline double lite_of_subset(const RandomSystem& sys, const std::vector<int>& keep) {
  const int m = static_cast<int>(keep.size());
  MatrixXc s(m, m);
  VectorXc f(m);
  for (int r = 0; r < m; ++r) {
    f[r] = sys.f[keep[r]];
    for (int c = 0; c < m; ++c) s(r, c) = sys.s(keep[r], keep[c]);
  }
  const Complex quad = f.dot(s.ldlt().solve(f));
  return sys.var_h - quad.real();
}

}  // namespace oracle
