#include <catch2/catch_amalgamated.hpp>

#include "atvmc/estimator.hpp"
#include "oracles.hpp"

using namespace atvmc;

namespace {

ParameterState random_state(const Ansatz& ansatz, RandomStream& rng, double scale) {
  ParameterState state = ansatz.make_parameter_state();
  for (int k = 0; k < state.size(); ++k) {
    state.values[k] = scale * Complex(rng.next_normal(), rng.next_normal());
  }
  return state;
}

}  // namespace

TEST_CASE("local energy reduces to the diagonal at h = 0") {
  JastrowAnsatz ansatz(6);
  TfiHamiltonian ham(6, 1.0, 0.0);
  RandomStream rng(1, 0);
  const auto state = random_state(ansatz, rng, 0.5);
  SpinConfiguration config(std::vector<int>{1, -1, 1, 1, -1, -1});
  const Complex e = local_energy(config, ansatz, state.values, ham);
  CHECK(e.real() == diagonal_energy(config, ham));
  CHECK(e.imag() == 0.0);
}

TEST_CASE("local energy of the uniform state is diag - h N") {
  JastrowAnsatz ansatz(4);
  TfiHamiltonian ham(4, 1.0, 2.0);
  const VectorXc zero = VectorXc::Zero(2);
  SpinConfiguration config(std::vector<int>{1, -1, -1, 1});
  const Complex e = local_energy(config, ansatz, zero, ham);
  CHECK(e.real() == Catch::Approx(diagonal_energy(config, ham) - 2.0 * 4).margin(1e-14));
}

TEST_CASE("local energy matches the dense state-vector ratio at N = 8") {
  const int n = 8;
  SymmetricRbmAnsatz ansatz(n, 2);
  TfiHamiltonian ham(n, 1.0, 1.4);
  RandomStream rng(2, 0);
  const auto state = random_state(ansatz, rng, 0.25);
  const auto dense_h = oracle::dense_hamiltonian(n, 1.0, 1.4);
  const VectorXc psi = oracle::dense_state(ansatz, state.values);
  const VectorXc hpsi = dense_h * psi;
  for (int trial = 0; trial < 12; ++trial) {
    const std::uint64_t bits = rng.next_u64() & 0xffULL;
    const auto config = SpinConfiguration::from_bits(bits, n);
    const Complex expected = hpsi[bits] / psi[bits];
    const Complex got = local_energy(config, ansatz, state.values, ham);
    CHECK(std::abs(got - expected) < 1e-9 * (1.0 + std::abs(expected)));
  }
}

TEST_CASE("exact-sum estimate of the uniform state: energy, variance, sigma_x") {
  const int n = 6;
  JastrowAnsatz ansatz(n);
  TfiHamiltonian ham(n, 1.0, 1.3);
  ParameterState state = ansatz.make_parameter_state();
  const auto bundle = estimate_exact_sum(ansatz, state, ham);

  CHECK(bundle.energy_mean.real() == Catch::Approx(-1.3 * n).margin(1e-12));
  CHECK(std::abs(bundle.energy_mean.imag()) < 1e-12);
  // sigma_x on the fully polarized (h -> infinity) state is exactly 1.
  CHECK(bundle.sigma_x == 1.0);

  const auto dense_h = oracle::dense_hamiltonian(n, 1.0, 1.3);
  const VectorXc psi = oracle::dense_state(ansatz, state.values);
  const Complex e = oracle::expectation(dense_h, psi);
  const Complex e2 = oracle::expectation(MatrixXc(dense_h * dense_h), psi);
  CHECK(bundle.energy_variance ==
        Catch::Approx((e2 - e * e).real()).margin(1e-9));
}

TEST_CASE("exact-sum S and F match the dense oracle, including scope blocks") {
  const int n = 6;
  SymmetricRbmAnsatz ansatz(n, 2);
  TfiHamiltonian ham(n, 1.0, 0.8);
  RandomStream rng(3, 0);
  ParameterState state = random_state(ansatz, rng, 0.2);
  // Freeze a few parameters so the scope blocks are exercised.
  state.active[1] = 0;
  state.active[4] = 0;
  state.active[9] = 0;

  const auto bundle = estimate_exact_sum(ansatz, state, ham);
  const auto dense_h = oracle::dense_hamiltonian(n, 1.0, 0.8);
  const auto ref = oracle::dense_estimates(ansatz, state.values, dense_h);

  const auto active = state.active_indices();
  const auto frozen = state.frozen_indices();
  REQUIRE(bundle.s_active.rows() == static_cast<int>(active.size()));
  REQUIRE(bundle.cross.cols() == static_cast<int>(frozen.size()));

  for (std::size_t r = 0; r < active.size(); ++r) {
    for (std::size_t c = 0; c < active.size(); ++c) {
      CHECK(std::abs(bundle.s_active(r, c) - ref.s(active[r], active[c])) < 1e-10);
    }
    for (std::size_t l = 0; l < frozen.size(); ++l) {
      CHECK(std::abs(bundle.cross(r, l) - ref.s(active[r], frozen[l])) < 1e-10);
    }
  }
  for (int k = 0; k < ansatz.parameter_count(); ++k) {
    CHECK(std::abs(bundle.force[k] - ref.f[k]) < 1e-10);
    CHECK(bundle.s_diag[k] == Catch::Approx(ref.s(k, k).real()).margin(1e-10));
  }
  CHECK(std::abs(bundle.energy_mean - ref.energy) < 1e-10);
  CHECK(bundle.energy_variance == Catch::Approx(ref.variance).margin(1e-9));
  CHECK(bundle.sigma_x == Catch::Approx(ref.sigma_x).margin(1e-10));
}

TEST_CASE("exact-sum S block is Hermitian and positive semi-definite") {
  const int n = 8;
  JastrowAnsatz ansatz(n);
  RandomStream rng(4, 0);
  const auto state = random_state(ansatz, rng, 0.4);
  const auto bundle = estimate_exact_sum(ansatz, state, TfiHamiltonian(n, 1.0, 1.0));

  CHECK((bundle.s_active - bundle.s_active.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXc> eigensolver(bundle.s_active);
  CHECK(eigensolver.eigenvalues().minCoeff() >= -1e-10);
  for (int d = 0; d < ansatz.parameter_count(); ++d) CHECK(bundle.s_diag[d] >= 0.0);
}

TEST_CASE("translation-class enumeration equals the plain sum") {
  const int n = 10;
  SymmetricRbmAnsatz ansatz(n, 1);
  TfiHamiltonian ham(n, 1.0, 1.2);
  RandomStream rng(5, 0);
  ParameterState state = random_state(ansatz, rng, 0.15);
  state.active[3] = 0;

  const auto fast = estimate_exact_sum(ansatz, state, ham, 14, true);
  const auto plain = estimate_exact_sum(ansatz, state, ham, 14, false);
  CHECK(std::abs(fast.energy_mean - plain.energy_mean) < 1e-11);
  CHECK(fast.energy_variance == Catch::Approx(plain.energy_variance).margin(1e-9));
  CHECK(fast.sigma_x == Catch::Approx(plain.sigma_x).margin(1e-11));
  CHECK((fast.s_active - plain.s_active).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((fast.force - plain.force).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((fast.cross - plain.cross).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("exact-sum refuses N above the enumeration cap") {
  JastrowAnsatz ansatz(12);
  ParameterState state = ansatz.make_parameter_state();
  CHECK_THROWS_AS(estimate_exact_sum(ansatz, state, TfiHamiltonian(12, 1.0, 1.0), 10),
                  CapacityError);
}

TEST_CASE("Metropolis acceptance is exactly one for the uniform state") {
  JastrowAnsatz ansatz(6);
  ParameterState state = ansatz.make_parameter_state();
  SamplerConfig sampler;
  sampler.n_samples = 200;
  sampler.n_burn = 10;
  sampler.n_chains = 2;
  const auto bundle =
      estimate_metropolis(ansatz, state, TfiHamiltonian(6, 1.0, 1.5), sampler);
  CHECK(bundle.acceptance_rate == 1.0);
  CHECK(bundle.energy_mean.real() == Catch::Approx(-1.5 * 6).margin(1e-10));
}

TEST_CASE("Metropolis bundles are reproducible bit-for-bit with a fixed seed") {
  const int n = 10;
  JastrowAnsatz ansatz(n);
  TfiHamiltonian ham(n, 1.0, 1.1);
  RandomStream rng(6, 0);
  const auto state = random_state(ansatz, rng, 0.3);
  SamplerConfig sampler;
  sampler.n_samples = 501;
  sampler.n_burn = 20;
  sampler.n_chains = 3;
  sampler.seed = 20260314;

  const auto a = estimate_metropolis(ansatz, state, ham, sampler);
  const auto b = estimate_metropolis(ansatz, state, ham, sampler);
  CHECK(a.energy_mean == b.energy_mean);
  CHECK(a.energy_variance == b.energy_variance);
  CHECK(a.sigma_x == b.sigma_x);
  CHECK(a.s_active == b.s_active);
  CHECK(a.force == b.force);
}

TEST_CASE("Metropolis converges to the exact-sum bundle within replica errors") {
  const int n = 10;
  JastrowAnsatz ansatz(n);
  TfiHamiltonian ham(n, 1.0, 1.0);
  RandomStream rng(7, 0);
  const auto state = random_state(ansatz, rng, 0.2);
  const auto exact = estimate_exact_sum(ansatz, state, ham);

  const int replicas = 8;
  const int p = ansatz.parameter_count();
  std::vector<EstimateBundle> runs;
  for (int r = 0; r < replicas; ++r) {
    SamplerConfig sampler;
    sampler.n_samples = 100000;
    sampler.n_burn = 200;
    sampler.n_chains = 2;
    sampler.seed = 900 + r;
    runs.push_back(estimate_metropolis(ansatz, state, ham, sampler));
  }
  auto replica_check = [&](auto&& extract, double target) {
    double mean = 0.0;
    for (const auto& run : runs) mean += extract(run);
    mean /= replicas;
    double var = 0.0;
    for (const auto& run : runs) var += (extract(run) - mean) * (extract(run) - mean);
    const double se = std::sqrt(var / (replicas - 1) / replicas);
    return std::abs(mean - target) <= 3.0 * se + 1e-6;
  };
  for (int k = 0; k < p; ++k) {
    CHECK(replica_check([&](const EstimateBundle& b) { return b.force[k].real(); },
                        exact.force[k].real()));
    CHECK(replica_check([&](const EstimateBundle& b) { return b.force[k].imag(); },
                        exact.force[k].imag()));
    CHECK(replica_check([&](const EstimateBundle& b) { return b.s_active(k, k).real(); },
                        exact.s_active(k, k).real()));
  }
  // Energy and sigma_x are right-skewed local estimators; check them at a
  // plain tolerance rather than replica-error resolution.
  for (const auto& run : runs) {
    CHECK(std::abs(run.energy_mean.real() - exact.energy_mean.real()) < 0.05);
    CHECK(std::abs(run.sigma_x - exact.sigma_x) < 0.01);
  }
}

TEST_CASE("a degenerate wave function stalls the sampler") {
  // At N = 2 every flip toggles alignment, so with a huge coupling the chain
  // absorbs into an aligned configuration and then rejects every proposal.
  JastrowAnsatz ansatz(2);
  ParameterState state = ansatz.make_parameter_state();
  state.values[0] = 200.0;
  SamplerConfig sampler;
  sampler.n_samples = 50;
  sampler.n_burn = 20;
  sampler.n_chains = 1;
  CHECK_THROWS_AS(estimate_metropolis(ansatz, state, TfiHamiltonian(2, 1.0, 0.5), sampler),
                  SamplerStallError);
}
