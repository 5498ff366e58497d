#include <catch2/catch_amalgamated.hpp>

#include "atvmc/lite.hpp"
#include "atvmc/solver.hpp"
#include "oracles.hpp"

using namespace atvmc;

TEST_CASE("identity S gives alpha_dot = -i F") {
  const int p = 4;
  RandomStream rng(1, 0);
  VectorXc force(p);
  for (int k = 0; k < p; ++k) force[k] = Complex(rng.next_normal(), rng.next_normal());
  const auto result =
      solve_equations_of_motion(MatrixXc::Identity(p, p), force, SolverPolicy{});
  CHECK(result.rank == p);
  CHECK(result.full_rank());
  CHECK((result.alpha_dot - (-kImaginaryUnit * force)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pseudoinverse drops the null direction when F is orthogonal to it") {
  // S = diag(2, 1, 0); F has no component on the null direction.
  MatrixXc s = MatrixXc::Zero(3, 3);
  s(0, 0) = 2.0;
  s(1, 1) = 1.0;
  VectorXc force(3);
  force << Complex(1.0, 0.5), Complex(-2.0, 0.0), Complex(0.0, 0.0);
  const auto result = solve_equations_of_motion(s, force, SolverPolicy{});
  CHECK(result.rank == 2);
  CHECK_FALSE(result.full_rank());
  CHECK(std::abs(result.alpha_dot[2]) < 1e-14);
  CHECK(std::abs(result.alpha_dot[0] - (-kImaginaryUnit * force[0] / 2.0)) < 1e-14);
  CHECK(result.discarded_mass == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("random HPD systems match a dense least-squares oracle") {
  RandomStream rng(2, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const auto sys = oracle::random_hpd_system(5, rng);
    const auto result = solve_equations_of_motion(sys.s, sys.f, SolverPolicy{});
    const VectorXc expected =
        -kImaginaryUnit * sys.s.completeOrthogonalDecomposition().solve(sys.f);
    CHECK((result.alpha_dot - expected).cwiseAbs().maxCoeff() <
          1e-10 * (1.0 + expected.cwiseAbs().maxCoeff()));
    // Residual of the retained system.
    const VectorXc residual = sys.s * result.alpha_dot + kImaginaryUnit * sys.f;
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("an all-discarded spectrum raises a rank-zero error") {
  MatrixXc s = MatrixXc::Zero(3, 3);
  VectorXc force = VectorXc::Ones(3);
  CHECK_THROWS_AS(solve_equations_of_motion(s, force, SolverPolicy{}), RankZeroError);
}

TEST_CASE("SNR filtering discards noise-dominated directions and nothing else") {
  // Direction 0 carries a consistent force across chains, direction 1 is
  // pure chain noise around zero.
  MatrixXc s = MatrixXc::Identity(2, 2);
  const int chains = 8;
  MatrixXc chain_forces(2, chains);
  RandomStream rng(3, 0);
  for (int c = 0; c < chains; ++c) {
    chain_forces(0, c) = Complex(1.0 + 0.01 * rng.next_normal(), 0.0);
    chain_forces(1, c) = Complex(0.05 * rng.next_normal(), 0.05 * rng.next_normal());
  }
  VectorXc force(2);
  force[0] = chain_forces.row(0).mean();
  force[1] = chain_forces.row(1).mean();

  SolverPolicy snr_policy;
  snr_policy.kind = SolverPolicy::Kind::Snr;
  snr_policy.snr_threshold = 4.0;
  const auto filtered = solve_equations_of_motion(s, force, snr_policy, &chain_forces);
  CHECK(filtered.snr_discarded == 1);
  CHECK(std::abs(filtered.alpha_dot[1]) == 0.0);
  CHECK(std::abs(filtered.alpha_dot[0] - (-kImaginaryUnit * force[0])) < 1e-14);

  // Without chain statistics (exact summation) SNR mode reduces to the
  // pseudoinverse result for any threshold.
  snr_policy.snr_threshold = 1e9;
  const auto no_noise = solve_equations_of_motion(s, force, snr_policy, nullptr);
  const auto pinv = solve_equations_of_motion(s, force, SolverPolicy{});
  CHECK((no_noise.alpha_dot - pinv.alpha_dot).cwiseAbs().maxCoeff() == 0.0);
  CHECK(no_noise.rank == pinv.rank);
}

TEST_CASE("a vanishing SNR threshold reduces to the pseudoinverse") {
  RandomStream rng(4, 0);
  const auto sys = oracle::random_hpd_system(4, rng);
  MatrixXc chain_forces(4, 4);
  for (int c = 0; c < 4; ++c) {
    for (int k = 0; k < 4; ++k) {
      chain_forces(k, c) = sys.f[k] + 0.1 * Complex(rng.next_normal(), rng.next_normal());
    }
  }
  SolverPolicy snr_policy;
  snr_policy.kind = SolverPolicy::Kind::Snr;
  snr_policy.snr_threshold = 1e-300;
  const auto snr = solve_equations_of_motion(sys.s, sys.f, snr_policy, &chain_forces);
  const auto pinv = solve_equations_of_motion(sys.s, sys.f, SolverPolicy{});
  CHECK((snr.alpha_dot - pinv.alpha_dot).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lite_squared limits: frozen everything and exact eigenstates") {
  MatrixXc s = MatrixXc::Identity(3, 3);
  const VectorXc zero = VectorXc::Zero(3);
  CHECK(lite_squared(2.5, s, zero) == 2.5);
  // Var(H) = 0 on an eigenstate; the solution has alpha_dot = 0 there too.
  CHECK(lite_squared(0.0, s, zero) == 0.0);
}

TEST_CASE("lite_squared equals the algebraic pseudoinverse identity") {
  RandomStream rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sys = oracle::random_hpd_system(6, rng);
    const auto solve = solve_equations_of_motion(sys.s, sys.f, SolverPolicy{});
    const double lite = lite_squared(sys.var_h, sys.s, solve.alpha_dot);
    // Var - F^dag S^+ S S^+ F via an independent inverse.
    const MatrixXc s_inv = sys.s.inverse();
    const double expected =
        sys.var_h - (sys.f.dot(s_inv * sys.s * s_inv * sys.f)).real();
    CHECK(lite == Catch::Approx(expected).margin(1e-9));
  }
}

TEST_CASE("the clamp records the raw value") {
  MatrixXc s = MatrixXc::Identity(1, 1);
  VectorXc alpha_dot(1);
  alpha_dot << Complex(2.0, 0.0);
  double raw = 0.0;
  const double clamped = lite_squared(1.0, s, alpha_dot, &raw);
  CHECK(clamped == 0.0);
  CHECK(raw == Catch::Approx(-3.0).margin(1e-14));
}

TEST_CASE("fs error equals the LITE at the variational minimum and above it elsewhere") {
  RandomStream rng(6, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = oracle::random_hpd_system(5, rng);
    const auto solve = solve_equations_of_motion(sys.s, sys.f, SolverPolicy{});
    const double lite = lite_squared(sys.var_h, sys.s, solve.alpha_dot);
    const double fs = fs_error_squared(sys.var_h, sys.s, sys.f, solve.alpha_dot);
    REQUIRE(solve.full_rank());
    CHECK(std::abs(fs - lite) < 1e-10);

    // Arbitrary trajectories: alpha_dot = 0 gives Var(H); random probes never
    // go below the minimum.
    const double at_rest = fs_error_squared(sys.var_h, sys.s, sys.f, VectorXc::Zero(5));
    CHECK(at_rest == Catch::Approx(sys.var_h).margin(1e-12));
    for (int probe = 0; probe < 100; ++probe) {
      VectorXc perturbed = solve.alpha_dot;
      for (int k = 0; k < 5; ++k) {
        perturbed[k] += 0.3 * Complex(rng.next_normal(), rng.next_normal());
      }
      CHECK(fs_error_squared(sys.var_h, sys.s, sys.f, perturbed) >= lite - 1e-10);
    }
  }
}

TEST_CASE("global bound accumulation") {
  CHECK(accumulate_global_bound(0.0, 0.0, 1e-3) == 0.0);
  double bound = 0.0;
  for (int step = 0; step < 1000; ++step) bound = accumulate_global_bound(bound, 4.0, 1e-3);
  CHECK(bound == Catch::Approx(2.0).margin(1e-9));
  CHECK(accumulate_global_bound(1.0, -1e-12, 0.5) == 1.0);
}
