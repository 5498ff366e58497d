#include <catch2/catch_amalgamated.hpp>

#include "atvmc/rng.hpp"
#include "atvmc/spin_chain.hpp"
#include "oracles.hpp"

using namespace atvmc;

TEST_CASE("diagonal energy on aligned and alternating configurations") {
  TfiHamiltonian ham(4, 1.0, 1.0);
  SpinConfiguration all_up(std::vector<int>{1, 1, 1, 1});
  CHECK(diagonal_energy(all_up, ham) == -4.0);

  SpinConfiguration alternating(std::vector<int>{1, -1, 1, -1});
  CHECK(diagonal_energy(alternating, ham) == 4.0);
}

TEST_CASE("diagonal energy matches a direct bond loop on random configurations") {
  TfiHamiltonian ham(10, 1.3, 0.7);
  RandomStream rng(77, 0);
  for (int trial = 0; trial < 20; ++trial) {
    SpinConfiguration config;
    config.spins.resize(10);
    for (auto& s : config.spins) s = rng.next_spin();
    double direct = 0.0;
    for (int i = 0; i < 10; ++i) direct += config.spins[i] * config.spins[(i + 1) % 10];
    CHECK(diagonal_energy(config, ham) == Catch::Approx(-1.3 * direct).margin(1e-14));
  }
}

TEST_CASE("diagonal energy rejects mismatched configuration shape") {
  TfiHamiltonian ham(4, 1.0, 1.0);
  SpinConfiguration wrong(std::vector<int>{1, 1, 1});
  CHECK_THROWS_AS(diagonal_energy(wrong, ham), ShapeError);
}

TEST_CASE("connection list has one diagonal and N single-flip entries") {
  TfiHamiltonian ham(2, 1.0, 0.9);
  SpinConfiguration config(std::vector<int>{1, -1});
  const auto conns = connections(config, ham);
  REQUIRE(conns.size() == 3);
  CHECK(conns[0].config.to_bits() == config.to_bits());
  CHECK(conns[0].amplitude == Complex(diagonal_energy(config, ham), 0.0));
  CHECK(conns[1].config.to_bits() == (config.to_bits() ^ 1ULL));
  CHECK(conns[2].config.to_bits() == (config.to_bits() ^ 2ULL));
  CHECK(conns[1].amplitude == Complex(-0.9, 0.0));
}

TEST_CASE("h = 0 emits zero-amplitude off-diagonals unless the sparsity flag is set") {
  TfiHamiltonian ham(4, 1.0, 0.0);
  SpinConfiguration config(std::vector<int>{1, 1, -1, 1});
  const auto dense = connections(config, ham);
  REQUIRE(dense.size() == 5);
  for (std::size_t i = 1; i < dense.size(); ++i) CHECK(dense[i].amplitude == Complex(0.0, 0.0));
  const auto sparse = connections(config, ham, /*skip_zero_offdiagonal=*/true);
  CHECK(sparse.size() == 1);
}

TEST_CASE("connection amplitudes reproduce a dense Hamiltonian row") {
  const int n = 8;
  TfiHamiltonian ham(n, 1.0, 1.7);
  const auto dense = oracle::dense_hamiltonian(n, 1.0, 1.7);
  RandomStream rng(5, 1);
  const auto bits = rng.next_u64() & 0xffULL;
  SpinConfiguration config = SpinConfiguration::from_bits(bits, n);

  VectorXc row = VectorXc::Zero(1 << n);
  for (const auto& conn : connections(config, ham)) {
    row[conn.config.to_bits()] += conn.amplitude;
  }
  for (int x = 0; x < (1 << n); ++x) {
    CHECK(std::abs(row[x] - dense(static_cast<int>(bits), x)) < 1e-12);
  }
}

TEST_CASE("single-flip amplitudes are Hermitian at the connection level") {
  TfiHamiltonian ham(6, 1.0, 1.1);
  SpinConfiguration config(std::vector<int>{1, -1, -1, 1, -1, 1});
  const auto forward = connections(config, ham);
  for (std::size_t i = 1; i < forward.size(); ++i) {
    const auto reverse = connections(forward[i].config, ham);
    bool found = false;
    for (std::size_t r = 1; r < reverse.size(); ++r) {
      if (reverse[r].config.to_bits() == config.to_bits()) {
        CHECK(reverse[r].amplitude == std::conj(forward[i].amplitude));
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("diagonal energy is invariant under cyclic rotation") {
  TfiHamiltonian ham(7, 1.0, 0.4);
  RandomStream rng(11, 2);
  for (int trial = 0; trial < 10; ++trial) {
    SpinConfiguration config;
    config.spins.resize(7);
    for (auto& s : config.spins) s = rng.next_spin();
    const double base = diagonal_energy(config, ham);
    for (int shift = 1; shift < 7; ++shift) {
      CHECK(diagonal_energy(config.rotated(shift), ham) == Catch::Approx(base).margin(1e-14));
    }
  }
}

TEST_CASE("Hamiltonian with J = 0 is rejected") {
  CHECK_THROWS_AS(TfiHamiltonian(4, 0.0, 1.0), ShapeError);
}
