#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ionlattice/config.hpp"
#include "ionlattice/modes.hpp"
#include "ionlattice/statics.hpp"
#include "ionlattice/transport.hpp"

using namespace ionlattice;

namespace {

ChainModel model_with(int n) {
  ExperimentConfig cfg;
  cfg.set("trap.ion_count", std::to_string(n));
  return cfg.model();
}

} // namespace

TEST_CASE("two-ion bare spectrum is 1 and sqrt(3)") {
  const ChainModel m = model_with(2);
  const EquilibriumResult r = relax_bare_chain(m);
  const ModeSpectrum sp = normal_modes(m, r.state);
  REQUIRE(sp.size() == 2);
  CHECK(sp.frequencies[0] == Catch::Approx(1.0).epsilon(1e-10));
  CHECK(sp.frequencies[1] == Catch::Approx(std::sqrt(3.0)).epsilon(1e-10));
  CHECK(sp.parities[0] == Parity::even);
  CHECK(sp.parities[1] == Parity::odd);
  CHECK(sp.stable());
}

TEST_CASE("three-ion bare spectrum adds sqrt(29/5)") {
  const ChainModel m = model_with(3);
  const EquilibriumResult r = relax_bare_chain(m);
  const ModeSpectrum sp = normal_modes(m, r.state);
  REQUIRE(sp.size() == 3);
  CHECK(sp.frequencies[0] == Catch::Approx(1.0).epsilon(1e-10));
  CHECK(sp.frequencies[1] == Catch::Approx(std::sqrt(3.0)).epsilon(1e-10));
  CHECK(sp.frequencies[2] == Catch::Approx(std::sqrt(29.0 / 5.0)).epsilon(1e-10));
}

TEST_CASE("COM mode frequency is the trap frequency for any chain size") {
  for (int n : {1, 2, 3, 10, 35}) {
    const ChainModel m = model_with(n);
    const EquilibriumResult r = relax_bare_chain(m);
    const ModeSpectrum sp = normal_modes(m, r.state);
    CHECK(std::abs(sp.frequencies[0] - 1.0) < 1e-10);
    CHECK(sp.frequency_si(0) ==
          Catch::Approx(constants::two_pi * 1e5).epsilon(1e-10));
  }
}

TEST_CASE("eigenvectors are orthonormal with alternating parity at zero power") {
  const ChainModel m = model_with(8);
  const EquilibriumResult r = relax_bare_chain(m);
  const ModeSpectrum sp = normal_modes(m, r.state);
  const Eigen::MatrixXd vtv = sp.vectors.transpose() * sp.vectors;
  CHECK(vtv.isApprox(Eigen::MatrixXd::Identity(8, 8), 1e-10));
  for (int k = 0; k < 8; ++k) {
    CHECK(sp.parities[k] == (k % 2 == 0 ? Parity::even : Parity::odd));
  }
}

TEST_CASE("end-ion excitations decompose with parity-flipped coefficients") {
  const ChainModel m = model_with(5);
  const EquilibriumResult r = relax_bare_chain(m);
  const ModeSpectrum sp = normal_modes(m, r.state);
  const ExcitationDecomposition first = decompose(sp, 0);
  const ExcitationDecomposition last = decompose(sp, 4);
  for (int n = 0; n < 5; ++n) {
    const double sign = sp.parities[n] == Parity::even ? 1.0 : -1.0;
    CHECK(last.amplitudes[n] == Catch::Approx(sign * first.amplitudes[n]).margin(1e-10));
  }
  // Parseval: a unit single-ion kick carries unit norm in mode space.
  CHECK(first.amplitudes.squaredNorm() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unstable directions are flagged, not clamped") {
  // A single ion balanced on the lattice maximum is a stationary saddle.
  const ChainModel m = model_with(1);
  ChainState top;
  top.positions = Eigen::VectorXd::Zero(1);
  top.power = 1.5;
  REQUIRE(m.gradient(top).lpNorm<Eigen::Infinity>() < 1e-14);
  const ModeSpectrum sp = normal_modes(m, top);
  REQUIRE(sp.size() == 1);
  CHECK(sp.imaginary[0]);
  CHECK_FALSE(sp.stable());
  CHECK(sp.frequencies[0] == Catch::Approx(std::sqrt(168.0 - 1.0)).epsilon(1e-2));
}

TEST_CASE("mode analysis rejects unrelaxed states") {
  const ChainModel m = model_with(3);
  ChainState s;
  s.positions.resize(3);
  s.positions << -1.0, 0.1, 1.0; // not an equilibrium
  CHECK_THROWS(normal_modes(m, s));
}

TEST_CASE("spectrum sweep tracks the continuation grid") {
  const ChainModel m = model_with(5);
  const EquilibriumResult base = relax_bare_chain(m);
  std::vector<double> grid{0.0, 0.25, 0.5};
  const ContinuationSweep sweep = sweep_power(m, base, grid);
  const SpectrumTable table = spectrum_sweep(m, sweep);
  REQUIRE(table.powers.size() == 3);
  REQUIRE(table.spectra.size() == 3);
  CHECK(table.spectra[0].frequencies[0] == Catch::Approx(1.0).epsilon(1e-10));
}
