#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ionlattice/config.hpp"
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

TEST_CASE("mode sum starts at the kicked configuration with unit source energy") {
  const ChainModel m = model_with(6);
  const EquilibriumResult eq = relax_bare_chain(m);
  const ModeSpectrum sp = normal_modes(m, eq.state);
  const ExcitationDecomposition dec = decompose(sp, 0);
  const Trajectory traj = evolve_modesum(eq.state, dec, sp, {0.0, 0.1});
  Eigen::VectorXd kick = Eigen::VectorXd::Zero(6);
  kick[0] = 1.0;
  CHECK((traj.positions[0] - (eq.state.positions + kick)).lpNorm<Eigen::Infinity>() <
        1e-12);
  const auto eloc = local_energy(traj, eq.state, m.hessian(eq.state), 0, 0, 1.0);
  CHECK(eloc[0] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-ion energy exchange peaks at the beat half period") {
  const ChainModel m = model_with(2);
  const EquilibriumResult eq = relax_bare_chain(m);
  const ModeSpectrum sp = normal_modes(m, eq.state);
  const ExcitationDecomposition dec = decompose(sp, 0);
  std::vector<double> t;
  for (double tt = 0.0; tt <= 10.0; tt += 0.001) t.push_back(tt);
  const Trajectory traj = evolve_modesum(eq.state, dec, sp, t);
  const auto eloc = local_energy(traj, eq.state, m.hessian(eq.state), 1, 0, 1.0);
  // The raw local energy carries a fast oscillation on top of the beat
  // envelope, so compare the global transfer maximum against the beat half
  // period rather than the first local peak.
  std::size_t imax = 0;
  for (std::size_t i = 0; i < eloc.size(); ++i)
    if (eloc[i] > eloc[imax]) imax = i;
  const double beat = constants::pi / (std::sqrt(3.0) - 1.0);
  CHECK(t[imax] == Catch::Approx(beat).margin(0.05));
  CHECK(eloc[imax] > 0.9); // near-complete transfer at the beat maximum
}

TEST_CASE("arrival metrics on a synthetic rise-and-fall series") {
  std::vector<double> t, e;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.1 * i);
    const double x = 0.1 * i - 5.0;
    e.push_back(std::exp(-x * x));
  }
  const ArrivalMetrics m = arrival_metrics(t, e, 0.5);
  REQUIRE(m.first_peak_time.has_value());
  CHECK(*m.first_peak_time == Catch::Approx(5.0).margin(0.11));
  REQUIRE(m.threshold_time.has_value());
  CHECK(*m.threshold_time < 5.0); // half maximum is crossed on the way up
  CHECK(*m.threshold_time == Catch::Approx(5.0 - std::sqrt(std::log(2.0))).margin(0.11));
}

TEST_CASE("arrival metrics report absence below the floor") {
  std::vector<double> t{0.0, 1.0, 2.0}, e{0.0, 0.0, 0.0};
  const ArrivalMetrics m = arrival_metrics(t, e, 0.5);
  CHECK_FALSE(m.first_peak_time.has_value());
  CHECK_FALSE(m.threshold_time.has_value());
}

TEST_CASE("zero excitation stays static under the symplectic integrator") {
  const ChainModel m = model_with(4);
  const EquilibriumResult eq = relax_bare_chain(m);
  IntegrationOptions o;
  o.dt = 0.01;
  o.t_end = 5.0;
  const Trajectory traj =
      integrate_nonlinear(m, eq.state, Eigen::VectorXd::Zero(4), o);
  for (const auto& x : traj.positions)
    CHECK((x - eq.state.positions).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("langevin path with no baths matches the deterministic integrator bitwise") {
  const ChainModel m = model_with(4);
  const EquilibriumResult eq = relax_bare_chain(m);
  ChainState kicked = eq.state;
  kicked.positions[0] += 1e-3;
  IntegrationOptions o;
  o.dt = 0.01;
  o.t_end = 20.0;
  o.sample_stride = 10;
  const Trajectory det = integrate_nonlinear(m, kicked, Eigen::VectorXd::Zero(4), o);

  LangevinOptions lo;
  lo.integration = o;
  lo.burn_in_damping_times = 0.0;
  const LangevinResult stoch = langevin_bath(m, kicked, {}, lo, 12345);
  REQUIRE(det.times.size() == stoch.trajectory.times.size());
  for (std::size_t s = 0; s < det.times.size(); ++s) {
    CHECK(det.positions[s] == stoch.trajectory.positions[s]); // bit-for-bit
    CHECK(det.velocities[s] == stoch.trajectory.velocities[s]);
  }
}

TEST_CASE("langevin thermostat equilibrates a single ion to the bath temperature") {
  const ChainModel m = model_with(1);
  const EquilibriumResult eq = relax_bare_chain(m);
  BathSpec bath{0, 0.5e-3, 2e3}; // 0.5 mK at gamma = 2 kHz
  LangevinOptions lo;
  lo.integration.dt = 0.05;
  lo.integration.t_end = 60000.0;
  lo.integration.sample_stride = 20;
  const LangevinResult r = langevin_bath(m, eq.state, {bath}, lo, 7);
  CHECK(std::abs(r.temperature[0] - 0.5e-3) < 3.0 * r.temperature_err[0] + 5e-5);
  // Identical seed reproduces the run exactly.
  const LangevinResult r2 = langevin_bath(m, eq.state, {bath}, lo, 7);
  CHECK(r.temperature[0] == r2.temperature[0]);
}

TEST_CASE("single-well oscillation is slower than its harmonic limit") {
  // Pendulum softening: a large-amplitude oscillation in a cosine well takes
  // longer than 2 pi / omega_loc to return.
  const ChainModel m = model_with(1);
  const LatticeTerm lt = m.lattice_term(1.5);
  ChainState seed;
  seed.positions = Eigen::VectorXd::Constant(1, 0.45 * lt.period);
  seed.power = 1.5;
  const EquilibriumResult eq = relax(m, seed);
  const double wloc = std::sqrt(m.hessian(eq.state)(0, 0));

  ChainState swung = eq.state;
  swung.positions[0] += 0.35 * lt.period; // well edge sits at half a period
  IntegrationOptions o;
  o.dt = 1e-4;
  o.t_end = 1.2 * constants::two_pi / wloc;
  const Trajectory traj = integrate_nonlinear(m, swung, Eigen::VectorXd::Zero(1), o);

  double quarter = 0.0;
  for (std::size_t s = 1; s < traj.times.size(); ++s)
    if (traj.positions[s][0] <= eq.state.positions[0]) {
      quarter = traj.times[s];
      break;
    }
  REQUIRE(quarter > 0.0);
  CHECK(quarter > 0.25 * constants::two_pi / wloc * 1.05);
}

TEST_CASE("ion crossing aborts the integration with a timestamp") {
  const ChainModel m = model_with(2);
  const EquilibriumResult eq = relax_bare_chain(m);
  Eigen::VectorXd v0(2);
  v0 << 5.0, -5.0; // drive the ions into each other
  IntegrationOptions o;
  o.dt = 0.01;
  o.t_end = 5.0;
  CHECK_THROWS_AS(integrate_nonlinear(m, eq.state, v0, o), std::runtime_error);
}

TEST_CASE("pulse heating follows the n-squared law at the quoted scale") {
  const IonSpecies ca = IonSpecies::calcium();
  const PulseHeatingResult r =
      pulse_heating_energy(ca, constants::two_pi * 1e6, 5, constants::pi / 4.0);
  CHECK(r.equilibrium_shift * 1e9 == Catch::Approx(46.0 / std::sqrt(2.0)).epsilon(0.15));
  CHECK(r.e0_quanta == Catch::Approx(8.0).epsilon(0.25));
  for (int n = 0; n <= 5; ++n)
    CHECK(r.energies_quanta[n] == Catch::Approx(n * n * r.e0_quanta).margin(1e-12));
  CHECK(r.diffusion_quanta_per_half_cycle == Catch::Approx(2.0));
}

TEST_CASE("heating rates against hand-evaluated formulas") {
  ExperimentConfig cfg;
  const IonSpecies ca = cfg.species();
  const double depth = constants::planck * 6.9e6;
  const double wloc = local_frequency(depth, cfg.lattice(), ca);
  const double s_noise = 1e-14;
  const HeatingEstimate h = heating_rates(cfg.lattice(), 1.5, wloc, s_noise, ca);

  const double nu = wloc / constants::two_pi;
  const double parametric =
      0.5 * constants::pi * constants::pi * nu * nu * s_noise * 1e-3;
  CHECK(h.parametric_rate == Catch::Approx(parametric).epsilon(1e-10));

  const double lambda = cfg.lattice().period;
  const double gradient = 2.0 * std::pow(constants::pi, 3) * depth * depth * s_noise /
                          (constants::hbar * nu * ca.mass * lambda * lambda) * 1e-3;
  CHECK(h.gradient_rate == Catch::Approx(gradient).epsilon(1e-10));

  const double z0 = std::sqrt(constants::hbar / (2.0 * ca.mass * wloc));
  const double eta = constants::two_pi / (2.0 * lambda) * z0;
  CHECK(h.lamb_dicke == Catch::Approx(eta).epsilon(1e-12));
  CHECK(h.scattering_rate == Catch::Approx(40.0 * 1.5 * eta * eta).epsilon(1e-12));
}
