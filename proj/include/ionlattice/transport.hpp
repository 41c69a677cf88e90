#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ionlattice/constants.hpp"
#include "ionlattice/model.hpp"
#include "ionlattice/modes.hpp"

// Phonon energy transport: mode-sum evolution of localized excitations, full
// nonlinear symplectic integration, Langevin end baths, and the laser/lattice
// heating estimates that size the experiment.
namespace ionlattice {

struct ExcitationDecomposition {
  Eigen::VectorXd amplitudes; // c_n
  int source_index = 0;
};

// c_n = v_n . e_source; the unit excitation of one ion expanded in normal modes.
inline ExcitationDecomposition decompose(const ModeSpectrum& spectrum, int source) {
  if (source < 0 || source >= spectrum.size())
    throw std::out_of_range("decompose: source index out of range");
  ExcitationDecomposition d;
  d.amplitudes = spectrum.vectors.row(source).transpose();
  d.source_index = source;
  return d;
}

struct Trajectory {
  std::vector<double> times;            // units of 1/omega_a
  std::vector<Eigen::VectorXd> positions;  // absolute, dimensionless
  std::vector<Eigen::VectorXd> velocities;
};

// x(t) = x_eq + sum_n c_n v_n cos(omega_n t), analytic velocities.
inline Trajectory evolve_modesum(const ChainState& equilibrium,
                                 const ExcitationDecomposition& decomp,
                                 const ModeSpectrum& spectrum,
                                 const std::vector<double>& t_grid,
                                 double amplitude = 1.0) {
  if (!spectrum.stable())
    throw std::invalid_argument("evolve_modesum: spectrum has imaginary-frequency modes");
  Trajectory traj;
  const int n = spectrum.size();
  for (double t : t_grid) {
    Eigen::VectorXd coef(n), dcoef(n);
    for (int m = 0; m < n; ++m) {
      const double w = spectrum.frequencies[m];
      coef[m] = decomp.amplitudes[m] * std::cos(w * t);
      dcoef[m] = -decomp.amplitudes[m] * w * std::sin(w * t);
    }
    traj.times.push_back(t);
    traj.positions.push_back(equilibrium.positions + amplitude * (spectrum.vectors * coef));
    traj.velocities.push_back(amplitude * (spectrum.vectors * dcoef));
  }
  return traj;
}

// E_loc,i(t) = 1/2 omega_loc,i^2 dx_i^2 + 1/2 v_i^2 with omega_loc,i^2 = A_ii,
// normalized so the source ion starts at 1.
inline std::vector<double> local_energy(const Trajectory& traj, const ChainState& equilibrium,
                                        const Eigen::MatrixXd& hessian, int ion,
                                        int source_ion, double source_amplitude) {
  const double w2_i = hessian(ion, ion);
  const double w2_src = hessian(source_ion, source_ion);
  const double e0 = 0.5 * w2_src * source_amplitude * source_amplitude;
  if (e0 <= 0.0) throw std::invalid_argument("local_energy: zero source energy");
  std::vector<double> e;
  e.reserve(traj.times.size());
  for (std::size_t t = 0; t < traj.times.size(); ++t) {
    const double dx = traj.positions[t][ion] - equilibrium.positions[ion];
    const double v = traj.velocities[t][ion];
    e.push_back((0.5 * w2_i * dx * dx + 0.5 * v * v) / e0);
  }
  return e;
}

struct ArrivalMetrics {
  std::optional<double> first_peak_time;
  std::optional<double> threshold_time;
};

inline ArrivalMetrics arrival_metrics(const std::vector<double>& times,
                                      const std::vector<double>& series,
                                      double fraction = 0.5, double floor = 1e-6) {
  if (series.empty() || times.size() != series.size())
    throw std::invalid_argument("arrival_metrics: empty or mismatched series");
  ArrivalMetrics m;
  double peak = 0.0;
  for (double v : series) peak = std::max(peak, v);
  if (peak <= floor) return m;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    if (series[i] > floor && series[i] >= series[i - 1] && series[i] > series[i + 1]) {
      m.first_peak_time = times[i];
      break;
    }
  }
  const double level = fraction * peak;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] >= level) {
      m.threshold_time = times[i];
      break;
    }
  }
  return m;
}

struct BathSpec {
  int ion_index = 0;
  double temperature = 0.0;   // K
  double coupling_rate = 0.0; // 1/s, gamma
};

struct IntegrationOptions {
  double dt = 0.01;      // units of 1/omega_a
  double t_end = 100.0;
  int sample_stride = 1; // record every k-th step
};

namespace detail {

// BAOAB stepper; with no baths the O substep vanishes and the scheme reduces to
// velocity Verlet, so the deterministic and stochastic paths share one code path.
inline Trajectory integrate_chain(const ChainModel& model, ChainState state,
                                  Eigen::VectorXd v, const IntegrationOptions& opts,
                                  const std::vector<BathSpec>* baths, std::uint64_t seed) {
  const int n = state.size();
  if (v.size() != n) throw std::invalid_argument("integrate: velocity size mismatch");
  const double dt = opts.dt;
  const long steps = static_cast<long>(std::llround(opts.t_end / dt));

  struct OU {
    int ion;
    double decay;   // exp(-gamma dt)
    double sigma;   // sqrt((1 - decay^2) * kT)
  };
  std::vector<OU> ou;
  if (baths) {
    const double ts = model.scales().time_unit;
    const double eu = model.scales().energy_unit;
    for (const auto& b : *baths) {
      if (b.ion_index < 0 || b.ion_index >= n)
        throw std::out_of_range("langevin_bath: ion index out of range");
      if (b.temperature < 0.0 || b.coupling_rate < 0.0)
        throw std::invalid_argument("langevin_bath: negative temperature or rate");
      const double gamma = b.coupling_rate * ts; // dimensionless
      if (gamma == 0.0) continue;
      const double kt = constants::boltzmann * b.temperature / eu;
      const double c = std::exp(-gamma * dt);
      ou.push_back({b.ion_index, c, std::sqrt((1.0 - c * c) * kt)});
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Trajectory traj;
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.positions.push_back(state.positions);
    traj.velocities.push_back(v);
  };
  Eigen::VectorXd force = -model.gradient(state);
  record(0.0);
  for (long s = 1; s <= steps; ++s) {
    v += 0.5 * dt * force;
    state.positions += 0.5 * dt * v;
    for (const auto& o : ou) v[o.ion] = o.decay * v[o.ion] + o.sigma * gauss(rng);
    state.positions += 0.5 * dt * v;
    if (!state.ordered())
      throw std::runtime_error("integrate: ion crossing at t = " + std::to_string(s * dt));
    force = -model.gradient(state);
    v += 0.5 * dt * force;
    if (s % opts.sample_stride == 0) record(s * dt);
  }
  return traj;
}

} // namespace detail

// Symplectic trajectory under the full anharmonic forces.
inline Trajectory integrate_nonlinear(const ChainModel& model, const ChainState& initial,
                                      const Eigen::VectorXd& v0,
                                      const IntegrationOptions& opts) {
  return detail::integrate_chain(model, initial, v0, opts, nullptr, 0);
}

struct LangevinResult {
  Trajectory trajectory;
  Eigen::VectorXd temperature;     // K, time-averaged kinetic, per ion
  Eigen::VectorXd temperature_err; // K, block-averaged standard error
  std::uint64_t seed = 0;
};

struct LangevinOptions {
  IntegrationOptions integration;
  double burn_in_damping_times = 10.0; // burn-in = this / max(gamma)
  int blocks = 10;
};

// Friction + noise on the bath ions only; kinetic temperature profile from the
// post-burn-in trajectory. Deterministic given the seed.
inline LangevinResult langevin_bath(const ChainModel& model, const ChainState& initial,
                                    const std::vector<BathSpec>& baths,
                                    const LangevinOptions& opts, std::uint64_t seed) {
  LangevinResult r;
  r.seed = seed;
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(initial.size());
  r.trajectory =
      detail::integrate_chain(model, initial, v0, opts.integration, &baths, seed);

  double gamma_max = 0.0;
  for (const auto& b : baths)
    gamma_max = std::max(gamma_max, b.coupling_rate * model.scales().time_unit);
  const double burn_in = gamma_max > 0.0 ? opts.burn_in_damping_times / gamma_max : 0.0;

  std::size_t first = 0;
  while (first < r.trajectory.times.size() && r.trajectory.times[first] < burn_in) ++first;
  const std::size_t count = r.trajectory.times.size() - first;
  if (count < static_cast<std::size_t>(opts.blocks))
    throw std::runtime_error("langevin_bath: not enough samples after burn-in");

  const int n = initial.size();
  const double t_unit = model.scales().energy_unit / constants::boltzmann;
  Eigen::MatrixXd block_means = Eigen::MatrixXd::Zero(opts.blocks, n);
  const std::size_t per_block = count / opts.blocks;
  for (int b = 0; b < opts.blocks; ++b) {
    for (std::size_t s = 0; s < per_block; ++s) {
      const auto& v = r.trajectory.velocities[first + b * per_block + s];
      block_means.row(b) += v.array().square().matrix().transpose();
    }
    block_means.row(b) *= t_unit / static_cast<double>(per_block);
  }
  r.temperature = block_means.colwise().mean();
  Eigen::VectorXd var = (block_means.rowwise() - r.temperature.transpose())
                            .array()
                            .square()
                            .colwise()
                            .sum() /
                        std::max(opts.blocks - 1, 1);
  r.temperature_err = (var / opts.blocks).array().sqrt();
  return r;
}

struct PulseHeatingResult {
  double equilibrium_shift = 0.0; // m, x_eq = F0 / m omega^2
  double e0_quanta = 0.0;         // energy after one pulse, units of hbar omega
  std::vector<double> energies_quanta; // E_n = n^2 E0, n = 0..n_pulses
  // Momentum-diffusion floor from spontaneous emission, per half trap cycle.
  double diffusion_quanta_per_half_cycle = 2.0;
};

// Saturated resonant pushing: F0 = hbar k_z Gamma / 2, pulsed for half a trap
// period per cycle; coherent displacement grows linearly, energy as n^2.
inline PulseHeatingResult pulse_heating_energy(const IonSpecies& species, double omega,
                                               int n_pulses, double beam_angle_rad) {
  if (omega <= 0.0) throw std::invalid_argument("pulse_heating_energy: omega must be > 0");
  species.validate();
  const double k = constants::two_pi / species.cooling_wavelength;
  const double kz = k * std::cos(beam_angle_rad);
  const double f0 = 0.5 * constants::hbar * kz * species.natural_linewidth;
  PulseHeatingResult r;
  r.equilibrium_shift = f0 / (species.mass * omega * omega);
  const double e0_joule = 0.5 * species.mass * omega * omega *
                          (2.0 * r.equilibrium_shift) * (2.0 * r.equilibrium_shift);
  r.e0_quanta = e0_joule / (constants::hbar * omega);
  for (int n = 0; n <= n_pulses; ++n)
    r.energies_quanta.push_back(static_cast<double>(n) * n * r.e0_quanta);
  return r;
}

struct HeatingEstimate {
  double lamb_dicke = 0.0;      // eta = k_z z0
  double ground_size = 0.0;     // m, z0 = sqrt(hbar / 2 m omega_loc)
  double parametric_rate = 0.0; // quanta/ms, intensity noise at 2 nu
  double gradient_rate = 0.0;   // quanta/ms, fluctuating gradient force
  double scattering_rate = 0.0; // quanta/s, lattice photon recoil
};

// Intensity-noise and photon-scattering heating at a lattice operating point.
// intensity_noise is the relative intensity noise PSD S (1/Hz), taken flat.
inline HeatingEstimate heating_rates(const LatticeConfig& lattice, double power,
                                     double omega_loc, double intensity_noise,
                                     const IonSpecies& species) {
  if (intensity_noise < 0.0 || power < 0.0)
    throw std::invalid_argument("heating_rates: S and P must be >= 0");
  HeatingEstimate h;
  if (omega_loc <= 0.0) return h;
  h.ground_size = std::sqrt(constants::hbar / (2.0 * species.mass * omega_loc));
  const double optical_wavelength = 2.0 * lattice.period; // standing wave
  h.lamb_dicke = constants::two_pi / optical_wavelength * h.ground_size;

  const double nu = omega_loc / constants::two_pi;
  // <E'> = pi^2 nu^2 S(2 nu) <E>; from the ground state, half a quantum drives it.
  const double gamma_heat = constants::pi * constants::pi * nu * nu * intensity_noise;
  h.parametric_rate = 0.5 * gamma_heat * 1e-3; // quanta/ms

  const double depth = depth_from_power(lattice, power);
  const double lam = lattice.period;
  h.gradient_rate = 2.0 * std::pow(constants::pi, 3) * depth * depth * intensity_noise /
                    (constants::hbar * nu * species.mass * lam * lam) * 1e-3; // quanta/ms

  h.scattering_rate = 40.0 * power * h.lamb_dicke * h.lamb_dicke; // quanta/s
  return h;
}

} // namespace ionlattice
