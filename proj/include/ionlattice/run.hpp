#pragma once

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "ionlattice/config.hpp"
#include "ionlattice/csv.hpp"
#include "ionlattice/fk.hpp"
#include "ionlattice/gaussian.hpp"
#include "ionlattice/model.hpp"
#include "ionlattice/modes.hpp"
#include "ionlattice/schrodinger.hpp"
#include "ionlattice/statics.hpp"
#include "ionlattice/transport.hpp"

// Batch subcommands, one per figure or estimate. Each writes a single CSV
// whose header embeds the fully resolved configuration.
namespace ionlattice::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numerical_error = 3;

namespace detail {

inline RelaxOptions relax_options(const ExperimentConfig& cfg) {
  RelaxOptions o;
  o.gradient_tol = cfg.gradient_tol;
  return o;
}

inline EquilibriumResult relaxed_at_power(const ChainModel& model,
                                          const ExperimentConfig& cfg, double power) {
  SweepOptions sopts;
  sopts.relax = relax_options(cfg);
  EquilibriumResult base = relax_bare_chain(model, sopts.relax);
  if (!base.converged) throw std::runtime_error("bare-chain relaxation did not converge");
  if (power <= 0.0) return base;
  return sweep_power(model, base, {power}, sopts).states.back();
}

inline std::vector<double> time_grid(const ExperimentConfig& cfg) {
  std::vector<double> t;
  for (double x = 0.0; x <= cfg.t_end + 0.5 * cfg.dt; x += cfg.dt) t.push_back(x);
  return t;
}

inline const char* parity_name(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    default: return "none";
  }
}

inline void run_statics_sweep(const ExperimentConfig& cfg, CsvWriter& csv) {
  const ChainModel model = cfg.model();
  SweepOptions sopts;
  sopts.relax = relax_options(cfg);
  EquilibriumResult base = relax_bare_chain(model, sopts.relax);
  if (!base.converged) throw std::runtime_error("bare-chain relaxation did not converge");
  ContinuationSweep sweep = sweep_power(model, base, cfg.power_grid(), sopts);
  const double l0_um = model.scales().length_unit * 1e6;
  csv.columns({"power_w", "omega0_over_omega_a", "delta_over_lambda", "chain_length_um"});
  for (std::size_t i = 0; i < sweep.powers.size(); ++i) {
    const ChainState& s = sweep.states[i].state;
    const ModeSpectrum sp = normal_modes(model, s);
    const double omega0 = sp.imaginary[0] ? -sp.frequencies[0] : sp.frequencies[0];
    const double delta = cfg.ion_count % 2 == 1
                             ? order_parameter_delta(model, s) / model.lattice().period
                             : std::nan("");
    const double length =
        (s.positions[s.size() - 1] - s.positions[0]) * l0_um;
    csv.row({sweep.powers[i], omega0, delta, length});
  }
}

inline void run_hull(const ExperimentConfig& cfg, CsvWriter& csv) {
  const ChainModel model = cfg.model();
  EquilibriumResult base = relax_bare_chain(model, relax_options(cfg));
  EquilibriumResult at_power = relaxed_at_power(model, cfg, cfg.power_w);
  HullFunction h = hull(model, at_power.state, base.state);
  csv.columns({"ion_index", "reference_position_um", "phase_over_lambda"});
  for (std::size_t i = 0; i < h.phases.size(); ++i)
    csv.row({static_cast<double>(i), h.reference_positions[i] * 1e6,
             h.phases[i] / model.lattice().period});
}

inline void run_modes(const ExperimentConfig& cfg, CsvWriter& csv) {
  const ChainModel model = cfg.model();
  SweepOptions sopts;
  sopts.relax = relax_options(cfg);
  EquilibriumResult base = relax_bare_chain(model, sopts.relax);
  if (!base.converged) throw std::runtime_error("bare-chain relaxation did not converge");
  ContinuationSweep sweep = sweep_power(model, base, cfg.power_grid(), sopts);
  SpectrumTable table = spectrum_sweep(model, sweep);
  csv.columns({"power_w", "mode_index", "omega_over_omega_a", "parity"});
  for (std::size_t i = 0; i < table.powers.size(); ++i) {
    const ModeSpectrum& sp = table.spectra[i];
    for (int m = 0; m < sp.size(); ++m) {
      const double w = sp.imaginary[m] ? -sp.frequencies[m] : sp.frequencies[m];
      csv.row_mixed({CsvWriter::format(table.powers[i]), std::to_string(m),
                     CsvWriter::format(w), parity_name(sp.parities[m])});
    }
  }
}

inline void run_transport(const ExperimentConfig& cfg, CsvWriter& csv) {
  const ChainModel model = cfg.model();
  EquilibriumResult eq = relaxed_at_power(model, cfg, cfg.power_w);
  const ModeSpectrum sp = normal_modes(model, eq.state);
  if (!sp.stable()) throw std::runtime_error("transport: unstable equilibrium");
  const int source = cfg.source_ion;
  const int last = cfg.ion_count - 1;
  const ExcitationDecomposition dec = decompose(sp, source);
  const std::vector<double> t = time_grid(cfg);
  const Trajectory traj = evolve_modesum(eq.state, dec, sp, t);
  const Eigen::MatrixXd hess = model.hessian(eq.state);
  const std::vector<double> eloc = local_energy(traj, eq.state, hess, last, source, 1.0);
  const ArrivalMetrics metrics = arrival_metrics(t, eloc, cfg.threshold_fraction);
  if (metrics.threshold_time)
    csv.comment("threshold_time_omega_a", *metrics.threshold_time);
  if (metrics.first_peak_time)
    csv.comment("first_peak_time_omega_a", *metrics.first_peak_time);
  csv.columns({"time_omega_a", "last_ion_displacement", "e_loc_relative"});
  for (std::size_t i = 0; i < t.size(); ++i)
    csv.row({t[i], traj.positions[i][last] - eq.state.positions[last], eloc[i]});
}

inline void run_bath(const ExperimentConfig& cfg, CsvWriter& csv) {
  const ChainModel model = cfg.model();
  EquilibriumResult eq = relaxed_at_power(model, cfg, cfg.power_w);
  std::vector<BathSpec> baths = {
      {0, cfg.bath_temp_left_mk * 1e-3, cfg.bath_coupling_hz},
      {cfg.ion_count - 1, cfg.bath_temp_right_mk * 1e-3, cfg.bath_coupling_hz}};
  LangevinOptions opts;
  opts.integration.dt = cfg.dt;
  opts.integration.t_end = cfg.t_end;
  LangevinResult r = langevin_bath(model, eq.state, baths, opts,
                                   static_cast<std::uint64_t>(cfg.seed));
  csv.columns({"ion_index", "temperature_mk", "temperature_err_mk"});
  for (int i = 0; i < cfg.ion_count; ++i)
    csv.row({static_cast<double>(i), r.temperature[i] * 1e3, r.temperature_err[i] * 1e3});
}

inline void run_pulse_heating(const ExperimentConfig& cfg, CsvWriter& csv) {
  const double omega = constants::two_pi * cfg.pulse_mode_frequency_hz;
  const double angle = cfg.beam_angle_deg * constants::pi / 180.0;
  PulseHeatingResult r = pulse_heating_energy(cfg.species(), omega, cfg.n_pulses, angle);
  csv.comment("equilibrium_shift_nm", r.equilibrium_shift * 1e9);
  csv.comment("e0_quanta", r.e0_quanta);
  csv.comment("diffusion_quanta_per_half_cycle", r.diffusion_quanta_per_half_cycle);
  csv.columns({"n_pulses", "energy_quanta"});
  for (std::size_t n = 0; n < r.energies_quanta.size(); ++n)
    csv.row({static_cast<double>(n), r.energies_quanta[n]});
}

inline void run_heating_rates(const ExperimentConfig& cfg, CsvWriter& csv) {
  const LatticeConfig lattice = cfg.lattice();
  const IonSpecies species = cfg.species();
  const double depth = depth_from_power(lattice, cfg.power_w);
  const double wloc = local_frequency(depth, lattice, species);
  HeatingEstimate h =
      heating_rates(lattice, cfg.power_w, wloc, cfg.intensity_noise_per_hz, species);
  csv.columns({"nu_loc_mhz", "lamb_dicke", "ground_size_nm", "parametric_quanta_per_ms",
               "gradient_quanta_per_ms", "scattering_quanta_per_s"});
  csv.row({wloc / constants::two_pi * 1e-6, h.lamb_dicke, h.ground_size * 1e9,
           h.parametric_rate, h.gradient_rate, h.scattering_rate});
}

inline void run_bound_states(const ExperimentConfig& cfg, CsvWriter& csv) {
  const LatticeConfig lattice = cfg.lattice();
  const double depth = depth_from_power(lattice, cfg.power_w);
  BoundStateResult r = bound_states(depth, lattice.period, cfg.species());
  csv.comment("count", static_cast<double>(r.count));
  csv.comment("anharmonic_shift", r.anharmonic_shift);
  csv.comment("nu_loc_mhz", r.local_frequency / constants::two_pi * 1e-6);
  csv.columns({"level", "energy_j", "energy_over_hbar_omega_loc"});
  for (std::size_t i = 0; i < r.energies.size(); ++i)
    csv.row({static_cast<double>(i), r.energies[i],
             r.energies[i] / (constants::hbar * r.local_frequency)});
}

inline void run_fidelity(const ExperimentConfig& cfg, CsvWriter& csv) {
  const ChainModel model = cfg.model();
  EquilibriumResult eq = relaxed_at_power(model, cfg, cfg.power_w);
  SpinPerturbation pert{cfg.center_or(cfg.perturbed_ion), cfg.epsilon};
  FidelityScan scan = fidelity_scan(model, eq.state, pert, time_grid(cfg));
  csv.columns({"time_omega_a", "contrast"});
  for (std::size_t i = 0; i < scan.times.size(); ++i)
    csv.row({scan.times[i], scan.contrast[i]});
}

inline void run_fk_reference(const ExperimentConfig& cfg, CsvWriter& csv) {
  fk::FKChainParams params = fk::FKChainParams::golden_convergent(cfg.fk_particles,
                                                                 cfg.fk_wells);
  auto sweep = fk::reference_sweep(params, cfg.fk_grid());
  try {
    csv.comment("critical_strength_estimate", fk::critical_strength(sweep));
  } catch (const std::runtime_error&) {
    csv.comment("critical_strength_estimate", "not-reached");
  }
  csv.columns({"k_strength", "omega0"});
  for (const auto& pt : sweep) csv.row({pt.lattice_strength, pt.lowest_frequency});
}

} // namespace detail

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "statics-sweep", "hull",        "modes",        "transport", "bath",
      "pulse-heating", "heating-rates", "bound-states", "fidelity",  "fk-reference"};
  return names;
}

// Dispatch one subcommand; returns a process exit code and prints a
// machine-readable error line on failure.
inline int run(const std::string& subcommand, const ExperimentConfig& cfg,
               const std::string& out_path) {
  try {
    cfg.validate();
    CsvWriter csv(out_path, cfg, subcommand);
    if (subcommand == "statics-sweep") detail::run_statics_sweep(cfg, csv);
    else if (subcommand == "hull") detail::run_hull(cfg, csv);
    else if (subcommand == "modes") detail::run_modes(cfg, csv);
    else if (subcommand == "transport") detail::run_transport(cfg, csv);
    else if (subcommand == "bath") detail::run_bath(cfg, csv);
    else if (subcommand == "pulse-heating") detail::run_pulse_heating(cfg, csv);
    else if (subcommand == "heating-rates") detail::run_heating_rates(cfg, csv);
    else if (subcommand == "bound-states") detail::run_bound_states(cfg, csv);
    else if (subcommand == "fidelity") detail::run_fidelity(cfg, csv);
    else if (subcommand == "fk-reference") detail::run_fk_reference(cfg, csv);
    else {
      std::cerr << "error: config: unknown subcommand: " << subcommand << "\n";
      return exit_config_error;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return exit_numerical_error;
  }
  return exit_ok;
}

} // namespace ionlattice::cli
