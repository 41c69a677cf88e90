#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlattice/constants.hpp"
#include "ionlattice/model.hpp"

// Experiment configuration: flat-sectioned key = value files with explicit
// unit suffixes, strict schema validation, and CLI > file > defaults precedence.
namespace ionlattice {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // [species]
  double mass_amu = 39.9625909;
  double cooling_wavelength_nm = 397.0;
  double natural_linewidth_hz = 21.6e6; // Gamma / 2pi
  // [trap]
  double axial_frequency_hz = 100e3; // omega_a / 2pi
  int ion_count = 35;
  // [lattice]
  double period_nm = 202.5;
  double depth_per_watt_h_mhz = 4.6; // K = h * (this) MHz/W * P
  double power_w = 1.5;
  double power_min_w = 0.0;
  double power_max_w = 2.0;
  double power_step_w = 0.01;
  double phase_origin_nm = 0.0;
  // [fk]
  double fk_k_min = 0.0;
  double fk_k_max = 0.12;
  double fk_k_step = 0.002;
  int fk_particles = 34;
  int fk_wells = 21;
  // [run]
  double gradient_tol = 1e-10;
  double dt = 0.05;          // output sampling / integrator step, units of 1/omega_a
  double t_end = 5000.0;     // units of 1/omega_a
  long seed = 1;
  double threshold_fraction = 0.5;
  double delta_x_nm = 10.0;  // depinning displacement criterion
  double epsilon = 0.01;     // spin-dependent relative depth change
  int perturbed_ion = -1;    // -1 = center ion
  int source_ion = 0;
  int n_pulses = 10;
  double pulse_mode_frequency_hz = 1e6;
  double beam_angle_deg = 45.0;
  double intensity_noise_per_hz = 1e-14;
  double bath_temp_left_mk = 0.5;
  double bath_temp_right_mk = 1.0;
  double bath_coupling_hz = 2e3;

  IonSpecies species() const {
    return {mass_amu * constants::atomic_mass_unit, cooling_wavelength_nm * 1e-9,
            constants::two_pi * natural_linewidth_hz};
  }
  TrapConfig trap() const {
    return {constants::two_pi * axial_frequency_hz, ion_count};
  }
  LatticeConfig lattice() const {
    return {period_nm * 1e-9, constants::planck * depth_per_watt_h_mhz * 1e6, power_w,
            phase_origin_nm * 1e-9};
  }
  ChainModel model() const { return ChainModel(species(), trap(), lattice()); }

  std::vector<double> power_grid() const {
    if (power_step_w <= 0.0) throw ConfigError("lattice.power_step_w must be > 0");
    if (power_max_w < power_min_w) throw ConfigError("empty power grid");
    std::vector<double> g;
    for (double p = power_min_w; p <= power_max_w + 0.5 * power_step_w; p += power_step_w)
      g.push_back(p);
    return g;
  }
  std::vector<double> fk_grid() const {
    if (fk_k_step <= 0.0) throw ConfigError("fk.k_step must be > 0");
    std::vector<double> g;
    for (double k = fk_k_min; k <= fk_k_max + 0.5 * fk_k_step; k += fk_k_step)
      g.push_back(k);
    return g;
  }

  int center_or(int ion) const { return ion < 0 ? ion_count / 2 : ion; }

  // Resolved key/value view, echoed into every output header.
  std::vector<std::pair<std::string, std::string>> entries() const;
  void set(const std::string& dotted_key, const std::string& value);
  void validate() const;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for key '" + key + "': " + v);
  }
}

inline long parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d != std::floor(d)) throw ConfigError("key '" + key + "' expects an integer: " + v);
  return static_cast<long>(d);
}

inline std::string format_value(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

} // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "species.mass_amu") mass_amu = parse_double(key, value);
  else if (key == "species.cooling_wavelength_nm") cooling_wavelength_nm = parse_double(key, value);
  else if (key == "species.natural_linewidth_hz") natural_linewidth_hz = parse_double(key, value);
  else if (key == "trap.axial_frequency_hz") axial_frequency_hz = parse_double(key, value);
  else if (key == "trap.ion_count") ion_count = static_cast<int>(parse_int(key, value));
  else if (key == "lattice.period_nm") period_nm = parse_double(key, value);
  else if (key == "lattice.depth_per_watt_h_mhz") depth_per_watt_h_mhz = parse_double(key, value);
  else if (key == "lattice.power_w") power_w = parse_double(key, value);
  else if (key == "lattice.power_min_w") power_min_w = parse_double(key, value);
  else if (key == "lattice.power_max_w") power_max_w = parse_double(key, value);
  else if (key == "lattice.power_step_w") power_step_w = parse_double(key, value);
  else if (key == "lattice.phase_origin_nm") phase_origin_nm = parse_double(key, value);
  else if (key == "fk.k_min") fk_k_min = parse_double(key, value);
  else if (key == "fk.k_max") fk_k_max = parse_double(key, value);
  else if (key == "fk.k_step") fk_k_step = parse_double(key, value);
  else if (key == "fk.particles") fk_particles = static_cast<int>(parse_int(key, value));
  else if (key == "fk.wells") fk_wells = static_cast<int>(parse_int(key, value));
  else if (key == "run.gradient_tol") gradient_tol = parse_double(key, value);
  else if (key == "run.dt") dt = parse_double(key, value);
  else if (key == "run.t_end") t_end = parse_double(key, value);
  else if (key == "run.seed") seed = parse_int(key, value);
  else if (key == "run.threshold_fraction") threshold_fraction = parse_double(key, value);
  else if (key == "run.delta_x_nm") delta_x_nm = parse_double(key, value);
  else if (key == "run.epsilon") epsilon = parse_double(key, value);
  else if (key == "run.perturbed_ion") perturbed_ion = static_cast<int>(parse_int(key, value));
  else if (key == "run.source_ion") source_ion = static_cast<int>(parse_int(key, value));
  else if (key == "run.n_pulses") n_pulses = static_cast<int>(parse_int(key, value));
  else if (key == "run.pulse_mode_frequency_hz") pulse_mode_frequency_hz = parse_double(key, value);
  else if (key == "run.beam_angle_deg") beam_angle_deg = parse_double(key, value);
  else if (key == "run.intensity_noise_per_hz") intensity_noise_per_hz = parse_double(key, value);
  else if (key == "run.bath_temp_left_mk") bath_temp_left_mk = parse_double(key, value);
  else if (key == "run.bath_temp_right_mk") bath_temp_right_mk = parse_double(key, value);
  else if (key == "run.bath_coupling_hz") bath_coupling_hz = parse_double(key, value);
  else throw ConfigError("unknown configuration key: " + key);
}

inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  using detail::format_value;
  return {
      {"species.mass_amu", format_value(mass_amu)},
      {"species.cooling_wavelength_nm", format_value(cooling_wavelength_nm)},
      {"species.natural_linewidth_hz", format_value(natural_linewidth_hz)},
      {"trap.axial_frequency_hz", format_value(axial_frequency_hz)},
      {"trap.ion_count", std::to_string(ion_count)},
      {"lattice.period_nm", format_value(period_nm)},
      {"lattice.depth_per_watt_h_mhz", format_value(depth_per_watt_h_mhz)},
      {"lattice.power_w", format_value(power_w)},
      {"lattice.power_min_w", format_value(power_min_w)},
      {"lattice.power_max_w", format_value(power_max_w)},
      {"lattice.power_step_w", format_value(power_step_w)},
      {"lattice.phase_origin_nm", format_value(phase_origin_nm)},
      {"fk.k_min", format_value(fk_k_min)},
      {"fk.k_max", format_value(fk_k_max)},
      {"fk.k_step", format_value(fk_k_step)},
      {"fk.particles", std::to_string(fk_particles)},
      {"fk.wells", std::to_string(fk_wells)},
      {"run.gradient_tol", format_value(gradient_tol)},
      {"run.dt", format_value(dt)},
      {"run.t_end", format_value(t_end)},
      {"run.seed", std::to_string(seed)},
      {"run.threshold_fraction", format_value(threshold_fraction)},
      {"run.delta_x_nm", format_value(delta_x_nm)},
      {"run.epsilon", format_value(epsilon)},
      {"run.perturbed_ion", std::to_string(perturbed_ion)},
      {"run.source_ion", std::to_string(source_ion)},
      {"run.n_pulses", std::to_string(n_pulses)},
      {"run.pulse_mode_frequency_hz", format_value(pulse_mode_frequency_hz)},
      {"run.beam_angle_deg", format_value(beam_angle_deg)},
      {"run.intensity_noise_per_hz", format_value(intensity_noise_per_hz)},
      {"run.bath_temp_left_mk", format_value(bath_temp_left_mk)},
      {"run.bath_temp_right_mk", format_value(bath_temp_right_mk)},
      {"run.bath_coupling_hz", format_value(bath_coupling_hz)},
  };
}

inline void ExperimentConfig::validate() const {
  species().validate();
  trap().validate();
  lattice().validate();
  if (gradient_tol <= 0.0) throw ConfigError("run.gradient_tol must be > 0");
  if (dt <= 0.0) throw ConfigError("run.dt must be > 0");
  if (t_end <= 0.0) throw ConfigError("run.t_end must be > 0");
  if (threshold_fraction <= 0.0 || threshold_fraction > 1.0)
    throw ConfigError("run.threshold_fraction must lie in (0, 1]");
  if (std::abs(epsilon) >= 1.0) throw ConfigError("run.epsilon must satisfy |eps| < 1");
  if (fk_particles < 2 || fk_wells < 1) throw ConfigError("fk.particles/wells out of range");
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

} // namespace detail

// Sectioned key = value file; '#' and ';' start comments. Unknown and
// duplicate keys are rejected.
inline void load_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line, section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key: " + key);
    config.set(key, value);
  }
}

// Precedence: CLI overrides > file > built-in defaults.
inline ExperimentConfig resolve(const std::string& config_path,
                                const std::vector<std::string>& overrides) {
  ExperimentConfig config;
  if (!config_path.empty()) load_config_file(config, config_path);
  for (const std::string& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + o);
    config.set(detail::trim(o.substr(0, eq)), detail::trim(o.substr(eq + 1)));
  }
  config.validate();
  return config;
}

} // namespace ionlattice
