#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ionlattice/constants.hpp"

// Ion chain in a harmonic axial trap with a superimposed optical lattice.
// All chain computations are dimensionless: lengths in l0 = (e^2/4pi eps0 m wa^2)^(1/3),
// times in 1/wa, energies in m wa^2 l0^2. SI conversions happen only at the API boundary.
namespace ionlattice {

struct IonSpecies {
  double mass = 0.0;               // kg
  double cooling_wavelength = 0.0; // m, dipole cooling line
  double natural_linewidth = 0.0;  // rad/s, Gamma of the S-P transition

  void validate() const {
    if (mass <= 0.0 || cooling_wavelength <= 0.0 || natural_linewidth <= 0.0)
      throw std::invalid_argument("IonSpecies: all fields must be strictly positive");
  }

  // 40Ca+ with the 397 nm dipole line, Gamma = 2pi * 21.6 MHz.
  static IonSpecies calcium() {
    return {39.9625909 * constants::atomic_mass_unit, 397e-9,
            constants::two_pi * 21.6e6};
  }
};

struct TrapConfig {
  double axial_frequency = 0.0; // rad/s, omega_a
  int ion_count = 0;

  void validate() const {
    if (axial_frequency <= 0.0)
      throw std::invalid_argument("TrapConfig: axial_frequency must be > 0");
    if (ion_count < 1)
      throw std::invalid_argument("TrapConfig: ion_count must be >= 1");
  }
};

struct LatticeConfig {
  double period = 0.0;         // m
  double depth_per_watt = 0.0; // J/W, K = depth_per_watt * P
  double power = 0.0;          // W
  double phase_origin = 0.0;   // m, position of a lattice maximum

  void validate() const {
    if (period <= 0.0)
      throw std::invalid_argument("LatticeConfig: period must be > 0");
    if (depth_per_watt < 0.0 || power < 0.0)
      throw std::invalid_argument("LatticeConfig: depth_per_watt and power must be >= 0");
  }
};

// K = k_P * P, linear in power.
inline double depth_from_power(const LatticeConfig& lattice) {
  return lattice.depth_per_watt * lattice.power;
}

inline double depth_from_power(const LatticeConfig& lattice, double power) {
  return lattice.depth_per_watt * power;
}

// Curvature frequency at a lattice minimum, omega_loc = (2pi/lambda) sqrt(K/m).
inline double local_frequency(double depth, const LatticeConfig& lattice,
                              const IonSpecies& species) {
  return constants::two_pi / lattice.period * std::sqrt(depth / species.mass);
}

struct UnitScales {
  double length_unit = 0.0; // m, l0
  double time_unit = 0.0;   // s, 1/omega_a
  double energy_unit = 0.0; // J, m omega_a^2 l0^2

  // Dimensionless hbar in chain units; sets the quantum scale of the chain.
  double hbar_effective() const { return constants::hbar / (energy_unit * time_unit); }
};

inline UnitScales scales_from(const IonSpecies& species, const TrapConfig& trap) {
  species.validate();
  trap.validate();
  const double w2 = trap.axial_frequency * trap.axial_frequency;
  const double l0 = std::cbrt(constants::coulomb_prefactor / (species.mass * w2));
  return {l0, 1.0 / trap.axial_frequency, species.mass * w2 * l0 * l0};
}

// Positions are dimensionless (x_i / l0), strictly ascending.
struct ChainState {
  Eigen::VectorXd positions;
  double power = 0.0; // W

  int size() const { return static_cast<int>(positions.size()); }

  bool ordered() const {
    for (int i = 0; i + 1 < size(); ++i)
      if (positions[i + 1] <= positions[i]) return false;
    return true;
  }
};

// Dimensionless lattice parameters at a fixed power.
struct LatticeTerm {
  double depth = 0.0;  // K / (m wa^2 l0^2)
  double period = 1.0; // lambda / l0
  double phase = 0.0;  // 2pi * phase_origin / lambda
};

class ChainModel {
public:
  ChainModel(IonSpecies species, TrapConfig trap, LatticeConfig lattice)
      : species_(species), trap_(trap), lattice_(lattice),
        scales_(scales_from(species, trap)) {
    lattice.validate();
  }

  const IonSpecies& species() const { return species_; }
  const TrapConfig& trap() const { return trap_; }
  const LatticeConfig& lattice() const { return lattice_; }
  const UnitScales& scales() const { return scales_; }
  int ion_count() const { return trap_.ion_count; }

  LatticeTerm lattice_term(double power) const {
    LatticeTerm t;
    t.depth = depth_from_power(lattice_, power) / scales_.energy_unit;
    t.period = lattice_.period / scales_.length_unit;
    t.phase = constants::two_pi * lattice_.phase_origin / lattice_.period;
    return t;
  }

  // Lattice potential of a single ion, max at the phase origin: K cos(2pi x/lambda - phi).
  double lattice_potential(const LatticeTerm& lt, double x) const {
    return lt.depth * std::cos(constants::two_pi * x / lt.period - lt.phase);
  }
  double lattice_slope(const LatticeTerm& lt, double x) const {
    const double k = constants::two_pi / lt.period;
    return -lt.depth * k * std::sin(k * x - lt.phase);
  }
  double lattice_curvature(const LatticeTerm& lt, double x) const {
    const double k = constants::two_pi / lt.period;
    return -lt.depth * k * k * std::cos(k * x - lt.phase);
  }

  double total_energy(const ChainState& state) const {
    require_ordered(state);
    const LatticeTerm lt = lattice_term(state.power);
    const auto& x = state.positions;
    double e = 0.5 * x.squaredNorm();
    for (int i = 0; i < x.size(); ++i) e += lattice_potential(lt, x[i]);
    for (int i = 0; i < x.size(); ++i)
      for (int j = i + 1; j < x.size(); ++j) {
        const double d = x[j] - x[i];
        if (d == 0.0) throw std::domain_error("total_energy: overlapping ions");
        e += 1.0 / d;
      }
    return e;
  }

  Eigen::VectorXd gradient(const ChainState& state) const {
    require_ordered(state);
    const LatticeTerm lt = lattice_term(state.power);
    const auto& x = state.positions;
    Eigen::VectorXd g = x;
    for (int i = 0; i < x.size(); ++i) g[i] += lattice_slope(lt, x[i]);
    for (int i = 0; i < x.size(); ++i)
      for (int j = i + 1; j < x.size(); ++j) {
        const double d = x[j] - x[i];
        if (d == 0.0) throw std::domain_error("gradient: overlapping ions");
        const double f = 1.0 / (d * d);
        g[i] += f;
        g[j] -= f;
      }
    return g;
  }

  // Coupling matrix A_ij = d^2 H / dx_i dx_j, dimensionless (units of omega_a^2).
  Eigen::MatrixXd hessian(const ChainState& state) const {
    require_ordered(state);
    const LatticeTerm lt = lattice_term(state.power);
    const auto& x = state.positions;
    const int n = state.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = 1.0 + lattice_curvature(lt, x[i]);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = x[j] - x[i];
        if (d == 0.0) throw std::domain_error("hessian: overlapping ions");
        const double c = 2.0 / (d * d * d);
        h(i, i) += c;
        h(j, j) += c;
        h(i, j) -= c;
        h(j, i) -= c;
      }
    return h;
  }

private:
  static void require_ordered(const ChainState& state) {
    if (!state.ordered())
      throw std::invalid_argument("ChainState: positions must be strictly increasing");
  }

  IonSpecies species_;
  TrapConfig trap_;
  LatticeConfig lattice_;
  UnitScales scales_;
};

} // namespace ionlattice
