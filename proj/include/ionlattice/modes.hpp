#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ionlattice/model.hpp"
#include "ionlattice/statics.hpp"

// Normal-mode analysis of the linearized chain.
namespace ionlattice {

enum class Parity { even, odd, none };

struct ModeSpectrum {
  Eigen::VectorXd eigenvalues;  // omega_n^2 in units of omega_a^2, ascending
  Eigen::VectorXd frequencies;  // sqrt(|omega_n^2|), units of omega_a
  Eigen::MatrixXd vectors;      // orthonormal eigenvectors, one per column
  std::vector<Parity> parities;
  std::vector<bool> imaginary;  // true where omega_n^2 < 0 (unstable direction)
  double axial_frequency = 0.0; // rad/s, conversion factor to SI

  int size() const { return static_cast<int>(frequencies.size()); }
  bool stable() const {
    for (bool b : imaginary)
      if (b) return false;
    return true;
  }
  double frequency_si(int n) const { return frequencies[n] * axial_frequency; }
};

inline Parity parity_of(const Eigen::VectorXd& v, double tol = 1e-8) {
  const Eigen::VectorXd r = v.reverse();
  if ((r - v).lpNorm<Eigen::Infinity>() < tol) return Parity::even;
  if ((r + v).lpNorm<Eigen::Infinity>() < tol) return Parity::odd;
  return Parity::none;
}

namespace detail {

// Within a numerically degenerate cluster the solver returns an arbitrary
// basis; rebuild it from the even/odd projections so parity labels are stable.
inline void parity_align_cluster(Eigen::MatrixXd& vectors, int first, int count) {
  Eigen::MatrixXd block = vectors.middleCols(first, count);
  Eigen::MatrixXd even = 0.5 * (block + block.colwise().reverse());
  Eigen::MatrixXd odd = 0.5 * (block - block.colwise().reverse());
  std::vector<Eigen::VectorXd> basis;
  auto add_from = [&](const Eigen::MatrixXd& cand) {
    for (int c = 0; c < cand.cols(); ++c) {
      Eigen::VectorXd v = cand.col(c);
      for (const auto& b : basis) v -= b.dot(v) * b;
      const double norm = v.norm();
      if (norm > 1e-6) basis.push_back(v / norm);
    }
  };
  add_from(even);
  add_from(odd);
  if (static_cast<int>(basis.size()) != count) return; // projections degenerate, keep as-is
  for (int c = 0; c < count; ++c) vectors.col(first + c) = basis[c];
}

} // namespace detail

struct ModeOptions {
  double relaxed_tol = 1e-8;       // gradient max-norm accepted as "relaxed"
  double degeneracy_rel_gap = 1e-9;
};

// Eigendecomposition of the coupling matrix A_ij at an equilibrium. Negative
// eigenvalues are reported as imaginary-frequency flags, never clamped.
inline ModeSpectrum normal_modes(const ChainModel& model, const ChainState& state,
                                 const ModeOptions& opts = {}) {
  const Eigen::VectorXd g = model.gradient(state);
  if (g.lpNorm<Eigen::Infinity>() >= opts.relaxed_tol)
    throw std::invalid_argument("normal_modes: state is not relaxed; linearization invalid");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.hessian(state));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("normal_modes: eigendecomposition failed");

  ModeSpectrum s;
  s.eigenvalues = es.eigenvalues();
  s.vectors = es.eigenvectors();
  s.axial_frequency = model.trap().axial_frequency;
  const int n = s.eigenvalues.size();
  s.frequencies.resize(n);
  for (int i = 0; i < n; ++i) {
    s.frequencies[i] = std::sqrt(std::abs(s.eigenvalues[i]));
    s.imaginary.push_back(s.eigenvalues[i] < 0.0);
  }

  const double scale = std::abs(s.eigenvalues[n - 1]) + 1e-300;
  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n &&
           std::abs(s.eigenvalues[end] - s.eigenvalues[end - 1]) < opts.degeneracy_rel_gap * scale)
      ++end;
    if (end - start > 1) detail::parity_align_cluster(s.vectors, start, end - start);
    start = end;
  }
  for (int i = 0; i < n; ++i) s.parities.push_back(parity_of(s.vectors.col(i)));
  return s;
}

struct SpectrumTable {
  std::vector<double> powers;             // W
  std::vector<ModeSpectrum> spectra;
};

inline SpectrumTable spectrum_sweep(const ChainModel& model, const ContinuationSweep& sweep,
                                    const ModeOptions& opts = {}) {
  SpectrumTable t;
  for (std::size_t i = 0; i < sweep.powers.size(); ++i) {
    t.powers.push_back(sweep.powers[i]);
    t.spectra.push_back(normal_modes(model, sweep.states[i].state, opts));
  }
  return t;
}

} // namespace ionlattice
