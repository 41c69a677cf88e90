#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ionlattice/model.hpp"
#include "ionlattice/modes.hpp"
#include "ionlattice/schrodinger.hpp"

// Gaussian motional states of the linearized chain and the spin-dependent
// interferometric overlap protocol. Quadratures are scaled so that [X, P] = i;
// a pure state has all symplectic eigenvalues equal to 1/2.
namespace ionlattice {

struct GaussianState {
  Eigen::VectorXd mean;       // (X_1..X_N, P_1..P_N)
  Eigen::MatrixXd covariance; // 2N x 2N symmetric

  int modes() const { return static_cast<int>(mean.size()) / 2; }
};

inline std::vector<double> symplectic_eigenvalues(const GaussianState& g) {
  const int n = g.modes();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  omega.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  omega.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  Eigen::EigenSolver<Eigen::MatrixXd> es(omega * g.covariance);
  std::vector<double> nu;
  for (int i = 0; i < 2 * n; ++i) {
    const double im = es.eigenvalues()[i].imag();
    if (im > 0.0) nu.push_back(im);
  }
  std::sort(nu.begin(), nu.end());
  return nu;
}

inline bool is_pure(const GaussianState& g, double tol = 1e-6) {
  for (double nu : symplectic_eigenvalues(g))
    if (std::abs(nu - 0.5) > tol) return false;
  return true;
}

// Ground state of the linearized chain: variance 1/2 per normal mode,
// transformed back to ion coordinates.
inline GaussianState ground_state(const ModeSpectrum& spectrum) {
  if (!spectrum.stable())
    throw std::invalid_argument("ground_state: unstable mode present");
  const int n = spectrum.size();
  const Eigen::MatrixXd& v = spectrum.vectors;
  GaussianState g;
  g.mean = Eigen::VectorXd::Zero(2 * n);
  g.covariance = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  g.covariance.topLeftCorner(n, n) =
      0.5 * v * spectrum.frequencies.cwiseInverse().asDiagonal() * v.transpose();
  g.covariance.bottomRightCorner(n, n) =
      0.5 * v * spectrum.frequencies.asDiagonal() * v.transpose();
  return g;
}

// Symplectic propagator of H = P^T P / 2 + X^T A X / 2 + g^T X over time t.
// The mean follows the classical driven-oscillator orbit about the displaced
// equilibrium X* = -A^{-1} g; the covariance is conjugated by the propagator.
inline GaussianState evolve_gaussian(const GaussianState& state, const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& linear_force, double t) {
  const int n = state.modes();
  if (a.rows() != n || linear_force.size() != n)
    throw std::invalid_argument("evolve_gaussian: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues()[0] <= 0.0)
    throw std::runtime_error("evolve_gaussian: unstable quadratic Hamiltonian");
  const Eigen::VectorXd w = es.eigenvalues().array().sqrt();
  const Eigen::MatrixXd& v = es.eigenvectors();

  Eigen::VectorXd c(n), sw(n), ws(n);
  for (int i = 0; i < n; ++i) {
    c[i] = std::cos(w[i] * t);
    sw[i] = std::sin(w[i] * t) / w[i];
    ws[i] = -w[i] * std::sin(w[i] * t);
  }
  Eigen::MatrixXd s(2 * n, 2 * n);
  s.topLeftCorner(n, n) = v * c.asDiagonal() * v.transpose();
  s.topRightCorner(n, n) = v * sw.asDiagonal() * v.transpose();
  s.bottomLeftCorner(n, n) = v * ws.asDiagonal() * v.transpose();
  s.bottomRightCorner(n, n) = s.topLeftCorner(n, n);

  const Eigen::VectorXd x_star = es.eigenvectors() *
                                 (es.eigenvalues().cwiseInverse().asDiagonal() *
                                  (es.eigenvectors().transpose() * (-linear_force)));
  Eigen::VectorXd shifted = state.mean;
  shifted.head(n) -= x_star;

  GaussianState out;
  out.mean = s * shifted;
  out.mean.head(n) += x_star;
  out.covariance = s * state.covariance * s.transpose();
  return out;
}

// |<psi1|psi2>| for pure Gaussian states.
inline double overlap_magnitude(const GaussianState& g1, const GaussianState& g2,
                                double purity_tol = 1e-6) {
  if (g1.modes() != g2.modes())
    throw std::invalid_argument("overlap_magnitude: dimension mismatch");
  if (!is_pure(g1, purity_tol) || !is_pure(g2, purity_tol))
    throw std::invalid_argument("overlap_magnitude: non-pure input state");
  const Eigen::MatrixXd sum = g1.covariance + g2.covariance;
  const Eigen::VectorXd delta = g1.mean - g2.mean;
  Eigen::LLT<Eigen::MatrixXd> llt(sum);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("overlap_magnitude: covariance sum not positive definite");
  double log_det = 0.0;
  for (int i = 0; i < sum.rows(); ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = delta.dot(llt.solve(delta));
  return std::exp(-0.25 * log_det - 0.25 * quad);
}

// Ramsey fringe, P_up(phi) = (1 + Re(i e^{i phi} C e^{i theta})) / 2.
inline double p_up(double contrast, double overlap_phase, double phi) {
  if (contrast < 0.0 || contrast > 1.0 + 1e-12)
    throw std::invalid_argument("p_up: contrast must lie in [0, 1]");
  return 0.5 * (1.0 - contrast * std::sin(phi + overlap_phase));
}

struct FidelityScan {
  std::vector<double> times;    // units of 1/omega_a
  std::vector<double> contrast; // |<psi_up|psi_down>|
};

// Spin-dependent evolution from the common chain ground state: the down branch
// keeps the unperturbed Hessian, the up branch adds the epsilon-scaled lattice
// curvature and residual linear force on the flagged ion, both linearized at
// the down equilibrium.
inline FidelityScan fidelity_scan(const ChainModel& model, const ChainState& state,
                                  const SpinPerturbation& pert,
                                  const std::vector<double>& t_grid,
                                  const ModeOptions& mode_opts = {}) {
  pert.validate();
  if (pert.ion_index < 0 || pert.ion_index >= state.size())
    throw std::out_of_range("fidelity_scan: perturbed ion out of range");

  const ModeSpectrum spectrum = normal_modes(model, state, mode_opts);
  const Eigen::MatrixXd a_down = model.hessian(state);
  const LatticeTerm lt = model.lattice_term(state.power);
  const double x_j = state.positions[pert.ion_index];
  const double eps = pert.relative_depth_change;

  Eigen::MatrixXd a_up = a_down;
  a_up(pert.ion_index, pert.ion_index) += eps * model.lattice_curvature(lt, x_j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(a_up);
  if (check.eigenvalues()[0] <= 0.0)
    throw std::runtime_error(
        "fidelity_scan: up branch unstable at the down equilibrium (near criticality)");

  const double hbar_eff = model.scales().hbar_effective();
  Eigen::VectorXd force_up = Eigen::VectorXd::Zero(state.size());
  force_up[pert.ion_index] = eps * model.lattice_slope(lt, x_j) / std::sqrt(hbar_eff);
  const Eigen::VectorXd force_down = Eigen::VectorXd::Zero(state.size());

  const GaussianState initial = ground_state(spectrum);
  FidelityScan scan;
  for (double t : t_grid) {
    const GaussianState down = evolve_gaussian(initial, a_down, force_down, t);
    const GaussianState up = evolve_gaussian(initial, a_up, force_up, t);
    scan.times.push_back(t);
    scan.contrast.push_back(overlap_magnitude(up, down));
  }
  return scan;
}

} // namespace ionlattice
