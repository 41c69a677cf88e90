#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ionlattice/constants.hpp"

// Pure Frenkel-Kontorova reference chain: identical masses and springs on a ring,
// perturbed by a sinusoidal potential. A golden-mean convergent (N particles over
// M wells) emulates the incommensurate winding on periodic boundaries.
namespace ionlattice::fk {

struct FKChainParams {
  double mass = 1.0;
  double spring_constant = 1.0;
  double natural_length = 1.0;   // a; the chain length is fixed at N * a
  double lattice_strength = 0.0; // K
  double lattice_period = 1.0;   // lambda
  int ion_count = 34;

  double winding_ratio() const { return natural_length / lattice_period; }

  // 34 particles over 21 wells: lambda = 34 a / 21, a/lambda = 21/34.
  static FKChainParams golden_convergent(int particles = 34, int wells = 21) {
    FKChainParams p;
    p.ion_count = particles;
    p.natural_length = 1.0;
    p.lattice_period = static_cast<double>(particles) / wells;
    return p;
  }
};

inline double energy(const FKChainParams& p, const Eigen::VectorXd& x) {
  const int n = p.ion_count;
  const double L = n * p.natural_length;
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? x[i + 1] : x[0] + L;
    const double stretch = next - x[i] - p.natural_length;
    e += 0.5 * p.spring_constant * stretch * stretch;
    e += p.lattice_strength * std::cos(constants::two_pi * x[i] / p.lattice_period);
  }
  return e;
}

inline Eigen::VectorXd gradient(const FKChainParams& p, const Eigen::VectorXd& x) {
  const int n = p.ion_count;
  const double L = n * p.natural_length;
  const double k = constants::two_pi / p.lattice_period;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? x[i + 1] : x[0] + L;
    const double stretch = next - x[i] - p.natural_length;
    g[i] -= p.spring_constant * stretch;
    g[(i + 1) % n] += p.spring_constant * stretch;
    g[i] -= p.lattice_strength * k * std::sin(k * x[i]);
  }
  return g;
}

inline Eigen::MatrixXd hessian(const FKChainParams& p, const Eigen::VectorXd& x) {
  const int n = p.ion_count;
  const double k = constants::two_pi / p.lattice_period;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    h(i, i) += p.spring_constant;
    h(j, j) += p.spring_constant;
    h(i, j) -= p.spring_constant;
    h(j, i) -= p.spring_constant;
    h(i, i) -= p.lattice_strength * k * k * std::cos(k * x[i]);
  }
  return h;
}

struct FKRelaxResult {
  Eigen::VectorXd positions;
  double gradient_norm = 0.0;
  bool converged = false;
  double lowest_frequency = 0.0; // sqrt(lambda_min / m), 0 if lambda_min <= 0
  double lowest_eigenvalue = 0.0;
};

// Levenberg-damped Newton descent; the damping also absorbs the near-zero
// translation mode of the sliding phase.
inline FKRelaxResult relax(const FKChainParams& p, Eigen::VectorXd x,
                           double tol = 1e-12, int max_iterations = 20000) {
  double e = energy(p, x);
  double mu = 0.0;
  Eigen::VectorXd g = gradient(p, x);
  const double cap = 0.25 * p.lattice_period;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < tol) break;
    Eigen::MatrixXd h = hessian(p, x);
    h.diagonal().array() += std::max(mu, 1e-13);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      mu = std::max(4.0 * mu, 1e-6);
      continue;
    }
    Eigen::VectorXd step = llt.solve(-g);
    const double maxcomp = step.lpNorm<Eigen::Infinity>();
    double scale = maxcomp > cap ? cap / maxcomp : 1.0;
    // Accept on energy descent, or on gradient descent once the energy change
    // falls below the floating-point floor of the total energy.
    const double slack = 1e-14 * (std::abs(e) + 1.0);
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = x + scale * step;
      const double ec = energy(p, cand);
      const Eigen::VectorXd gc = gradient(p, cand);
      if (ec < e || (ec <= e + slack && gc.lpNorm<Eigen::Infinity>() < gnorm)) {
        x = cand;
        e = ec;
        g = gc;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (accepted)
      mu *= 0.25;
    else
      mu = std::max(4.0 * mu, 1e-6);
  }

  FKRelaxResult r;
  r.positions = x;
  r.gradient_norm = g.lpNorm<Eigen::Infinity>();
  r.converged = r.gradient_norm < tol;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian(p, x));
  r.lowest_eigenvalue = es.eigenvalues()[0];
  r.lowest_frequency =
      r.lowest_eigenvalue > 0.0 ? std::sqrt(r.lowest_eigenvalue / p.mass) : 0.0;
  return r;
}

struct FKSweepPoint {
  double lattice_strength = 0.0;
  double lowest_frequency = 0.0;
  FKRelaxResult result;
};

// Relaxed chain per lattice strength, continued from the previous solution.
// Below the Aubry point the lowest phonon stays at the numerical floor; above
// it a finite gap opens.
inline std::vector<FKSweepPoint> reference_sweep(FKChainParams params,
                                                 const std::vector<double>& k_grid,
                                                 double tol = 1e-12) {
  Eigen::VectorXd x(params.ion_count);
  for (int i = 0; i < params.ion_count; ++i) x[i] = i * params.natural_length;
  std::vector<FKSweepPoint> out;
  for (double k : k_grid) {
    params.lattice_strength = k;
    FKRelaxResult r = relax(params, x, tol);
    if (!r.converged)
      throw std::runtime_error("fk reference_sweep: relaxation failed at K = " +
                               std::to_string(k));
    x = r.positions;
    out.push_back({k, r.lowest_frequency, std::move(r)});
  }
  return out;
}

// First grid point whose phonon gap exceeds the floor; recorded as the
// transition estimate for regression baselines.
inline double critical_strength(const std::vector<FKSweepPoint>& sweep,
                                double frequency_floor = 1e-6) {
  for (const auto& pt : sweep)
    if (pt.lowest_frequency > frequency_floor) return pt.lattice_strength;
  throw std::runtime_error("fk critical_strength: no gap opened inside the sweep");
}

} // namespace ionlattice::fk
