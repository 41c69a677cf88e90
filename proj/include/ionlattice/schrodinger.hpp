#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ionlattice/constants.hpp"
#include "ionlattice/model.hpp"

// Grid solvers for the stationary and time-dependent Schroedinger problem:
// bound states of a single lattice well and a dense-grid propagation oracle.
namespace ionlattice {

namespace detail {

// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x,
// by the Sturm / LDL^T sign count.
inline int sturm_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double x) {
  const int n = static_cast<int>(diag.size());
  int count = 0;
  double q = diag[0] - x;
  if (q < 0.0) ++count;
  for (int i = 1; i < n; ++i) {
    double denom = q;
    if (std::abs(denom) < 1e-300) denom = denom < 0.0 ? -1e-300 : 1e-300;
    q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
    if (q < 0.0) ++count;
  }
  return count;
}

// k-th (0-based) eigenvalue by bisection on the Sturm count.
inline double tridiag_eigenvalue(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                                 int k) {
  double r = 0.0;
  for (int i = 0; i < diag.size(); ++i) {
    double s = std::abs(diag[i]);
    if (i > 0) s += std::abs(off[i - 1]);
    if (i + 1 < diag.size()) s += std::abs(off[i]);
    r = std::max(r, s);
  }
  double lo = -r, hi = r;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * r; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(diag, off, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Tridiagonal solve with partial pivoting (dgtsv-style), for inverse iteration
// near-singular shifts.
inline Eigen::VectorXd tridiag_solve_pivoted(Eigen::VectorXd lower, Eigen::VectorXd diag,
                                             Eigen::VectorXd upper, Eigen::VectorXd rhs) {
  const int n = static_cast<int>(diag.size());
  Eigen::VectorXd extra = Eigen::VectorXd::Zero(n); // second superdiagonal fill-in
  for (int i = 0; i < n - 1; ++i) {
    if (std::abs(lower[i]) > std::abs(diag[i])) {
      std::swap(diag[i], lower[i]);
      std::swap(upper[i], diag[i + 1]);
      if (i + 1 < n - 1) std::swap(extra[i], upper[i + 1]);
      std::swap(rhs[i], rhs[i + 1]);
    }
    if (diag[i] == 0.0) diag[i] = 1e-300;
    const double m = lower[i] / diag[i];
    diag[i + 1] -= m * upper[i];
    if (i + 1 < n - 1) upper[i + 1] -= m * extra[i];
    rhs[i + 1] -= m * rhs[i];
  }
  Eigen::VectorXd x(n);
  if (diag[n - 1] == 0.0) diag[n - 1] = 1e-300;
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  if (n >= 2) x[n - 2] = (rhs[n - 2] - upper[n - 2] * x[n - 1]) / diag[n - 2];
  for (int i = n - 3; i >= 0; --i)
    x[i] = (rhs[i] - upper[i] * x[i + 1] - extra[i] * x[i + 2]) / diag[i];
  return x;
}

inline Eigen::VectorXd tridiag_eigenvector(const Eigen::VectorXd& diag,
                                           const Eigen::VectorXd& off, double eigenvalue) {
  const int n = static_cast<int>(diag.size());
  const double shift = eigenvalue + 1e-11 * std::max(1.0, std::abs(eigenvalue));
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uni(rng);
  v.normalize();
  for (int it = 0; it < 4; ++it) {
    v = tridiag_solve_pivoted(off, diag.array() - shift, off, v);
    v.normalize();
  }
  return v;
}

} // namespace detail

struct BoundStateResult {
  std::vector<double> energies; // J, measured from the well bottom, ascending
  int count = 0;
  double anharmonic_shift = 0.0; // 1 - (E2 - E1) / hbar omega_loc
  double local_frequency = 0.0;  // rad/s
};

struct BoundStateOptions {
  int points_per_period = 1600;
  double participation_threshold = 0.5; // central-well weight required to count
  double convergence_rel_tol = 1e-4;    // per-level change allowed under refinement
};

namespace bound_detail {

struct Levels {
  std::vector<double> energies;      // from well bottom
  std::vector<double> participation; // central-well weight per level cluster
};

inline Levels solve_levels(double depth, double period, double mass, int points_per_period) {
  const int n = 3 * points_per_period;
  const double width = 3.0 * period;
  const double dx = width / (n + 1);
  Eigen::VectorXd diag(n), off(n - 1);
  const double t = constants::hbar * constants::hbar / (2.0 * mass * dx * dx);
  for (int i = 0; i < n; ++i) {
    const double x = -0.5 * width + (i + 1) * dx;
    diag[i] = 2.0 * t - depth * std::cos(constants::two_pi * x / period);
  }
  off.setConstant(-t);

  const double barrier = depth;       // V max
  const double bottom = -depth;       // V min
  std::vector<double> raw;
  for (int k = 0;; ++k) {
    const double e = detail::tridiag_eigenvalue(diag, off, k);
    if (e >= barrier || k > n - 1) break;
    raw.push_back(e);
    if (raw.size() > 400) throw std::runtime_error("bound_states: level count runaway");
  }

  // Merge the near-degenerate well multiplets; each multiplet carries one state
  // per well, so its summed central participation is ~1 for a genuine well level.
  const double wloc = constants::two_pi / period * std::sqrt(depth / mass);
  const double cluster_tol = 0.05 * constants::hbar * wloc;
  Levels out;
  std::size_t i = 0;
  while (i < raw.size()) {
    std::size_t j = i + 1;
    while (j < raw.size() && raw[j] - raw[j - 1] < cluster_tol) ++j;
    double mean = 0.0, part = 0.0;
    for (std::size_t m = i; m < j; ++m) {
      mean += raw[m];
      const Eigen::VectorXd v = detail::tridiag_eigenvector(diag, off, raw[m]);
      double central = 0.0;
      for (int g = 0; g < n; ++g) {
        const double x = -0.5 * width + (g + 1) * dx;
        if (std::abs(x) < 0.5 * period) central += v[g] * v[g];
      }
      part += central;
    }
    out.energies.push_back(mean / (j - i) - bottom);
    out.participation.push_back(part);
    i = j;
  }
  return out;
}

} // namespace bound_detail

// Stationary states of the sinusoidal potential over three periods with hard
// walls, counting levels localized in the central well and lying within the
// lattice depth K of the well bottom. Levels are Richardson-extrapolated from
// two grid resolutions and must agree under the refinement.
inline BoundStateResult bound_states(double depth, double period, const IonSpecies& species,
                                     const BoundStateOptions& opts = {}) {
  if (depth <= 0.0 || period <= 0.0)
    throw std::invalid_argument("bound_states: depth and period must be > 0");
  species.validate();
  const double wloc = constants::two_pi / period * std::sqrt(depth / species.mass);

  const auto coarse =
      bound_detail::solve_levels(depth, period, species.mass, opts.points_per_period);
  const auto fine =
      bound_detail::solve_levels(depth, period, species.mass, 2 * opts.points_per_period);

  BoundStateResult r;
  r.local_frequency = wloc;
  const std::size_t nlev = std::min(coarse.energies.size(), fine.energies.size());
  for (std::size_t k = 0; k < nlev; ++k) {
    if (fine.energies[k] >= depth) break; // keep levels within the depth K of the bottom
    if (std::abs(fine.energies[k] - coarse.energies[k]) >
        opts.convergence_rel_tol * constants::hbar * wloc)
      throw std::runtime_error("bound_states: level not converged under grid refinement");
    if (fine.participation[k] <= opts.participation_threshold) continue;
    r.energies.push_back((4.0 * fine.energies[k] - coarse.energies[k]) / 3.0);
  }
  r.count = static_cast<int>(r.energies.size());
  if (r.energies.size() >= 2)
    r.anharmonic_shift = 1.0 - (r.energies[1] - r.energies[0]) / (constants::hbar * wloc);
  return r;
}

// ---------------------------------------------------------------------------
// Dense-grid propagation oracle for 1-2 ions (Crank-Nicolson, dimensionless
// chain units with hbar_eff). Supplies the complex overlap including its phase.
// ---------------------------------------------------------------------------

struct GridOracleOptions {
  int points = 1024;         // per coordinate
  double half_width_sigmas = 6.0;
  double dt = 0.0;           // 0 = auto from the stiffest curvature
  bool verify_refinement = false;
  double refine_tol = 1e-5;
};

namespace grid_detail {

using Complexd = std::complex<double>;

inline Eigen::VectorXcd cn_tridiag_solve(const Eigen::VectorXcd& lower,
                                         const Eigen::VectorXcd& diag,
                                         const Eigen::VectorXcd& upper,
                                         Eigen::VectorXcd rhs) {
  const int n = static_cast<int>(diag.size());
  Eigen::VectorXcd d = diag, u = upper;
  for (int i = 0; i < n - 1; ++i) {
    const Complexd m = lower[i] / d[i];
    d[i + 1] -= m * u[i];
    rhs[i + 1] -= m * rhs[i];
  }
  Eigen::VectorXcd x(n);
  x[n - 1] = rhs[n - 1] / d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - u[i] * x[i + 1]) / d[i];
  return x;
}

// One Crank-Nicolson step of the pure kinetic operator along a line of points.
struct KineticCN {
  Eigen::VectorXcd lower, diag_plus, upper, diag_minus;

  KineticCN(int n, double t_coef, double dt, double hbar_eff) {
    const Complexd alpha = Complexd(0.0, 0.5 * dt / hbar_eff);
    lower = Eigen::VectorXcd::Constant(n - 1, alpha * (-t_coef));
    upper = lower;
    diag_plus = Eigen::VectorXcd::Constant(n, 1.0 + alpha * (2.0 * t_coef));
    diag_minus = Eigen::VectorXcd::Constant(n, 1.0 - alpha * (2.0 * t_coef));
  }

  void apply(Eigen::VectorXcd& psi) const {
    const int n = static_cast<int>(psi.size());
    Eigen::VectorXcd rhs(n);
    for (int i = 0; i < n; ++i) {
      Complexd v = diag_minus[i] * psi[i];
      if (i > 0) v -= upper[i - 1] * psi[i - 1];
      if (i + 1 < n) v -= upper[i] * psi[i + 1];
      rhs[i] = v;
    }
    psi = cn_tridiag_solve(lower, diag_plus, upper, rhs);
  }
};

} // namespace grid_detail

struct SpinPerturbation {
  int ion_index = 0;
  double relative_depth_change = 0.0; // epsilon, K_up = K (1 + eps) on that ion

  void validate() const {
    if (std::abs(relative_depth_change) >= 1.0)
      throw std::invalid_argument("SpinPerturbation: |epsilon| must be < 1");
  }
};

namespace grid_detail {

// Full dimensionless potential of the chain restricted to 1-2 ions, with the
// lattice depth on the flagged ion scaled by (1 + eps) on the up branch.
inline double potential(const ChainModel& model, const LatticeTerm& lt,
                        const SpinPerturbation& pert, bool up,
                        const Eigen::VectorXd& x) {
  double v = 0.5 * x.squaredNorm();
  for (int i = 0; i < x.size(); ++i) {
    double scale = (up && i == pert.ion_index) ? 1.0 + pert.relative_depth_change : 1.0;
    v += scale * model.lattice_potential(lt, x[i]);
  }
  if (x.size() == 2) v += 1.0 / (x[1] - x[0]);
  return v;
}

} // namespace grid_detail

// Complex overlap <psi_up(t)|psi_down(t)> for 1-2 ions: both branches start
// from the Gaussian ground state of the down-branch linearization and are
// propagated on a dense grid under the full anharmonic potentials.
inline std::complex<double> exact_overlap_grid(const ChainModel& model,
                                               const ChainState& state,
                                               const SpinPerturbation& pert, double t_end,
                                               const GridOracleOptions& opts = {}) {
  const int n = state.size();
  if (n < 1 || n > 2)
    throw std::invalid_argument("exact_overlap_grid: only 1-2 ions supported");
  pert.validate();
  if (pert.ion_index < 0 || pert.ion_index >= n)
    throw std::out_of_range("exact_overlap_grid: perturbed ion out of range");

  const double hbar_eff = model.scales().hbar_effective();
  const LatticeTerm lt = model.lattice_term(state.power);
  const Eigen::MatrixXd a = model.hessian(state);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues()[0] <= 0.0)
    throw std::runtime_error("exact_overlap_grid: down branch unstable at this state");

  // sqrt(A): width matrix of the Gaussian ground state.
  Eigen::MatrixXd sqrt_a = es.eigenvectors() *
                           es.eigenvalues().array().sqrt().matrix().asDiagonal() *
                           es.eigenvectors().transpose();

  // Ground-state position covariance fixes the grid extents per coordinate.
  Eigen::MatrixXd cov_x = 0.5 * hbar_eff *
                          (es.eigenvectors() *
                           es.eigenvalues().array().rsqrt().matrix().asDiagonal() *
                           es.eigenvectors().transpose());

  double wmax = std::sqrt(es.eigenvalues()[n - 1]);
  wmax = std::max(wmax, 1.0);
  const double dt = opts.dt > 0.0 ? opts.dt : (constants::two_pi / wmax) / 2000.0;
  const long nsteps = std::max<long>(1, std::llround(t_end / dt));
  const double dt_eff = t_end / nsteps;

  auto run = [&](int points_scale, double dt_scale) -> std::complex<double> {
    const int np = opts.points * points_scale;
    std::vector<Eigen::VectorXd> gr(n);
    std::vector<double> st(n);
    for (int i = 0; i < n; ++i) {
      const double half = opts.half_width_sigmas * std::sqrt(cov_x(i, i));
      gr[i].resize(np);
      st[i] = 2.0 * half / (np + 1);
      for (int p = 0; p < np; ++p)
        gr[i][p] = state.positions[i] - half + (p + 1) * st[i];
    }
    const double dts = dt_eff * dt_scale;
    const long steps_n = std::llround(t_end / dts);

    if (n == 1) {
      Eigen::VectorXcd down(np), up(np);
      const double w = sqrt_a(0, 0);
      for (int p = 0; p < np; ++p) {
        const double d = gr[0][p] - state.positions[0];
        down[p] = std::exp(-0.5 * w * d * d / hbar_eff);
      }
      down /= std::sqrt(down.squaredNorm() * st[0]);
      up = down;
      grid_detail::KineticCN kin(np, 0.5 * hbar_eff * hbar_eff / (st[0] * st[0]), dts,
                                 hbar_eff);
      Eigen::VectorXd vdown(np), vup(np);
      for (int p = 0; p < np; ++p) {
        Eigen::VectorXd x(1);
        x[0] = gr[0][p];
        vdown[p] = grid_detail::potential(model, lt, pert, false, x);
        vup[p] = grid_detail::potential(model, lt, pert, true, x);
      }
      auto step = [&](Eigen::VectorXcd& psi, const Eigen::VectorXd& v) {
        for (int p = 0; p < np; ++p)
          psi[p] *= std::exp(std::complex<double>(0.0, -0.5 * dts * v[p] / hbar_eff));
        kin.apply(psi);
        for (int p = 0; p < np; ++p)
          psi[p] *= std::exp(std::complex<double>(0.0, -0.5 * dts * v[p] / hbar_eff));
      };
      for (long s = 0; s < steps_n; ++s) {
        step(down, vdown);
        step(up, vup);
      }
      return (up.conjugate().cwiseProduct(down)).sum() * st[0];
    }

    // n == 2: Strang split, kinetic CN along each coordinate.
    Eigen::MatrixXcd down(np, np), up(np, np);
    for (int p = 0; p < np; ++p)
      for (int q = 0; q < np; ++q) {
        Eigen::Vector2d d(gr[0][p] - state.positions[0], gr[1][q] - state.positions[1]);
        down(p, q) = std::exp(-0.5 * d.dot(sqrt_a * d) / hbar_eff);
      }
    down /= std::sqrt(down.squaredNorm() * st[0] * st[1]);
    up = down;
    grid_detail::KineticCN kin0(np, 0.5 * hbar_eff * hbar_eff / (st[0] * st[0]), dts,
                                hbar_eff);
    grid_detail::KineticCN kin1(np, 0.5 * hbar_eff * hbar_eff / (st[1] * st[1]), dts,
                                hbar_eff);
    Eigen::MatrixXd vdown(np, np), vup(np, np);
    for (int p = 0; p < np; ++p)
      for (int q = 0; q < np; ++q) {
        Eigen::VectorXd x(2);
        x[0] = gr[0][p];
        x[1] = gr[1][q];
        if (x[1] <= x[0]) { // outside the ordered region; park on a high wall
          vdown(p, q) = vup(p, q) = 1e6;
          continue;
        }
        vdown(p, q) = grid_detail::potential(model, lt, pert, false, x);
        vup(p, q) = grid_detail::potential(model, lt, pert, true, x);
      }
    auto step = [&](Eigen::MatrixXcd& psi, const Eigen::MatrixXd& v) {
      for (int p = 0; p < np; ++p)
        for (int q = 0; q < np; ++q)
          psi(p, q) *= std::exp(std::complex<double>(0.0, -0.5 * dts * v(p, q) / hbar_eff));
      for (int q = 0; q < np; ++q) {
        Eigen::VectorXcd col = psi.col(q);
        kin0.apply(col);
        psi.col(q) = col;
      }
      for (int p = 0; p < np; ++p) {
        Eigen::VectorXcd row = psi.row(p).transpose();
        kin1.apply(row);
        psi.row(p) = row.transpose();
      }
      for (int p = 0; p < np; ++p)
        for (int q = 0; q < np; ++q)
          psi(p, q) *= std::exp(std::complex<double>(0.0, -0.5 * dts * v(p, q) / hbar_eff));
    };
    for (long s = 0; s < steps_n; ++s) {
      step(down, vdown);
      step(up, vup);
    }
    return (up.conjugate().cwiseProduct(down)).sum() * st[0] * st[1];
  };

  const std::complex<double> result = run(1, 1.0);
  if (opts.verify_refinement) {
    const std::complex<double> coarse = run(1, 2.0);
    if (std::abs(result - coarse) > opts.refine_tol * 4.0)
      throw std::runtime_error("exact_overlap_grid: not converged under refinement");
  }
  return result;
}

} // namespace ionlattice
