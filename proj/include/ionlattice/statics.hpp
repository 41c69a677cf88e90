#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ionlattice/model.hpp"

// Equilibrium finding with lattice-power continuation and pinning diagnostics.
namespace ionlattice {

struct RelaxOptions {
  double gradient_tol = 1e-10; // max-norm of the dimensionless gradient
  double max_step = 0.25;      // per-ion displacement cap per iteration (dimensionless)
  int max_iterations = 50000;
  bool escape_saddles = true;  // kick along unstable directions until a minimum is reached
  double uniform_force = 0.0;  // extra -f * sum(x_i) term (dimensionless), used for depinning
};

struct EquilibriumResult {
  ChainState state;
  double gradient_norm = 0.0; // max-norm at exit
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline double objective(const ChainModel& model, const ChainState& s, double f) {
  return model.total_energy(s) - f * s.positions.sum();
}

inline Eigen::VectorXd objective_gradient(const ChainModel& model, const ChainState& s,
                                          double f) {
  Eigen::VectorXd g = model.gradient(s);
  g.array() -= f;
  return g;
}

inline bool strictly_increasing(const Eigen::VectorXd& x) {
  for (int i = 0; i + 1 < x.size(); ++i)
    if (x[i + 1] <= x[i]) return false;
  return true;
}

} // namespace detail

// Damped Newton descent with a hard per-ion step cap and backtracking on energy
// increase. The cap keeps every ion within its lattice well during one iteration
// (pass max_step = lambda/4 in chain units when the lattice is on).
inline EquilibriumResult relax(const ChainModel& model, const ChainState& initial,
                               const RelaxOptions& opts = {}) {
  if (!initial.ordered())
    throw std::invalid_argument("relax: initial positions must be strictly increasing");

  ChainState s = initial;
  const double f = opts.uniform_force;
  double energy = detail::objective(model, s, f);
  double mu = 0.0; // Levenberg damping
  int iter = 0;

  Eigen::VectorXd g = detail::objective_gradient(model, s, f);
  while (iter < opts.max_iterations) {
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
      if (!opts.escape_saddles) break;
      // Stationary point reached; leave it if any curvature direction is unstable.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.hessian(s));
      if (es.eigenvalues()[0] >= -1e-12) break;
      // Walk downhill along the unstable direction with doubling steps until
      // the energy stops decreasing: this lands near the adjacent valley
      // floor, well outside the Newton basin of the saddle just left.
      const double kick = 0.05 * model.lattice_term(s.power).period;
      bool escaped = false;
      for (double sign : {1.0, -1.0}) {
        const Eigen::VectorXd dir = sign * es.eigenvectors().col(0);
        double best_len = 0.0, best_e = energy;
        for (double len = kick; len <= 64.0 * kick; len *= 2.0) {
          Eigen::VectorXd cand = s.positions + len * dir;
          if (!detail::strictly_increasing(cand)) break;
          const double e = detail::objective(model, ChainState{cand, s.power}, f);
          if (e >= best_e) break;
          best_e = e;
          best_len = len;
        }
        if (best_len > 0.0) {
          s.positions += best_len * dir;
          energy = best_e;
          g = detail::objective_gradient(model, s, f);
          escaped = true;
          break;
        }
      }
      if (!escaped) break;
      ++iter;
      continue;
    }

    // Close to a stationary point, switch to an undamped Newton step accepted
    // on gradient decrease alone: descent-only backtracking cannot settle onto
    // a saddle (escape_saddles deals with saddles after convergence), and near
    // a minimum the energy test hits the floating-point floor.
    if (g.lpNorm<Eigen::Infinity>() < 1e-4) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(model.hessian(s));
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd nstep = ldlt.solve(-g);
        const double ncomp = nstep.lpNorm<Eigen::Infinity>();
        double nscale = ncomp > opts.max_step ? opts.max_step / ncomp : 1.0;
        const double gn = g.lpNorm<Eigen::Infinity>();
        bool polished = false;
        for (int bt = 0; bt < 30; ++bt) {
          Eigen::VectorXd cand = s.positions + nscale * nstep;
          if (detail::strictly_increasing(cand)) {
            ChainState trial{cand, s.power};
            const Eigen::VectorXd g_trial = detail::objective_gradient(model, trial, f);
            if (g_trial.lpNorm<Eigen::Infinity>() < gn) {
              s = trial;
              g = g_trial;
              energy = detail::objective(model, s, f);
              polished = true;
              break;
            }
          }
          nscale *= 0.5;
        }
        if (polished) {
          ++iter;
          continue;
        }
      }
    }

    Eigen::MatrixXd h = model.hessian(s);
    if (mu > 0.0) h.diagonal().array() += mu;
    Eigen::VectorXd step;
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(-g);
    } else {
      mu = std::max(4.0 * mu, 1e-6 * h.diagonal().maxCoeff());
      ++iter;
      continue;
    }

    const double maxcomp = step.lpNorm<Eigen::Infinity>();
    double scale = maxcomp > opts.max_step ? opts.max_step / maxcomp : 1.0;

    // Descent acceptance with a roundoff slack: near the minimum the energy
    // improvement drops below the floating-point floor of the total energy, so
    // a step that shrinks the gradient is also accepted.
    const double slack = 1e-14 * (std::abs(energy) + 1.0);
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = s.positions + scale * step;
      if (detail::strictly_increasing(cand)) {
        ChainState trial{cand, s.power};
        const double e_trial = detail::objective(model, trial, f);
        const Eigen::VectorXd g_trial = detail::objective_gradient(model, trial, f);
        if (e_trial < energy ||
            (e_trial <= energy + slack && g_trial.lpNorm<Eigen::Infinity>() < gnorm)) {
          s = trial;
          energy = e_trial;
          g = g_trial;
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (accepted) {
      mu *= 0.25;
      if (mu < 1e-14) mu = 0.0;
    } else {
      mu = std::max(4.0 * mu, 1e-6 * model.hessian(s).diagonal().maxCoeff());
    }
    ++iter;
  }

  EquilibriumResult r;
  r.state = s;
  r.gradient_norm = g.lpNorm<Eigen::Infinity>();
  r.converged = r.gradient_norm < opts.gradient_tol;
  r.iterations = iter;
  return r;
}

// Equally spaced starting guess for the bare Coulomb chain; the K = 0 energy is
// convex on the ordered cone so any ordered guess converges.
inline ChainState initial_guess(int n) {
  ChainState s;
  s.positions.resize(n);
  const double d = n > 1 ? 2.018 / std::pow(n, 0.559) * 1.8 : 1.0;
  for (int i = 0; i < n; ++i) s.positions[i] = d * (i - 0.5 * (n - 1));
  s.power = 0.0;
  return s;
}

inline EquilibriumResult relax_bare_chain(const ChainModel& model,
                                          const RelaxOptions& base = {}) {
  RelaxOptions opts = base;
  opts.max_step = 1.0; // no lattice wells to hop at K = 0
  ChainState guess = initial_guess(model.ion_count());
  guess.power = 0.0;
  return relax(model, guess, opts);
}

struct ContinuationSweep {
  std::vector<double> powers; // W, ascending
  std::vector<EquilibriumResult> states;
};

struct SweepOptions {
  RelaxOptions relax;
  double hop_guard_fraction = 0.5;    // error if an ion moves > fraction * lambda per step
  double refine_fraction = 0.125;     // halve the power step when displacement exceeds this
  int max_refinement_depth = 24;
};

namespace detail {

inline EquilibriumResult continuation_step(const ChainModel& model,
                                           const EquilibriumResult& from, double power,
                                           const SweepOptions& opts, int depth) {
  const double lambda = model.lattice_term(power).period;
  RelaxOptions ropts = opts.relax;
  ropts.max_step = std::min(ropts.max_step, 0.25 * lambda);
  ChainState init = from.state;
  init.power = power;
  EquilibriumResult r = relax(model, init, ropts);
  if (!r.converged)
    throw std::runtime_error("sweep_power: relaxation failed at P = " +
                             std::to_string(power) + " W");
  const double moved =
      (r.state.positions - from.state.positions).lpNorm<Eigen::Infinity>();
  if (moved > opts.refine_fraction * lambda && depth < opts.max_refinement_depth) {
    const double mid = 0.5 * (from.state.power + power);
    EquilibriumResult half = continuation_step(model, from, mid, opts, depth + 1);
    return continuation_step(model, half, power, opts, depth + 1);
  }
  if (moved > opts.hop_guard_fraction * lambda)
    throw std::runtime_error("sweep_power: ion hopped a lattice site at P = " +
                             std::to_string(power) + " W");
  return r;
}

} // namespace detail

// Quasi-static continuation: each power point is relaxed from the previous
// solution, with automatic power-step halving when ions move too far.
inline ContinuationSweep sweep_power(const ChainModel& model, const EquilibriumResult& base,
                                     const std::vector<double>& p_grid,
                                     const SweepOptions& opts = {}) {
  if (!base.converged)
    throw std::invalid_argument("sweep_power: base state is not converged");
  ContinuationSweep sweep;
  EquilibriumResult current = base;
  for (double p : p_grid) {
    if (p < current.state.power)
      throw std::invalid_argument("sweep_power: power grid must be ascending");
    if (p > current.state.power)
      current = detail::continuation_step(model, current, p, opts, 0);
    sweep.powers.push_back(p);
    sweep.states.push_back(current);
  }
  return sweep;
}

struct HullFunction {
  std::vector<double> phases;              // m, in [0, lambda), relative to the lattice origin
  std::vector<double> reference_positions; // m, P = 0 equilibria
};

// Ion positions modulo the lattice period. A gap around the maxima (phase 0)
// signals the pinned phase.
inline HullFunction hull(const ChainModel& model, const ChainState& state,
                         const ChainState& reference) {
  if (state.size() != reference.size())
    throw std::invalid_argument("hull: state and reference sizes differ");
  const double l0 = model.scales().length_unit;
  const double lambda = model.lattice().period;
  HullFunction h;
  for (int i = 0; i < state.size(); ++i) {
    double x = state.positions[i] * l0 - model.lattice().phase_origin;
    double ph = std::fmod(x, lambda);
    if (ph < 0.0) ph += lambda;
    h.phases.push_back(ph);
    h.reference_positions.push_back(reference.positions[i] * l0);
  }
  return h;
}

// Displacement of the center ion from the nearest lattice maximum, folded to
// (-lambda/2, lambda/2] and reported as a magnitude.
inline double order_parameter_delta(const ChainModel& model, const ChainState& state) {
  const int n = state.size();
  if (n % 2 == 0)
    throw std::invalid_argument("order_parameter_delta: even ion count has no center ion");
  const double lambda = model.lattice().period;
  double x = state.positions[n / 2] * model.scales().length_unit - model.lattice().phase_origin;
  double d = std::fmod(x, lambda);
  if (d > 0.5 * lambda) d -= lambda;
  if (d <= -0.5 * lambda) d += lambda;
  return std::abs(d);
}

struct DepinningOptions {
  RelaxOptions relax;
  double relative_resolution = 1e-3;
  int max_doublings = 60;
};

// Smallest uniform per-ion force (in N) that displaces the chain center of mass
// by at least delta_x, found by force continuation with bisection refinement.
inline double depinning_force(const ChainModel& model, const EquilibriumResult& pinned,
                              double delta_x, const DepinningOptions& opts = {}) {
  if (!pinned.converged)
    throw std::invalid_argument("depinning_force: state is not converged");
  const UnitScales& u = model.scales();
  const double dx = delta_x / u.length_unit;
  const double com0 = pinned.state.positions.mean();
  const double lambda = model.lattice_term(pinned.state.power).period;

  RelaxOptions ropts = opts.relax;
  ropts.max_step = std::min(ropts.max_step, 0.25 * lambda);

  auto displaced = [&](double f, const ChainState& warm) {
    RelaxOptions o = ropts;
    o.uniform_force = f;
    EquilibriumResult r = relax(model, warm, o);
    if (!r.converged)
      throw std::runtime_error("depinning_force: relaxation failed at f = " +
                               std::to_string(f));
    return std::pair<double, ChainState>{r.state.positions.mean() - com0, r.state};
  };

  // Harmonic-response starting scale: COM shift equals f at K = 0.
  double f_lo = 0.0, f_hi = dx;
  ChainState warm = pinned.state;
  int n = 0;
  for (; n < opts.max_doublings; ++n) {
    auto [shift, state] = displaced(f_hi, warm);
    warm = state;
    if (shift >= dx) break;
    f_lo = f_hi;
    f_hi *= 2.0;
  }
  if (n == opts.max_doublings)
    throw std::runtime_error("depinning_force: no displacement reached within force range");

  while ((f_hi - f_lo) > opts.relative_resolution * f_hi) {
    const double mid = 0.5 * (f_lo + f_hi);
    auto [shift, state] = displaced(mid, pinned.state);
    (void)state;
    if (shift >= dx)
      f_hi = mid;
    else
      f_lo = mid;
  }
  const double force_unit =
      model.species().mass * model.trap().axial_frequency * model.trap().axial_frequency *
      u.length_unit;
  return f_hi * force_unit;
}

struct CriticalPowerOptions {
  RelaxOptions relax;
  double power_resolution = 1e-3; // W
};

namespace detail {

// Lowest Hessian eigenvalue of the reflection-symmetric equilibrium at the given
// power, reached by symmetry-preserving continuation (no saddle escape).
inline double symmetric_lowest_eigenvalue(const ChainModel& model, ChainState warm,
                                          double power, const RelaxOptions& base) {
  RelaxOptions opts = base;
  opts.escape_saddles = false;
  opts.max_step = std::min(opts.max_step, 0.25 * model.lattice_term(power).period);
  // Project onto the antisymmetric configuration manifold x_i = -x_{N+1-i}.
  Eigen::VectorXd x = warm.positions;
  Eigen::VectorXd sym = 0.5 * (x - x.reverse());
  warm.positions = sym;
  warm.power = power;
  if (!warm.ordered()) throw std::runtime_error("critical_power: symmetrization broke ordering");
  EquilibriumResult r = relax(model, warm, opts);
  // Above the instability the symmetric configuration is a saddle and the
  // damped solver can stall just short of the tolerance; the eigenvalue sign
  // is still reliable as long as the residual force is small.
  if (!r.converged && r.gradient_norm > 1e-6)
    throw std::runtime_error("critical_power: symmetric relaxation failed at P = " +
                             std::to_string(power));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.hessian(r.state));
  return es.eigenvalues()[0];
}

} // namespace detail

// Power at which the lowest eigenfrequency of the symmetric configuration
// vanishes, refined by bisection on the sign of the lowest Hessian eigenvalue.
inline double critical_power(const ChainModel& model, const ContinuationSweep& sweep,
                             const CriticalPowerOptions& opts = {}) {
  if (sweep.powers.size() < 2)
    throw std::invalid_argument("critical_power: sweep too short");
  std::optional<std::size_t> bracket;
  double prev = detail::symmetric_lowest_eigenvalue(model, sweep.states.front().state,
                                                    sweep.powers.front(), opts.relax);
  for (std::size_t i = 1; i < sweep.powers.size(); ++i) {
    const double cur = detail::symmetric_lowest_eigenvalue(
        model, sweep.states[i].state, sweep.powers[i], opts.relax);
    if (prev > 0.0 && cur <= 0.0) {
      bracket = i;
      break;
    }
    prev = cur;
  }
  if (!bracket)
    throw std::runtime_error("critical_power: no transition inside the sweep");
  double p_lo = sweep.powers[*bracket - 1];
  double p_hi = sweep.powers[*bracket];
  const ChainState& warm = sweep.states[*bracket - 1].state;
  while (p_hi - p_lo > opts.power_resolution) {
    const double mid = 0.5 * (p_lo + p_hi);
    const double ev = detail::symmetric_lowest_eigenvalue(model, warm, mid, opts.relax);
    if (ev > 0.0)
      p_lo = mid;
    else
      p_hi = mid;
  }
  return 0.5 * (p_lo + p_hi);
}

} // namespace ionlattice
