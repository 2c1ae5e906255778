#include "mopar/stepper.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace mopar {

TimeGrid::TimeGrid(double T, int N) : T_(T), N_(N) {
  require(N >= 1, "time grid needs at least one step", ErrorCode::config);
  require(T > 0.0 && std::isfinite(T), "final time must be positive", ErrorCode::config);
  require(T / N < 1.0, "time step tau = T/N must be below 1", ErrorCode::config);
}

namespace {

double max_norm(const Vector& r) { return r.size() == 0 ? 0.0 : r.lpNorm<Eigen::Infinity>(); }

// Symmetric systems (K = 0, symmetric stress Jacobian) go through LDL^T, the rest through LU.
std::optional<Vector> linear_solve(const SparseMatrix& A, const Vector& rhs, bool symmetric) {
  if (symmetric) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() == Eigen::Success) {
      Vector x = ldlt.solve(rhs);
      if (ldlt.info() == Eigen::Success && x.allFinite()) {
        return x;
      }
    }
  }
  SparseMatrix Ac = A;
  Ac.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(Ac);
  lu.factorize(Ac);
  if (lu.info() != Eigen::Success) {
    return std::nullopt;
  }
  Vector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    return std::nullopt;
  }
  return x;
}

}  // namespace

StepResult solve_step(const ProblemSpec& spec, const FemFunction& u_prev, double tau, double t_n,
                      const SolverOptions& opts, const std::optional<Vector>& initial_guess) {
  require(tau > 0.0, "time step must be positive");
  require(opts.tol > 0.0 && opts.max_iters >= 1, "solver tolerance and iteration cap must be positive",
          ErrorCode::config);
  const FemSpace& space = u_prev.space();
  const Vector& prev = u_prev.coefficients();
  const bool symmetric = spec.K.is_zero();

  Vector u = initial_guess.value_or(prev);
  require(u.size() == prev.size(), "initial guess does not match the space");

  StepReport report;
  Vector r = assemble_residual(spec, space, u, prev, tau, t_n);
  double rn = max_norm(r);
  report.residual_norms.push_back(rn);
  if (rn <= opts.tol) {
    return {FemFunction(u_prev.space_ptr(), std::move(u)), std::move(report)};
  }

  int newton_iters = 0;
  bool stagnated = false;
  while (newton_iters < opts.max_iters && !stagnated) {
    const SparseMatrix J = assemble_jacobian(spec, space, u, tau);
    const auto delta = linear_solve(J, -r, symmetric);
    if (!delta) {
      stagnated = true;
      break;
    }
    double alpha = 1.0;
    Vector trial = u + *delta;
    Vector rt = assemble_residual(spec, space, trial, prev, tau, t_n);
    double rtn = max_norm(rt);
    if (opts.damping) {
      int halvings = 0;
      while (!(rtn <= (1.0 - 1e-4 * alpha) * rn) && halvings < opts.max_halvings) {
        alpha *= 0.5;
        ++halvings;
        trial = u + alpha * *delta;
        rt = assemble_residual(spec, space, trial, prev, tau, t_n);
        rtn = max_norm(rt);
      }
      if (!(rtn <= (1.0 - 1e-4 * alpha) * rn)) {
        stagnated = true;
        break;
      }
    } else if (!std::isfinite(rtn)) {
      stagnated = true;
      break;
    }
    u = std::move(trial);
    r = std::move(rt);
    rn = rtn;
    ++newton_iters;
    report.residual_norms.push_back(rn);
    report.damping.push_back(alpha);
    if (rn <= opts.tol) {
      report.iterations = newton_iters;
      return {FemFunction(u_prev.space_ptr(), std::move(u)), std::move(report)};
    }
  }
  report.iterations = newton_iters;

  if (opts.fallback_picard) {
    report.fallback_used = true;
    for (int k = 0; k < opts.max_iters; ++k) {
      const SparseMatrix P = assemble_picard_matrix(spec, space, u, tau);
      const auto delta = linear_solve(P, -r, symmetric);
      if (!delta) {
        break;
      }
      u += *delta;
      r = assemble_residual(spec, space, u, prev, tau, t_n);
      rn = max_norm(r);
      ++report.iterations;
      report.residual_norms.push_back(rn);
      report.damping.push_back(1.0);
      if (rn <= opts.tol) {
        return {FemFunction(u_prev.space_ptr(), std::move(u)), std::move(report)};
      }
      if (!std::isfinite(rn)) {
        break;
      }
    }
  }

  const std::string what = "nonlinear solve did not reach tolerance " + std::to_string(opts.tol) +
                           " (last residual " + std::to_string(rn) + " after " +
                           std::to_string(report.iterations) + " iterations)";
  throw NonConvergence(what, FemFunction(u_prev.space_ptr(), std::move(u)), std::move(report), 0);
}

DiscreteTrajectory run(const ProblemSpec& spec, const SpacePtr& space, const TimeGrid& grid,
                       const SolverOptions& opts) {
  DiscreteTrajectory traj{grid, {}, {}};
  traj.states.reserve(static_cast<std::size_t>(grid.steps()) + 1);
  traj.reports.reserve(static_cast<std::size_t>(grid.steps()));
  traj.states.push_back(
      restrict_to(space, [&](const Point& x) { return spec.u0(x, 0.0); }, 1e-12));
  for (int n = 1; n <= grid.steps(); ++n) {
    try {
      auto step = solve_step(spec, traj.states.back(), grid.tau(), grid.t(n), opts);
      traj.states.push_back(std::move(step.u));
      traj.reports.push_back(std::move(step.report));
    } catch (const NonConvergence& e) {
      throw NonConvergence(std::string(e.what()) + " at step " + std::to_string(n),
                           e.last_iterate(), e.report(), n);
    }
  }
  return traj;
}

double uniqueness_probe(const ProblemSpec& spec, const FemFunction& u_prev, double tau,
                        double t_n, const std::vector<Vector>& guesses, const SolverOptions& opts) {
  require(guesses.size() >= 2, "uniqueness probe needs at least two initial iterates");
  std::vector<FemFunction> solutions;
  solutions.reserve(guesses.size());
  for (const Vector& g : guesses) {
    solutions.push_back(solve_step(spec, u_prev, tau, t_n, opts, g).u);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    for (std::size_t j = i + 1; j < solutions.size(); ++j) {
      worst = std::max(worst, l2_distance(solutions[i], solutions[j]));
    }
  }
  return worst;
}

}  // namespace mopar
