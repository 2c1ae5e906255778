#pragma once

#include "mopar/stepper.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mopar {

/// A closed-form u(x, t) with the derivatives needed to manufacture f.
/// Vanishes on the boundary of the unit interval/square for every t.
struct ExactSolution {
  std::string id;
  Params params;
  std::function<double(const Point&, double)> value;
  std::function<double(const Point&, double)> dt;
  std::function<double(const Point&, double)> dtt;
  std::function<Vec2(const Point&, double)> grad;
  std::function<Mat2(const Point&, double)> hessian;
};

namespace exact {
/// amplitude * exp(-rate t) * prod_i sin(pi x_i)
ExactSolution exp_sin(int dim, double amplitude = 1.0, double rate = 1.0);
/// amplitude * prod_i x_i (1 - x_i), constant in time
ExactSolution steady_bubble(int dim, double amplitude = 1.0);
ExactSolution zero();
/// Throws config on unknown ids.
ExactSolution by_id(const std::string& id, const Params& params, int dim);
}  // namespace exact

/// f = b'(u) u_t - div a(x, grad u) - K'(u).grad u for the exact u. The
/// explicit x-dependence of a is differentiated by central differences.
double manufactured_source(const ProblemSpec& spec, const ExactSolution& u, const Point& x,
                           double t);

struct ManufacturedCase {
  ProblemSpec spec;  ///< f and u0 replaced by the manufactured data
  ExactSolution exact;
};

ManufacturedCase manufacture(ProblemSpec base, ExactSolution u);

/// L1 and L2 errors of a discrete field against the exact solution at time t,
/// integrated with the refined quadrature rule.
struct FieldError {
  double l1 = 0.0;
  double l2 = 0.0;
};
FieldError error_at(const FemFunction& uh, const ExactSolution& u, double t);

// ---------------------------------------------------------------------------
// Convergence studies.

struct ConvergenceRow {
  int level = 0;
  int N = 0;
  int m = 0;
  double tau_or_h = 0.0;
  double err_l1 = 0.0;
  double err_l2 = 0.0;
  double rate = 0.0;  ///< NaN on the first level
};

struct ConvergenceReport {
  std::string kind;  ///< "temporal" or "spatial"
  std::vector<ConvergenceRow> rows;
  double order_l1 = 0.0;  ///< least-squares slope of log err_l1 against log tau_or_h
  double order_l2 = 0.0;
  bool monotone = true;     ///< err_l1 strictly decreasing
  bool degenerate = false;  ///< errors do not depend on the refined parameter; no fit
  double spatial_error_estimate = 0.0;
};

/// Least-squares slope of log(err) against log(x).
double fitted_order(const std::vector<double>& x, const std::vector<double>& err);

struct TemporalStudyOptions {
  std::vector<int> N_list{8, 16, 32, 64};
  int m = 512;
  double T = 1.0;
  SolverOptions solver;
  bool check_spatial = true;
};

/// Errors at T for each N on a fixed fine mesh. The spatial error is
/// estimated by one extra run on the mesh refined once at the largest N and
/// must stay below 10% of the coarsest temporal error.
ConvergenceReport temporal_order_study(const ManufacturedCase& mc, const TemporalStudyOptions& opts);

struct SpatialStudyOptions {
  std::vector<int> m_list{4, 8, 16, 32};
  int N = 256;
  double T = 0.5;
  SolverOptions solver;
};

/// Errors at T for each m with a fixed fine time grid. Report only.
ConvergenceReport spatial_refinement_study(const ManufacturedCase& mc,
                                           const SpatialStudyOptions& opts);

/// Columns level,tau_or_h,err_L1,err_L2,rate.
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);

// ---------------------------------------------------------------------------

/// Independent solution of one backward Euler step for spaces with at most
/// three unknowns: grid search of max-norm residual over a box around u_prev
/// (doubling the box while the minimum sits on its edge), then Gauss-Seidel
/// sweeps of scalar bisection on each residual component. Throws
/// oracle_failure when a component shows no sign change.
FemFunction brute_force_oracle(const ProblemSpec& spec, const FemFunction& u_prev, double tau,
                               double t_n, int grid_resolution = 21);

}  // namespace mopar
