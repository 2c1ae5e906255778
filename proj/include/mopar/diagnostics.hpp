#pragma once

#include "mopar/stepper.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace mopar {

// ---------------------------------------------------------------------------
// Energy audit.

struct LedgerRow {
  int n = 0;
  double t = 0.0;
  double b_norm_sq = 0.0;  ///< ||b(u^n)||^2
  double jump_sq = 0.0;    ///< ||b(u^n) - b(u^{n-1})||^2
  double modular = 0.0;    ///< int phi(x, |grad u^n|)
  double data_term = 0.0;  ///< int |f(t_n)| |b(u^n)|
  double lhs_cum = 0.0;
  double rhs_cum = 0.0;
  bool pass = true;
};

/// Per-step terms of the discrete energy inequality
///   ||b(u^n)||^2 + sum_j ||b(u^j) - b(u^{j-1})||^2 + 2 tau (nu b0 - 2 b1 nu0) sum_j int phi(|grad u^j|)
///     <= F_n^2 / eps^2 + eps^2 max_j ||b(u^j)||^2 + ||b(u^0)||^2,
/// with F_n = tau sum_{j<=n} ||f(t_j)||_2.
struct EnergyLedger {
  double eps = 0.5;
  double margin = 0.0;  ///< 2 tau (nu b0 - 2 b1 nu0)
  double b0_norm_sq = 0.0;
  double f_l1l2 = 0.0;  ///< F_N
  std::vector<LedgerRow> rows;

  /// sum_j ||u^j - u^{j-1}||_2, the smallest admissible c4.
  double c4 = 0.0;
  /// Smallest c3 with lhs_n <= c3 F_n^2 + ||b(u^0)||^2 for all n (0 when f = 0).
  double c3_min = 0.0;
  /// Whether b0 ||u^j - u^{j-1}|| <= ||b(u^j) - b(u^{j-1})|| held at every step.
  bool b_lower_bound_holds = true;

  [[nodiscard]] bool verdict() const;
};

/// Throws structure_violation when the margin is not positive and
/// precondition when eps is outside (0, 1). The quadrature defaults to the
/// trajectory's own rule.
EnergyLedger energy_audit(const DiscreteTrajectory& traj, const ProblemSpec& spec, double eps = 0.5,
                          const std::optional<QuadratureRule>& quad = std::nullopt);

/// Largest relative change of any ledger entry when the audit is recomputed
/// with the refined quadrature rule.
double audit_quadrature_drift(const DiscreteTrajectory& traj, const ProblemSpec& spec,
                              double eps = 0.5);

/// Columns n,t_n,b_norm_sq,jump_sq,modular,data_term,lhs_cum,rhs_cum,verdict.
void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger);

// ---------------------------------------------------------------------------
// Time interpolants. Fields are sampled at the quadrature points of every
// cell, cell-major.

using QuadField = std::vector<double>;

/// Piecewise linear in time through knot fields at increasing times.
class PiecewiseLinearInTime {
public:
  PiecewiseLinearInTime(std::vector<double> times, std::vector<QuadField> knots);

  [[nodiscard]] double start() const { return times_.front(); }
  [[nodiscard]] double end() const { return times_.back(); }
  [[nodiscard]] std::size_t field_size() const { return knots_.front().size(); }
  /// Throws domain outside [start, end].
  [[nodiscard]] QuadField operator()(double t) const;
  /// Exact integral over [t0, t1] with the field taken as zero outside [start, end].
  [[nodiscard]] QuadField integral(double t0, double t1) const;

private:
  std::vector<double> times_;
  std::vector<QuadField> knots_;
};

class Interpolants {
public:
  Interpolants(const DiscreteTrajectory& traj, const ProblemSpec& spec,
               const std::optional<QuadratureRule>& quad = std::nullopt);

  /// b(u^{n-1}) + (t - t_{n-1}) / tau (b(u^n) - b(u^{n-1})) on [t_{n-1}, t_n].
  [[nodiscard]] QuadField hat_u(double t) const { return hat_(t); }
  /// u^n on (t_{n-1}, t_n], and u^1 at t = 0.
  [[nodiscard]] QuadField bar_u(double t) const;
  /// f(., t_n) on (t_{n-1}, t_n], and f(., t_1) at t = 0.
  [[nodiscard]] QuadField bar_f(double t) const;
  [[nodiscard]] const PiecewiseLinearInTime& hat() const noexcept { return hat_; }

  /// ||b(bar_u) - hat_u||^2 over Q, by Gauss quadrature in time on every step.
  [[nodiscard]] double bar_hat_gap_sq() const;
  /// (tau / 3) sum_n ||b(u^n) - b(u^{n-1})||^2.
  [[nodiscard]] double jump_identity() const;

  /// Space integral of a sampled field.
  [[nodiscard]] double integrate(const QuadField& w) const;
  [[nodiscard]] double l2_norm_sq(const QuadField& w) const;

private:
  [[nodiscard]] int step_index(double t) const;

  SpacePtr space_;
  QuadratureRule quad_;
  TimeGrid grid_;
  std::vector<QuadField> u_;  ///< u^n at the quadrature points
  std::vector<QuadField> f_;  ///< f(., t_n); f_[0] unused
  std::vector<double> cell_weights_;
  AccumulationLaw b_;
  PiecewiseLinearInTime hat_;
};

/// (1 / 2h) int_{t-h}^{t+h} w(s) ds with w extended by zero outside its interval.
QuadField steklov_average(const PiecewiseLinearInTime& w, double h, double t);

// ---------------------------------------------------------------------------
// Modular Poincare probe.

struct LambdaGrid {
  double start = 0x1p-20;
  double factor = 2.0;
  double max = 0x1p20;
};

/// First grid lambda with int phi(|u|) <= int phi(lambda |grad u|). Throws
/// precondition for u = 0 and probe_failure when no grid point works.
double poincare_probe(const MusielakFunction& phi, const FemFunction& u,
                      const LambdaGrid& grid = {});

}  // namespace mopar
