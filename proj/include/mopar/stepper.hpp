#pragma once

#include "mopar/error.hpp"
#include "mopar/fem.hpp"
#include "mopar/problem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mopar {

/// Uniform grid t_n = n tau on [0, T] with tau = T / N < 1.
class TimeGrid {
public:
  TimeGrid(double T, int N);

  [[nodiscard]] double final_time() const noexcept { return T_; }
  [[nodiscard]] int steps() const noexcept { return N_; }
  [[nodiscard]] double tau() const noexcept { return T_ / N_; }
  [[nodiscard]] double t(int n) const noexcept { return n * tau(); }

private:
  double T_;
  int N_;
};

struct StepReport {
  int iterations = 0;                  ///< Newton plus Picard iterations
  std::vector<double> residual_norms;  ///< max-norm, starting with the initial guess
  std::vector<double> damping;         ///< step length taken at each iteration
  bool fallback_used = false;

  [[nodiscard]] double final_residual() const {
    return residual_norms.empty() ? 0.0 : residual_norms.back();
  }
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iters = 100;
  bool damping = true;
  bool fallback_picard = true;
  int max_halvings = 30;
};

struct StepResult {
  FemFunction u;
  StepReport report;
};

/// Raised when neither Newton nor the Picard sweep meets the tolerance.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, FemFunction last, StepReport report, int step)
      : Error(ErrorCode::nonconvergence, what),
        last_(std::move(last)),
        report_(std::move(report)),
        step_(step) {}

  [[nodiscard]] const FemFunction& last_iterate() const noexcept { return last_; }
  [[nodiscard]] const StepReport& report() const noexcept { return report_; }
  /// Time step index, or 0 when raised outside a run.
  [[nodiscard]] int step() const noexcept { return step_; }

private:
  FemFunction last_;
  StepReport report_;
  int step_;
};

/// One backward Euler step: finds u with max-norm residual <= tol by damped
/// Newton (Armijo backtracking, factor 1/2), falling back to Picard sweeps with
/// the stress frozen at the previous iterate. The default initial guess is u_prev.
StepResult solve_step(const ProblemSpec& spec, const FemFunction& u_prev, double tau, double t_n,
                      const SolverOptions& opts = {},
                      const std::optional<Vector>& initial_guess = std::nullopt);

struct DiscreteTrajectory {
  TimeGrid grid;
  std::vector<FemFunction> states;  ///< u^0 ... u^N
  std::vector<StepReport> reports;  ///< one per step n = 1..N

  [[nodiscard]] const FemSpace& space() const { return states.front().space(); }
};

/// u^0 = R_m u0, then N steps. Nonconvergence is rethrown with its step index.
DiscreteTrajectory run(const ProblemSpec& spec, const SpacePtr& space, const TimeGrid& grid,
                       const SolverOptions& opts = {});

/// Solves one step from each initial iterate and returns the largest pairwise
/// L2 distance between the results.
double uniqueness_probe(const ProblemSpec& spec, const FemFunction& u_prev, double tau,
                        double t_n, const std::vector<Vector>& guesses,
                        const SolverOptions& opts = {});

}  // namespace mopar
