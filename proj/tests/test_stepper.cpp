#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mopar/error.hpp"
#include "mopar/stepper.hpp"

#include "support.hpp"

#include <cmath>

using namespace mopar;

namespace {

ProblemSpec unforced(ProblemSpec spec) {
  spec.f = expressions::zero();
  return spec;
}

double residual_max(const ProblemSpec& spec, const FemFunction& u, const FemFunction& prev, double tau,
                    double t) {
  return assemble_residual(spec, u, prev, tau, t).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g(1.0, 4);
  CHECK(g.tau() == 0.25);
  CHECK(g.t(0) == 0.0);
  CHECK(g.t(4) == 1.0);
  CHECK(g.steps() == 4);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), Error);
  CHECK_THROWS_AS(TimeGrid(0.0, 4), Error);
  CHECK_THROWS_AS(TimeGrid(2.0, 2), Error);  // tau = 1
  CHECK_NOTHROW(TimeGrid(1.9, 2));
}

TEST_CASE("single step examples") {
  const auto space = FemSpace::create(1, 2);
  const FemFunction one(space, Vector::Constant(1, 1.0));

  const StepResult heat = solve_step(unforced(models::heat_limit(1)), one, 0.1, 0.1);
  CHECK(heat.u.coefficients()[0] == doctest::Approx(1.0 / 2.2).epsilon(1e-12));
  CHECK(heat.report.iterations == 1);
  CHECK(heat.report.final_residual() <= 1e-10);
  CHECK_FALSE(heat.report.fallback_used);

  const StepResult scaled = solve_step(unforced(models::scaled_heat(1)), one, 0.1, 0.1);
  CHECK(scaled.u.coefficients()[0] == doctest::Approx(1.0 / 1.8).epsilon(1e-12));
  CHECK(scaled.report.iterations == 1);

  const StepResult rest = solve_step(unforced(models::heat_limit(1)), FemFunction(space), 0.1, 0.1);
  CHECK(rest.u.coefficients()[0] == 0.0);
  CHECK(rest.report.iterations == 0);
  CHECK(rest.report.residual_norms.size() == 1);
}

TEST_CASE("two-step recurrence from the centred hat") {
  ProblemSpec spec = unforced(models::heat_limit(1));
  spec.u0 = expressions::hat(1, 1.0);
  const auto space = FemSpace::create(1, 2);
  const DiscreteTrajectory traj = run(spec, space, TimeGrid(0.1, 2));
  REQUIRE(traj.states.size() == 3);
  REQUIRE(traj.reports.size() == 2);
  CHECK(traj.states[0].coefficients()[0] == 1.0);
  CHECK(traj.states[2].coefficients()[0] == doctest::Approx(0.390625).epsilon(1e-12));
  CHECK(1.0 / (1.6 * 1.6) == doctest::Approx(0.390625).epsilon(1e-15));
}

TEST_CASE("a single step run equals solve_step") {
  const ProblemSpec spec = models::p_laplacian(1);
  const auto space = FemSpace::create(1, 8);
  const DiscreteTrajectory traj = run(spec, space, TimeGrid(0.5, 1));
  const FemFunction u0 = restrict_to(space, [&](const Point& x) { return spec.u0(x, 0.0); });
  const StepResult step = solve_step(spec, u0, 0.5, 0.5);
  REQUIRE(traj.states.size() == 2);
  CHECK((traj.states[1].coefficients().array() == step.u.coefficients().array()).all());
}

TEST_CASE("trajectory invariants on shipped models") {
  for (int dim : {1, 2}) {
    for (const ProblemSpec& spec : models::shipped(dim)) {
      const auto space = FemSpace::create(dim, dim == 1 ? 16 : 6);
      const TimeGrid grid(1.0, 8);
      const DiscreteTrajectory traj = run(spec, space, grid);
      CHECK(traj.states.size() == 9);
      for (int n = 1; n <= 8; ++n) {
        const StepReport& r = traj.reports[n - 1];
        CHECK(r.final_residual() <= 1e-10);
        CHECK(residual_max(spec, traj.states[n], traj.states[n - 1], grid.tau(), grid.t(n)) <= 1e-10);
        for (std::size_t k = 1; k < r.residual_norms.size(); ++k) {
          CHECK(r.residual_norms[k] < r.residual_norms[k - 1]);
        }
      }
    }
  }
}

TEST_CASE("uniqueness probe") {
  gen::Rng rng(99);
  const double tau = 0.1;
  {
    const auto space = FemSpace::create(1, 8);
    const ProblemSpec heat = models::heat_limit(1);
    const FemFunction prev = rng.field(space, 1.0);
    const std::vector<Vector> guesses{Vector::Zero(7), prev.coefficients(), rng.vector(7, 5.0)};
    CHECK(uniqueness_probe(heat, prev, tau, tau, guesses) <= 1e-12);
  }
  for (int dim : {1, 2}) {
    const auto space = FemSpace::create(dim, dim == 1 ? 8 : 4);
    const Eigen::Index n = static_cast<Eigen::Index>(space->num_dofs());
    for (const ProblemSpec& spec : {models::p_laplacian(dim), models::lipschitz_convection(dim)}) {
      for (int trial = 0; trial < 5; ++trial) {
        const FemFunction prev = rng.field(space, 2.0);
        const std::vector<Vector> guesses{rng.vector(n, 3.0), rng.vector(n, 3.0), rng.vector(n, 3.0)};
        CHECK_MESSAGE(uniqueness_probe(spec, prev, tau, tau, guesses) <= 1e-9, spec.name);
      }
    }
  }
}

TEST_CASE("heat limit without forcing does not grow in L2") {
  for (int dim : {1, 2}) {
    const ProblemSpec spec = unforced(models::heat_limit(dim));
    const auto space = FemSpace::create(dim, dim == 1 ? 32 : 8);
    const DiscreteTrajectory traj = run(spec, space, TimeGrid(1.0, 20));
    for (std::size_t n = 1; n < traj.states.size(); ++n) {
      CHECK(l2_norm(traj.states[n]) <= l2_norm(traj.states[n - 1]) * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("linear models converge in one Newton iteration from any guess") {
  gen::Rng rng(31);
  for (const ProblemSpec& spec : {models::heat_limit(2), models::scaled_heat(2)}) {
    const auto space = FemSpace::create(2, 5);
    const Eigen::Index n = static_cast<Eigen::Index>(space->num_dofs());
    for (int trial = 0; trial < 10; ++trial) {
      const FemFunction prev = rng.field(space, 1.0);
      const StepResult r = solve_step(spec, prev, 0.2, 0.2, {}, rng.vector(n, 10.0));
      CHECK(r.report.iterations == 1);
      CHECK_FALSE(r.report.fallback_used);
    }
  }
}

TEST_CASE("runs are bitwise reproducible") {
  for (const ProblemSpec& spec : models::shipped(2)) {
    const auto space = FemSpace::create(2, 8);
    const DiscreteTrajectory a = run(spec, space, TimeGrid(0.5, 5));
    const DiscreteTrajectory b = run(spec, space, TimeGrid(0.5, 5));
    for (std::size_t n = 0; n < a.states.size(); ++n) {
      CHECK((a.states[n].coefficients().array() == b.states[n].coefficients().array()).all());
    }
  }
}

TEST_CASE("nonconvergence carries the step index and last iterate") {
  SolverOptions opts;
  opts.max_iters = 1;
  opts.fallback_picard = false;
  opts.tol = 1e-14;
  const ProblemSpec spec = models::p_laplacian(1);
  const auto space = FemSpace::create(1, 8);
  try {
    run(spec, space, TimeGrid(0.9, 3), opts);
    FAIL("expected nonconvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.code() == ErrorCode::nonconvergence);
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    CHECK(e.last_iterate().coefficients().size() == 7);
    CHECK(e.report().final_residual() > 1e-14);
  }
}

TEST_CASE("report records the fallback path") {
  const ProblemSpec spec = models::p_laplacian(1);
  const auto space = FemSpace::create(1, 8);
  const FemFunction prev(space, Vector::Constant(7, 5.0));
  SolverOptions opts;
  opts.max_iters = 2;
  for (bool fallback : {true, false}) {
    opts.fallback_picard = fallback;
    try {
      solve_step(spec, prev, 0.5, 0.5, opts);
      FAIL("two Newton iterations should not suffice");
    } catch (const NonConvergence& e) {
      CHECK(e.step() == 0);
      CHECK(e.report().fallback_used == fallback);
      CHECK(e.report().iterations == (fallback ? 4 : 2));
      CHECK(e.report().residual_norms.size() == static_cast<std::size_t>(e.report().iterations) + 1);
    }
  }
}

TEST_CASE("undamped Newton still converges on the p-Laplacian model") {
  SolverOptions opts;
  opts.damping = false;
  const ProblemSpec spec = models::p_laplacian(1);
  const auto space = FemSpace::create(1, 8);
  const FemFunction prev = restrict_to(space, [&](const Point& x) { return spec.u0(x, 0.0); });
  const StepResult r = solve_step(spec, prev, 0.3, 0.3, opts);
  CHECK(r.report.final_residual() <= opts.tol);
  for (double alpha : r.report.damping) {
    CHECK(alpha == 1.0);
  }
}
