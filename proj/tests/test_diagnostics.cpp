#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mopar/diagnostics.hpp"
#include "mopar/error.hpp"
#include "mopar/harness.hpp"

#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace mopar;

namespace {

ProblemSpec unforced(ProblemSpec spec) {
  spec.f = expressions::zero();
  return spec;
}

double max_abs(const QuadField& a, const QuadField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

/// The single-unknown heat run: u^n = (1 + 12 tau)^{-n} at the centre vertex.
DiscreteTrajectory one_dof_run(int N, double tau) {
  ProblemSpec spec = unforced(models::heat_limit(1));
  spec.u0 = expressions::hat(1, 1.0);
  return run(spec, FemSpace::create(1, 2), TimeGrid(N * tau, N));
}

}  // namespace

TEST_CASE("one-unknown ledger by hand") {
  const double tau = 0.05;
  const ProblemSpec spec = unforced(models::heat_limit(1));
  const DiscreteTrajectory traj = one_dof_run(2, tau);
  const EnergyLedger ledger = energy_audit(traj, spec);
  REQUIRE(ledger.rows.size() == 2);

  // M = 1/3 for the hat, |grad| = 2c on both cells, phi = t^2/2.
  const double M = oracle::one_dof_mass();
  const double c[3] = {1.0, 1.0 / 1.6, 1.0 / (1.6 * 1.6)};
  const double margin = 2.0 * tau * (2.0 * 0.75 - 2.0 * 1.5 * 0.1);
  CHECK(ledger.margin == doctest::Approx(margin).epsilon(1e-14));
  CHECK(ledger.b0_norm_sq == doctest::Approx(M).epsilon(1e-12));
  CHECK(ledger.f_l1l2 == 0.0);
  double jumps = 0.0, mods = 0.0;
  for (int n = 1; n <= 2; ++n) {
    const LedgerRow& r = ledger.rows[n - 1];
    const double jump = (c[n] - c[n - 1]) * (c[n] - c[n - 1]) * M;
    const double mod = 2.0 * c[n] * c[n];
    jumps += jump;
    mods += mod;
    CHECK(r.n == n);
    CHECK(r.t == doctest::Approx(n * tau).epsilon(1e-15));
    CHECK(r.b_norm_sq == doctest::Approx(c[n] * c[n] * M).epsilon(1e-12));
    CHECK(r.jump_sq == doctest::Approx(jump).epsilon(1e-12));
    CHECK(r.modular == doctest::Approx(mod).epsilon(1e-12));
    CHECK(r.data_term == 0.0);
    CHECK(r.lhs_cum == doctest::Approx(c[n] * c[n] * M + jumps + margin * mods).epsilon(1e-12));
    CHECK(r.rhs_cum == doctest::Approx(0.25 * M + M).epsilon(1e-12));
    CHECK(r.pass);
  }
  const double du = (c[0] - c[1] + c[1] - c[2]) * std::sqrt(M);
  CHECK(ledger.c4 == doctest::Approx(du).epsilon(1e-12));
  CHECK(ledger.b_lower_bound_holds);
  CHECK(ledger.verdict());
}

TEST_CASE("unforced audit is dissipative") {
  for (int dim : {1, 2}) {
    const ProblemSpec spec = unforced(models::heat_limit(dim));
    const DiscreteTrajectory traj = run(spec, FemSpace::create(dim, dim == 1 ? 32 : 8), TimeGrid(1.0, 16));
    const EnergyLedger ledger = energy_audit(traj, spec);
    CHECK(ledger.verdict());
    for (const LedgerRow& r : ledger.rows) {
      CHECK(r.lhs_cum <= ledger.b0_norm_sq * (1.0 + 0.25) * (1.0 + 1e-12));
      CHECK(r.data_term == 0.0);
    }
    CHECK(ledger.c3_min == 0.0);
  }
}

TEST_CASE("forced and manufactured audits pass with eps = 1/2") {
  ProblemSpec forced = models::heat_limit(1);
  forced.f = expressions::sin_pi(1, 5.0, 3.0);
  const DiscreteTrajectory t1 = run(forced, FemSpace::create(1, 32), TimeGrid(1.0, 16));
  const EnergyLedger l1 = energy_audit(t1, forced, 0.5);
  CHECK(l1.verdict());
  CHECK(l1.f_l1l2 > 0.0);
  CHECK(l1.c3_min > 0.0);

  for (int dim : {1, 2}) {
    for (const ProblemSpec& base : models::shipped(dim)) {
      const ManufacturedCase mc = manufacture(base, exact::exp_sin(dim, 2.0));
      const DiscreteTrajectory t = run(mc.spec, FemSpace::create(dim, dim == 1 ? 16 : 6), TimeGrid(1.0, 10));
      const EnergyLedger l = energy_audit(t, mc.spec, 0.5);
      CHECK_MESSAGE(l.verdict(), mc.spec.name);
      CHECK(l.b_lower_bound_holds);
      for (const LedgerRow& r : l.rows) {
        CHECK(r.b_norm_sq >= 0.0);
        CHECK(r.jump_sq >= 0.0);
        CHECK(r.modular >= 0.0);
        CHECK(r.data_term >= 0.0);
      }
    }
  }
}

TEST_CASE("every converged shipped trajectory passes the audit") {
  gen::Rng rng(17);
  for (int dim : {1, 2}) {
    for (ProblemSpec spec : models::shipped(dim)) {
      for (int trial = 0; trial < 3; ++trial) {
        spec.f = expressions::sin_pi(dim, rng.uniform(-10.0, 10.0), rng.uniform(0.0, 6.0));
        spec.u0 = expressions::sin_pi(dim, rng.uniform(-3.0, 3.0));
        const int m = dim == 1 ? rng.integer(4, 24) : rng.integer(3, 8);
        const int N = rng.integer(2, 20);
        const DiscreteTrajectory traj = run(spec, FemSpace::create(dim, m), TimeGrid(1.0, N));
        CHECK_MESSAGE(energy_audit(traj, spec).verdict(), spec.name << " m=" << m << " N=" << N);
      }
    }
  }
}

TEST_CASE("audit preconditions") {
  const DiscreteTrajectory traj = one_dof_run(2, 0.05);
  ProblemSpec bad = unforced(models::heat_limit(1));
  bad.constants.nu0 = 0.5;  // nu b0 - 2 b1 nu0 = 1.5 - 1.5
  try {
    energy_audit(traj, bad);
    FAIL("expected structure violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::structure_violation);
  }
  for (double eps : {0.0, 1.0, -0.5}) {
    try {
      energy_audit(traj, unforced(models::heat_limit(1)), eps);
      FAIL("expected precondition");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::precondition);
    }
  }
}

TEST_CASE("ledger CSV") {
  const DiscreteTrajectory traj = one_dof_run(3, 0.05);
  const EnergyLedger ledger = energy_audit(traj, unforced(models::heat_limit(1)));
  std::ostringstream os;
  write_ledger_csv(os, ledger);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,t_n,b_norm_sq,jump_sq,modular,data_term,lhs_cum,rhs_cum,verdict");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.substr(line.size() - 5) == ",pass");
  }
  CHECK(rows == 3);

  std::ostringstream empty;
  write_ledger_csv(empty, EnergyLedger{});
  CHECK(empty.str() == "n,t_n,b_norm_sq,jump_sq,modular,data_term,lhs_cum,rhs_cum,verdict\n");
}

TEST_CASE("audit terms are insensitive to the quadrature rule") {
  for (int dim : {1, 2}) {
    for (const ProblemSpec& spec : models::shipped(dim)) {
      for (int m : dim == 1 ? std::vector<int>{8, 16, 32} : std::vector<int>{16, 32}) {
        const DiscreteTrajectory traj = run(spec, FemSpace::create(dim, m), TimeGrid(1.0, 8));
        CHECK_MESSAGE(audit_quadrature_drift(traj, spec) < 1e-8, spec.name << " m=" << m);
      }
    }
  }
}

TEST_CASE("manufactured sources with kinks only move the data side of the ledger") {
  // The manufactured p-Laplacian source carries |u_x|^{p-2}, which has a cusp
  // where u_x = 0; the refined rule changes its integrals well above 1e-8.
  for (const ProblemSpec& base : {models::p_laplacian(1), models::lipschitz_convection(1)}) {
    const ManufacturedCase mc = manufacture(base, exact::exp_sin(1));
    const DiscreteTrajectory traj = run(mc.spec, FemSpace::create(1, 16), TimeGrid(1.0, 8));
    const EnergyLedger a = energy_audit(traj, mc.spec);
    const EnergyLedger b = energy_audit(traj, mc.spec, 0.5, refined_rule(1));
    CHECK(a.verdict());
    CHECK(b.verdict());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].lhs_cum == doctest::Approx(b.rows[i].lhs_cum).epsilon(1e-12));
      CHECK(a.rows[i].modular == doctest::Approx(b.rows[i].modular).epsilon(1e-12));
      CHECK(a.rows[i].data_term == doctest::Approx(b.rows[i].data_term).epsilon(1e-2));
    }
  }
}

TEST_CASE("interpolant examples") {
  const ProblemSpec spec = models::scaled_heat(1);
  const DiscreteTrajectory traj = run(spec, FemSpace::create(1, 8), TimeGrid(1.0, 4));
  const Interpolants I(traj, spec);
  const auto b_of = [&](int n) {
    QuadField out;
    const QuadField u = I.bar_u(traj.grid.t(n));
    for (double v : u) {
      out.push_back(spec.b(v));
    }
    return out;
  };
  for (int n = 1; n <= 4; ++n) {
    CHECK(max_abs(I.hat_u(traj.grid.t(n)), b_of(n)) == 0.0);
    const QuadField mid = I.hat_u(traj.grid.t(n) - 0.5 * traj.grid.tau());
    const QuadField lo = I.hat_u(traj.grid.t(n - 1));
    const QuadField hi = I.hat_u(traj.grid.t(n));
    for (std::size_t i = 0; i < mid.size(); ++i) {
      CHECK(mid[i] == doctest::Approx(0.5 * (lo[i] + hi[i])).epsilon(1e-14));
    }
    // bar_u is right-continuous at the knots: (t_{n-1}, t_n] maps to u^n.
    CHECK(max_abs(I.bar_u(traj.grid.t(n) - 1e-3), I.bar_u(traj.grid.t(n))) == 0.0);
  }
  CHECK(max_abs(I.bar_u(0.0), I.bar_u(0.1)) == 0.0);
  CHECK(max_abs(I.bar_f(0.0), I.bar_f(0.2)) == 0.0);
  CHECK(max_abs(I.bar_u(0.25), I.bar_u(0.2501)) > 0.0);

  for (double t : {-0.1, 1.1}) {
    try {
      (void)I.bar_u(t);
      FAIL("expected domain error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::domain);
    }
    CHECK_THROWS_AS((void)I.hat_u(t), Error);
  }
}

TEST_CASE("bar-hat gap identity") {
  for (int dim : {1, 2}) {
    for (const ProblemSpec& spec : models::shipped(dim)) {
      const DiscreteTrajectory traj = run(spec, FemSpace::create(dim, dim == 1 ? 16 : 6), TimeGrid(1.0, 8));
      const Interpolants I(traj, spec);
      const double gap = I.bar_hat_gap_sq();
      // Independent form from the audit's jump terms.
      double jumps = 0.0;
      for (const auto& r : energy_audit(traj, spec).rows) {
        jumps += r.jump_sq;
      }
      CHECK(gap == doctest::Approx(traj.grid.tau() / 3.0 * jumps).epsilon(1e-10));
      CHECK(gap == doctest::Approx(I.jump_identity()).epsilon(1e-10));
    }
  }
}

TEST_CASE("bar-hat gap vanishes at least linearly in tau") {
  const ProblemSpec spec = models::p_laplacian(1);
  const auto space = FemSpace::create(1, 16);
  double prev = 0.0;
  for (int N : {8, 16, 32, 64}) {
    const DiscreteTrajectory traj = run(spec, space, TimeGrid(1.0, N));
    const double gap = Interpolants(traj, spec).bar_hat_gap_sq();
    if (prev > 0.0) {
      CHECK(prev / gap >= 1.9);
    }
    prev = gap;
  }
}

TEST_CASE("Steklov average examples") {
  const std::vector<double> times{0.0, 0.5, 1.0};
  const PiecewiseLinearInTime constant(times, {{3.0, -1.0}, {3.0, -1.0}, {3.0, -1.0}});
  const QuadField c = steklov_average(constant, 0.2, 0.5);
  CHECK(c[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(-1.0).epsilon(1e-15));

  const PiecewiseLinearInTime linear(times, {{0.0}, {1.0}, {2.0}});
  CHECK(steklov_average(linear, 0.1, 0.3)[0] == doctest::Approx(0.6).epsilon(1e-14));
  // Window straddling the knot of a straight line: still exact.
  CHECK(steklov_average(linear, 0.3, 0.5)[0] == doctest::Approx(1.0).epsilon(1e-14));

  // Extension by zero past T halves a constant at t = T.
  CHECK(steklov_average(constant, 0.2, 1.0)[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(steklov_average(constant, 0.2, 0.0)[1] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(steklov_average(constant, 0.2, 2.0)[0] == 0.0);

  // Integral against Simpson on a kinked profile.
  const PiecewiseLinearInTime kink(times, {{0.0}, {2.0}, {0.5}});
  const auto g = [](double s) { return s < 0.0 || s > 1.0 ? 0.0 : s <= 0.5 ? 4.0 * s : 2.0 - 3.0 * (s - 0.5); };
  const double simpson = oracle::simpson(g, 0.3, 0.5) + oracle::simpson(g, 0.5, 0.9);
  CHECK(kink.integral(0.3, 0.9)[0] == doctest::Approx(simpson).epsilon(1e-12));
  CHECK(steklov_average(kink, 0.3, 0.6)[0] == doctest::Approx(simpson / 0.6).epsilon(1e-12));
}

TEST_CASE("Steklov average converges at rate h at a kink") {
  const ProblemSpec spec = models::lipschitz_convection(1);
  const DiscreteTrajectory traj = run(spec, FemSpace::create(1, 16), TimeGrid(1.0, 8));
  const Interpolants I(traj, spec);
  const double t = traj.grid.t(4);
  const QuadField target = I.hat_u(t);
  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025, 0.0125, 0.00625}) {
    const QuadField avg = steklov_average(I.hat(), h, t);
    QuadField diff(avg.size());
    for (std::size_t i = 0; i < avg.size(); ++i) {
      diff[i] = avg[i] - target[i];
    }
    const double err = std::sqrt(I.l2_norm_sq(diff));
    if (prev > 0.0 && h < traj.grid.tau()) {
      CHECK(prev / err == doctest::Approx(2.0).epsilon(1e-6));
    }
    prev = err;
  }
}

TEST_CASE("Poincare probe") {
  const auto space = FemSpace::create(1, 64);
  const FemFunction u = restrict_to(space, [](const Point& x) { return x.x() * (1.0 - x.x()); });
  const auto sq = MusielakFunction::power(2.0);

  // Oracle: norms of the interpolant by Simpson on each cell.
  const double h = 1.0 / 64.0;
  double u2 = 0.0, g2 = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double a = k * h, b = a + h;
    const double ua = a * (1 - a), ub = b * (1 - b);
    u2 += oracle::simpson([&](double x) { const double v = ua + (ub - ua) * (x - a) / h; return v * v; }, a, b, 20);
    g2 += (ub - ua) * (ub - ua) / h;
  }
  const double ratio = std::sqrt(u2 / g2);
  CHECK(ratio == doctest::Approx(std::sqrt(1.0 / 30.0) / std::sqrt(1.0 / 3.0)).epsilon(1e-3));
  CHECK(ratio == doctest::Approx(0.316).epsilon(2e-3));

  const double fine = poincare_probe(sq, u, LambdaGrid{0.25, 1.0001, 1.0});
  CHECK(fine >= ratio);
  CHECK(fine <= ratio * 1.0001 * (1.0 + 1e-12));
  CHECK(poincare_probe(sq, u) == 0.5);

  for (double c : {1e-3, 0.2, 7.0, 1e4}) {
    const FemFunction scaled(space, c * u.coefficients());
    CHECK(poincare_probe(sq, scaled) == 0.5);
    CHECK(poincare_probe(MusielakFunction::power(3.0), scaled) ==
          poincare_probe(MusielakFunction::power(3.0), u));
  }

  try {
    poincare_probe(sq, FemFunction(space));
    FAIL("expected precondition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
  }
  try {
    poincare_probe(sq, u, LambdaGrid{1e-6, 2.0, 1e-3});
    FAIL("expected probe failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::probe_failure);
  }
}
