#include "mopar/diagnostics.hpp"

#include "mopar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace mopar {

namespace {

struct Sampler {
  const Mesh& mesh;
  const QuadratureRule& quad;

  [[nodiscard]] std::size_t size() const { return mesh.num_cells() * quad.size(); }

  [[nodiscard]] QuadField values(std::span<const double> nodal) const {
    QuadField out(size());
    const std::size_t nv = mesh.vertices_per_cell();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      for (std::size_t q = 0; q < quad.size(); ++q) {
        out[c * quad.size() + q] =
            eval_nodal(mesh, nodal, c, std::span<const double>(quad.points[q].data(), nv));
      }
    }
    return out;
  }

  [[nodiscard]] std::vector<Point> points() const {
    std::vector<Point> out(size());
    const std::size_t nv = mesh.vertices_per_cell();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      for (std::size_t q = 0; q < quad.size(); ++q) {
        out[c * quad.size() + q] =
            mesh.map(c, std::span<const double>(quad.points[q].data(), nv));
      }
    }
    return out;
  }

  [[nodiscard]] std::vector<double> weights() const {
    std::vector<double> out(size());
    const double ref = quad.reference_measure();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      for (std::size_t q = 0; q < quad.size(); ++q) {
        out[c * quad.size() + q] = quad.weights[q] * mesh.measure(c) / ref;
      }
    }
    return out;
  }
};

double weighted_sum(const std::vector<double>& w, const QuadField& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s += w[i] * v[i];
  }
  return s;
}

QuadField map_b(const AccumulationLaw& b, const QuadField& u) {
  QuadField out(u.size());
  std::transform(u.begin(), u.end(), out.begin(), [&](double s) { return b(s); });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

bool EnergyLedger::verdict() const {
  return std::all_of(rows.begin(), rows.end(), [](const LedgerRow& r) { return r.pass; });
}

EnergyLedger energy_audit(const DiscreteTrajectory& traj, const ProblemSpec& spec, double eps,
                          const std::optional<QuadratureRule>& quad_opt) {
  require(eps > 0.0 && eps < 1.0, "audit eps must lie in (0, 1)");
  const double tau = traj.grid.tau();
  const auto& c = spec.constants;
  EnergyLedger ledger;
  ledger.eps = eps;
  ledger.margin = c.energy_margin(tau);
  if (!(ledger.margin > 0.0)) {
    throw Error(ErrorCode::structure_violation,
                "energy margin 2 tau (nu b0 - 2 b1 nu0) = " + std::to_string(ledger.margin) +
                    " is not positive; the structure condition nu > 4 nu0 fails");
  }

  const Mesh& mesh = traj.space().mesh();
  const QuadratureRule quad = quad_opt.value_or(traj.space().quadrature());
  const Sampler sampler{mesh, quad};
  const auto weights = sampler.weights();
  const auto points = sampler.points();
  const auto N = static_cast<std::size_t>(traj.grid.steps());

  std::vector<QuadField> bu(N + 1);
  std::vector<std::vector<double>> nodal(N + 1);
  for (std::size_t n = 0; n <= N; ++n) {
    nodal[n] = traj.states[n].nodal_values();
  }

  struct StepTerms {
    double b_norm_sq = 0.0, jump_sq = 0.0, modular = 0.0, data = 0.0, f_norm = 0.0, du = 0.0;
  };
  std::vector<StepTerms> terms(N + 1);
  parallel_for(N + 1, [&](std::size_t n) {
    bu[n] = map_b(spec.b, sampler.values(nodal[n]));
  }, 1);
  parallel_for(N + 1, [&](std::size_t n) {
    StepTerms& s = terms[n];
    for (std::size_t i = 0; i < weights.size(); ++i) {
      s.b_norm_sq += weights[i] * bu[n][i] * bu[n][i];
    }
    if (n == 0) {
      return;
    }
    const double t = traj.grid.t(static_cast<int>(n));
    const QuadField un = sampler.values(nodal[n]);
    const QuadField up = sampler.values(nodal[n - 1]);
    double f_sq = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double jump = bu[n][i] - bu[n - 1][i];
      const double f = spec.f(points[i], t);
      s.jump_sq += weights[i] * jump * jump;
      s.data += weights[i] * std::abs(f) * std::abs(bu[n][i]);
      f_sq += weights[i] * f * f;
      s.du += weights[i] * (un[i] - up[i]) * (un[i] - up[i]);
    }
    s.f_norm = std::sqrt(f_sq);
    s.du = std::sqrt(s.du);
    s.modular = gradient_modular(spec.phi, mesh, nodal[n], quad);
  }, 1);

  ledger.b0_norm_sq = terms[0].b_norm_sq;
  double jumps = 0.0, modulars = 0.0, F = 0.0, b_max = terms[0].b_norm_sq;
  for (std::size_t n = 1; n <= N; ++n) {
    const StepTerms& s = terms[n];
    jumps += s.jump_sq;
    modulars += s.modular;
    F += tau * s.f_norm;
    b_max = std::max(b_max, s.b_norm_sq);
    ledger.c4 += s.du;
    if (c.b0 * s.du > std::sqrt(s.jump_sq) * (1.0 + 1e-12) + 1e-300) {
      ledger.b_lower_bound_holds = false;
    }

    LedgerRow row;
    row.n = static_cast<int>(n);
    row.t = traj.grid.t(row.n);
    row.b_norm_sq = s.b_norm_sq;
    row.jump_sq = s.jump_sq;
    row.modular = s.modular;
    row.data_term = s.data;
    row.lhs_cum = s.b_norm_sq + jumps + ledger.margin * modulars;
    row.rhs_cum = F * F / (eps * eps) + eps * eps * b_max + ledger.b0_norm_sq;
    row.pass = std::isfinite(row.lhs_cum) && row.lhs_cum <= row.rhs_cum * (1.0 + 1e-12);
    if (F > 0.0) {
      ledger.c3_min = std::max(ledger.c3_min, (row.lhs_cum - ledger.b0_norm_sq) / (F * F));
    }
    ledger.rows.push_back(row);
  }
  ledger.f_l1l2 = F;
  return ledger;
}

double audit_quadrature_drift(const DiscreteTrajectory& traj, const ProblemSpec& spec, double eps) {
  const EnergyLedger base = energy_audit(traj, spec, eps);
  const EnergyLedger fine = energy_audit(traj, spec, eps, refined_rule(traj.space().mesh().dim()));
  auto rel = [](double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    const LedgerRow& a = base.rows[i];
    const LedgerRow& b = fine.rows[i];
    for (const auto& [x, y] : {std::pair{a.b_norm_sq, b.b_norm_sq}, {a.jump_sq, b.jump_sq},
                               {a.modular, b.modular}, {a.data_term, b.data_term},
                               {a.lhs_cum, b.lhs_cum}, {a.rhs_cum, b.rhs_cum}}) {
      worst = std::max(worst, rel(x, y));
    }
  }
  return worst;
}

void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger) {
  os << "n,t_n,b_norm_sq,jump_sq,modular,data_term,lhs_cum,rhs_cum,verdict\n";
  char buf[512];
  for (const LedgerRow& r : ledger.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.n, r.t,
                  r.b_norm_sq, r.jump_sq, r.modular, r.data_term, r.lhs_cum, r.rhs_cum,
                  r.pass ? "pass" : "fail");
    os << buf;
  }
}

// ---------------------------------------------------------------------------

PiecewiseLinearInTime::PiecewiseLinearInTime(std::vector<double> times,
                                             std::vector<QuadField> knots)
    : times_(std::move(times)), knots_(std::move(knots)) {
  require(times_.size() >= 2 && times_.size() == knots_.size(),
          "piecewise linear field needs at least two knots");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    require(times_[i] > times_[i - 1], "knot times must increase");
    require(knots_[i].size() == knots_[0].size(), "knot fields differ in size");
  }
}

QuadField PiecewiseLinearInTime::operator()(double t) const {
  if (!(t >= start() && t <= end())) {
    throw Error(ErrorCode::domain, "time " + std::to_string(t) + " lies outside [" +
                                       std::to_string(start()) + ", " + std::to_string(end()) + "]");
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(it - times_.begin()), times_.size() - 1);
  const std::size_t j = k == 0 ? 1 : k;
  const double theta = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
  QuadField out(field_size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - theta) * knots_[j - 1][i] + theta * knots_[j][i];
  }
  return out;
}

QuadField PiecewiseLinearInTime::integral(double t0, double t1) const {
  QuadField out(field_size(), 0.0);
  const double a = std::max(t0, start());
  const double b = std::min(t1, end());
  if (!(b > a)) {
    return out;
  }
  std::vector<double> cuts{a};
  for (double t : times_) {
    if (t > a && t < b) {
      cuts.push_back(t);
    }
  }
  cuts.push_back(b);
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    const QuadField lo = (*this)(cuts[k - 1]);
    const QuadField hi = (*this)(cuts[k]);
    const double half = 0.5 * (cuts[k] - cuts[k - 1]);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += half * (lo[i] + hi[i]);
    }
  }
  return out;
}

QuadField steklov_average(const PiecewiseLinearInTime& w, double h, double t) {
  require(h > 0.0, "Steklov window h must be positive");
  QuadField out = w.integral(t - h, t + h);
  for (double& v : out) {
    v /= 2.0 * h;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

PiecewiseLinearInTime make_hat(const DiscreteTrajectory& traj, const AccumulationLaw& b,
                               const QuadratureRule& quad) {
  const Sampler sampler{traj.space().mesh(), quad};
  std::vector<double> times;
  std::vector<QuadField> knots;
  for (int n = 0; n <= traj.grid.steps(); ++n) {
    times.push_back(traj.grid.t(n));
    const auto nodal = traj.states[static_cast<std::size_t>(n)].nodal_values();
    knots.push_back(map_b(b, sampler.values(nodal)));
  }
  return {std::move(times), std::move(knots)};
}

}  // namespace

Interpolants::Interpolants(const DiscreteTrajectory& traj, const ProblemSpec& spec,
                           const std::optional<QuadratureRule>& quad)
    : space_(traj.states.front().space_ptr()),
      quad_(quad.value_or(traj.space().quadrature())),
      grid_(traj.grid),
      b_(spec.b),
      hat_(make_hat(traj, spec.b, quad_)) {
  const Sampler sampler{space_->mesh(), quad_};
  cell_weights_ = sampler.weights();
  const auto points = sampler.points();
  for (int n = 0; n <= grid_.steps(); ++n) {
    u_.push_back(sampler.values(traj.states[static_cast<std::size_t>(n)].nodal_values()));
    QuadField f(points.size(), 0.0);
    if (n > 0) {
      for (std::size_t i = 0; i < points.size(); ++i) {
        f[i] = spec.f(points[i], grid_.t(n));
      }
    }
    f_.push_back(std::move(f));
  }
}

int Interpolants::step_index(double t) const {
  if (!(t >= 0.0 && t <= grid_.final_time())) {
    throw Error(ErrorCode::domain, "time " + std::to_string(t) + " lies outside [0, T]");
  }
  const int n = static_cast<int>(std::ceil(t / grid_.tau() - 1e-9));
  return std::clamp(n, 1, grid_.steps());
}

QuadField Interpolants::bar_u(double t) const { return u_[static_cast<std::size_t>(step_index(t))]; }

QuadField Interpolants::bar_f(double t) const { return f_[static_cast<std::size_t>(step_index(t))]; }

double Interpolants::integrate(const QuadField& w) const { return weighted_sum(cell_weights_, w); }

double Interpolants::l2_norm_sq(const QuadField& w) const {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s += cell_weights_[i] * w[i] * w[i];
  }
  return s;
}

double Interpolants::bar_hat_gap_sq() const {
  std::vector<double> nodes, weights;
  gauss_legendre(3, nodes, weights);
  const double tau = grid_.tau();
  double total = 0.0;
  for (int n = 1; n <= grid_.steps(); ++n) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double t = grid_.t(n - 1) + 0.5 * tau * (nodes[k] + 1.0);
      QuadField gap = map_b(b_, bar_u(t));
      const QuadField h = hat_u(t);
      for (std::size_t i = 0; i < gap.size(); ++i) {
        gap[i] -= h[i];
      }
      total += 0.5 * tau * weights[k] * l2_norm_sq(gap);
    }
  }
  return total;
}

double Interpolants::jump_identity() const {
  double sum = 0.0;
  for (int n = 1; n <= grid_.steps(); ++n) {
    const QuadField hi = hat_u(grid_.t(n));
    QuadField d = hat_u(grid_.t(n - 1));
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = hi[i] - d[i];
    }
    sum += l2_norm_sq(d);
  }
  return grid_.tau() / 3.0 * sum;
}

// ---------------------------------------------------------------------------

double poincare_probe(const MusielakFunction& phi, const FemFunction& u, const LambdaGrid& grid) {
  require(u.coefficients().size() > 0 && u.coefficients().lpNorm<Eigen::Infinity>() > 0.0,
          "Poincare probe needs a nonzero field");
  require(grid.start > 0.0 && grid.factor > 1.0 && grid.max >= grid.start,
          "lambda grid must start positive and grow");
  const Mesh& mesh = u.space().mesh();
  const QuadratureRule& quad = u.space().quadrature();
  const auto nodal = u.nodal_values();
  const double lhs = modular(phi, mesh, nodal, quad);
  for (double lambda = grid.start; lambda <= grid.max * (1.0 + 1e-12); lambda *= grid.factor) {
    if (lhs <= gradient_modular(phi, mesh, nodal, quad, lambda)) {
      return lambda;
    }
  }
  throw Error(ErrorCode::probe_failure,
              "no lambda up to " + std::to_string(grid.max) + " satisfies the modular Poincare inequality");
}

}  // namespace mopar
