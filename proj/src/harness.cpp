#include "mopar/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numbers>
#include <ostream>

namespace mopar {

namespace exact {

ExactSolution exp_sin(int dim, double amplitude, double rate) {
  require(dim == 1 || dim == 2, "dimension must be 1 or 2", ErrorCode::config);
  constexpr double pi = std::numbers::pi;
  const double A = amplitude;
  const double k = rate;
  auto s = [dim](const Point& x) {
    return dim == 1 ? std::sin(pi * x.x()) : std::sin(pi * x.x()) * std::sin(pi * x.y());
  };
  ExactSolution u;
  u.id = "exp_sin";
  u.params = {{"amplitude", A}, {"rate", k}};
  u.value = [=](const Point& x, double t) { return A * std::exp(-k * t) * s(x); };
  u.dt = [=](const Point& x, double t) { return -k * A * std::exp(-k * t) * s(x); };
  u.dtt = [=](const Point& x, double t) { return k * k * A * std::exp(-k * t) * s(x); };
  u.grad = [=](const Point& x, double t) {
    const double e = A * std::exp(-k * t) * pi;
    if (dim == 1) {
      return Vec2(e * std::cos(pi * x.x()), 0.0);
    }
    return Vec2(e * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                e * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  u.hessian = [=](const Point& x, double t) {
    const double e = A * std::exp(-k * t) * pi * pi;
    Mat2 H = Mat2::Zero();
    if (dim == 1) {
      H(0, 0) = -e * std::sin(pi * x.x());
      return H;
    }
    const double sxy = std::sin(pi * x.x()) * std::sin(pi * x.y());
    H(0, 0) = -e * sxy;
    H(1, 1) = -e * sxy;
    H(0, 1) = H(1, 0) = e * std::cos(pi * x.x()) * std::cos(pi * x.y());
    return H;
  };
  return u;
}

ExactSolution steady_bubble(int dim, double amplitude) {
  require(dim == 1 || dim == 2, "dimension must be 1 or 2", ErrorCode::config);
  const double A = amplitude;
  auto g = [](double s) { return s * (1.0 - s); };
  auto dg = [](double s) { return 1.0 - 2.0 * s; };
  ExactSolution u;
  u.id = "steady_bubble";
  u.params = {{"amplitude", A}};
  u.value = [=](const Point& x, double) {
    return dim == 1 ? A * g(x.x()) : A * g(x.x()) * g(x.y());
  };
  u.dt = [](const Point&, double) { return 0.0; };
  u.dtt = [](const Point&, double) { return 0.0; };
  u.grad = [=](const Point& x, double) {
    if (dim == 1) {
      return Vec2(A * dg(x.x()), 0.0);
    }
    return Vec2(A * dg(x.x()) * g(x.y()), A * g(x.x()) * dg(x.y()));
  };
  u.hessian = [=](const Point& x, double) {
    Mat2 H = Mat2::Zero();
    if (dim == 1) {
      H(0, 0) = -2.0 * A;
      return H;
    }
    H(0, 0) = -2.0 * A * g(x.y());
    H(1, 1) = -2.0 * A * g(x.x());
    H(0, 1) = H(1, 0) = A * dg(x.x()) * dg(x.y());
    return H;
  };
  return u;
}

ExactSolution zero() {
  ExactSolution u;
  u.id = "zero";
  u.value = [](const Point&, double) { return 0.0; };
  u.dt = u.value;
  u.dtt = u.value;
  u.grad = [](const Point&, double) { return Vec2(Vec2::Zero()); };
  u.hessian = [](const Point&, double) { return Mat2(Mat2::Zero()); };
  return u;
}

ExactSolution by_id(const std::string& id, const Params& params, int dim) {
  auto get = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (id == "exp_sin") {
    return exp_sin(dim, get("amplitude", 1.0), get("rate", 1.0));
  }
  if (id == "steady_bubble") {
    return steady_bubble(dim, get("amplitude", 1.0));
  }
  if (id == "zero") {
    return zero();
  }
  throw Error(ErrorCode::config, "unknown exact solution id '" + id + "'");
}

}  // namespace exact

double manufactured_source(const ProblemSpec& spec, const ExactSolution& u, const Point& x,
                           double t) {
  constexpr double h = 1e-5;
  const double s = u.value(x, t);
  const Vec2 xi = u.grad(x, t);
  const Mat2 H = u.hessian(x, t);
  const Mat2 J = spec.a.jacobian(x, xi, 1e-12);
  double div = 0.0;
  for (int i = 0; i < spec.dim; ++i) {
    Point xp = x;
    Point xm = x;
    xp[i] += h;
    xm[i] -= h;
    div += (spec.a.value(xp, xi)[i] - spec.a.value(xm, xi)[i]) / (2.0 * h);
    for (int j = 0; j < spec.dim; ++j) {
      div += J(i, j) * H(j, i);
    }
  }
  return spec.b.deriv(s) * u.dt(x, t) - div - spec.K.deriv(s).dot(xi);
}

ManufacturedCase manufacture(ProblemSpec base, ExactSolution u) {
  ManufacturedCase mc{std::move(base), std::move(u)};
  const ProblemSpec frozen = mc.spec;
  const ExactSolution ex = mc.exact;
  mc.spec.name = frozen.name + "+" + ex.id;
  mc.spec.f = SpaceTimeFunction{"manufactured:" + ex.id, ex.params,
                                [frozen, ex](const Point& x, double t) {
                                  return manufactured_source(frozen, ex, x, t);
                                }};
  mc.spec.u0 = SpaceTimeFunction{ex.id, ex.params,
                                 [ex](const Point& x, double) { return ex.value(x, 0.0); }};
  return mc;
}

FieldError error_at(const FemFunction& uh, const ExactSolution& u, double t) {
  const Mesh& mesh = uh.space().mesh();
  const QuadratureRule quad = refined_rule(mesh.dim());
  const auto nodal = uh.nodal_values();
  FieldError e;
  e.l1 = integrate(mesh, quad, [&](std::size_t c, const Point& x, std::span<const double> bary) {
    return std::abs(eval_nodal(mesh, nodal, c, bary) - u.value(x, t));
  });
  e.l2 = std::sqrt(
      integrate(mesh, quad, [&](std::size_t c, const Point& x, std::span<const double> bary) {
        const double d = eval_nodal(mesh, nodal, c, bary) - u.value(x, t);
        return d * d;
      }));
  return e;
}

// ---------------------------------------------------------------------------

double fitted_order(const std::vector<double>& x, const std::vector<double>& err) {
  require(x.size() == err.size() && x.size() >= 2, "order fit needs at least two points");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && err[i] > 0.0, "order fit needs positive data");
    mx += std::log(x[i]) / n;
    my += std::log(err[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(err[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

void finish_report(ConvergenceReport& r, double degenerate_floor) {
  double max_err = 0.0;
  for (const auto& row : r.rows) {
    max_err = std::max(max_err, row.err_l1);
  }
  std::vector<double> x, e1, e2;
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    auto& row = r.rows[k];
    row.level = static_cast<int>(k);
    if (k == 0) {
      row.rate = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto& prev = r.rows[k - 1];
      row.rate = std::log(prev.err_l1 / row.err_l1) / std::log(prev.tau_or_h / row.tau_or_h);
      r.monotone = r.monotone && row.err_l1 < prev.err_l1;
    }
    x.push_back(row.tau_or_h);
    e1.push_back(row.err_l1);
    e2.push_back(row.err_l2);
  }
  const bool all_positive = std::all_of(e1.begin(), e1.end(), [](double v) { return v > 0.0; }) &&
                            std::all_of(e2.begin(), e2.end(), [](double v) { return v > 0.0; });
  if (r.degenerate || !all_positive || max_err <= degenerate_floor) {
    r.degenerate = true;
    r.monotone = false;
    r.order_l1 = r.order_l2 = 0.0;
    for (auto& row : r.rows) {
      row.rate = std::numeric_limits<double>::quiet_NaN();
    }
    return;
  }
  r.order_l1 = fitted_order(x, e1);
  r.order_l2 = fitted_order(x, e2);
}

}  // namespace

ConvergenceReport temporal_order_study(const ManufacturedCase& mc, const TemporalStudyOptions& opts) {
  require(opts.N_list.size() >= 3, "temporal study needs at least three step counts");
  for (std::size_t i = 1; i < opts.N_list.size(); ++i) {
    require(opts.N_list[i] > opts.N_list[i - 1], "step counts must be strictly increasing");
  }
  const SpacePtr space = FemSpace::create(mc.spec.dim, opts.m);
  const double T = opts.T;

  auto final_error = [&](const SpacePtr& sp, int N) {
    const DiscreteTrajectory traj = run(mc.spec, sp, TimeGrid(T, N), opts.solver);
    return error_at(traj.states.back(), mc.exact, T);
  };

  std::vector<std::future<FieldError>> jobs;
  for (int N : opts.N_list) {
    jobs.push_back(std::async(std::launch::async, final_error, space, N));
  }
  ConvergenceReport report;
  report.kind = "temporal";
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const FieldError e = jobs[k].get();
    ConvergenceRow row;
    row.N = opts.N_list[k];
    row.m = opts.m;
    row.tau_or_h = T / row.N;
    row.err_l1 = e.l1;
    row.err_l2 = e.l2;
    report.rows.push_back(row);
  }

  const double last = report.rows.back().err_l1;
  double variation = 0.0;
  for (const auto& row : report.rows) {
    variation = std::max(variation, std::abs(row.err_l1 - last));
  }
  report.degenerate = variation <= 1e-9 * std::max(last, 1e-300) + 1e-14;

  if (opts.check_spatial && !report.degenerate) {
    const SpacePtr fine = FemSpace::create(mc.spec.dim, 2 * opts.m);
    const FieldError e_fine = final_error(fine, opts.N_list.back());
    report.spatial_error_estimate = std::abs(last - e_fine.l1);
    const double coarsest = report.rows.front().err_l1;
    if (report.spatial_error_estimate > 0.1 * coarsest) {
      throw Error(ErrorCode::precondition,
                  "spatial error estimate " + std::to_string(report.spatial_error_estimate) +
                      " exceeds 10% of the coarsest temporal error " + std::to_string(coarsest) +
                      "; refine the mesh");
    }
  }
  finish_report(report, 0.0);
  return report;
}

ConvergenceReport spatial_refinement_study(const ManufacturedCase& mc,
                                           const SpatialStudyOptions& opts) {
  require(opts.m_list.size() >= 3, "spatial study needs at least three resolutions");
  for (std::size_t i = 1; i < opts.m_list.size(); ++i) {
    require(opts.m_list[i] > opts.m_list[i - 1], "resolutions must be strictly increasing");
  }
  std::vector<std::future<FieldError>> jobs;
  for (int m : opts.m_list) {
    jobs.push_back(std::async(std::launch::async, [&mc, &opts, m] {
      const DiscreteTrajectory traj =
          run(mc.spec, FemSpace::create(mc.spec.dim, m), TimeGrid(opts.T, opts.N), opts.solver);
      return error_at(traj.states.back(), mc.exact, opts.T);
    }));
  }
  ConvergenceReport report;
  report.kind = "spatial";
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const FieldError e = jobs[k].get();
    ConvergenceRow row;
    row.N = opts.N;
    row.m = opts.m_list[k];
    row.tau_or_h = 1.0 / row.m;
    row.err_l1 = e.l1;
    row.err_l2 = e.l2;
    report.rows.push_back(row);
  }
  finish_report(report, 1e-13);
  return report;
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  os << "level,tau_or_h,err_L1,err_L2,rate\n";
  char buf[256];
  for (const auto& row : report.rows) {
    if (std::isnan(row.rate)) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,\n", row.level, row.tau_or_h,
                    row.err_l1, row.err_l2);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", row.level, row.tau_or_h,
                    row.err_l1, row.err_l2, row.rate);
    }
    os << buf;
  }
}

// ---------------------------------------------------------------------------

FemFunction brute_force_oracle(const ProblemSpec& spec, const FemFunction& u_prev, double tau,
                               double t_n, int grid_resolution) {
  const FemSpace& space = u_prev.space();
  const std::size_t n = space.num_dofs();
  require(n >= 1 && n <= 3, "brute-force oracle handles one to three unknowns");
  require(grid_resolution >= 3, "oracle grid needs at least three points per axis");
  const int G = grid_resolution | 1;
  const Vector& prev = u_prev.coefficients();
  auto residual = [&](const Vector& c) {
    return assemble_residual(spec, space, c, prev, tau, t_n);
  };

  // Grid search.
  Vector center = prev;
  double half = std::max(1.0, 2.0 * prev.lpNorm<Eigen::Infinity>());
  Vector best = center;
  for (int attempt = 0; attempt < 40; ++attempt) {
    double best_norm = std::numeric_limits<double>::infinity();
    std::vector<int> best_idx(n, 0);
    std::vector<int> idx(n, 0);
    Vector c(static_cast<Eigen::Index>(n));
    const double step = 2.0 * half / (G - 1);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) {
        c[static_cast<Eigen::Index>(i)] = center[static_cast<Eigen::Index>(i)] - half + step * idx[i];
      }
      const double rn = residual(c).lpNorm<Eigen::Infinity>();
      if (rn < best_norm) {
        best_norm = rn;
        best = c;
        best_idx = idx;
      }
      std::size_t k = 0;
      while (k < n && ++idx[k] == G) {
        idx[k++] = 0;
      }
      if (k == n) {
        break;
      }
    }
    const bool on_edge = std::any_of(best_idx.begin(), best_idx.end(),
                                     [G](int i) { return i == 0 || i == G - 1; });
    if (!on_edge) {
      half = step;
      break;
    }
    center = best;
    half *= 2.0;
  }

  // Gauss-Seidel sweeps of scalar bisection.
  Vector c = best;
  double width = half;
  for (int sweep = 0; sweep < 2000; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      auto g = [&](double v) {
        Vector trial = c;
        trial[ii] = v;
        return residual(trial)[ii];
      };
      double lo = c[ii] - width;
      double hi = c[ii] + width;
      double glo = g(lo);
      double ghi = g(hi);
      int expansions = 0;
      while (glo * ghi > 0.0 && expansions < 60) {
        const double w = hi - lo;
        lo -= w;
        hi += w;
        glo = g(lo);
        ghi = g(hi);
        ++expansions;
      }
      if (glo * ghi > 0.0) {
        throw Error(ErrorCode::oracle_failure,
                    "residual component " + std::to_string(i) + " shows no sign change");
      }
      for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      moved = std::max(moved, std::abs(root - c[ii]));
      c[ii] = root;
    }
    width = std::max(4.0 * moved, 1e-12);
    if (moved <= 1e-14 * std::max(1.0, c.lpNorm<Eigen::Infinity>())) {
      break;
    }
  }
  const Vector r = residual(c);
  const double scale = std::max(1.0, prev.lpNorm<Eigen::Infinity>() / tau);
  if (!(r.lpNorm<Eigen::Infinity>() <= 1e-10 * scale)) {
    throw Error(ErrorCode::oracle_failure,
                "coordinate bisection stalled at residual " +
                    std::to_string(r.lpNorm<Eigen::Infinity>()));
  }
  return FemFunction(u_prev.space_ptr(), c);
}

}  // namespace mopar
