#include "mopar/musielak.hpp"

#include "mopar/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace mopar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kConjugateSearchLimit = 1099511627776.0;  // 2^40

struct ModularSum {
  double value = 0.0;
  std::size_t bad_cell = Mesh::npos;
};

template <class Integrand>
ModularSum integrate_cells(const Mesh& mesh, const QuadratureRule& quad, Integrand&& integrand) {
  require(quad.dim == mesh.dim(), "quadrature rule dimension does not match mesh");
  ModularSum out;
  const double ref = quad.reference_measure();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double jac = mesh.measure(c) / ref;
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      cell_sum += quad.weights[q] * integrand(c, quad.points[q]);
    }
    if (!std::isfinite(cell_sum) && out.bad_cell == Mesh::npos) {
      out.bad_cell = c;
    }
    out.value += jac * cell_sum;
  }
  return out;
}

/// int_a^b |s|^p w(s) ds for w linear with w(a) = wa, w(b) = wb and a <= b.
double power_weighted(double p, double a, double b, double wa, double wb) {
  if (!(b > a)) {
    return 0.0;
  }
  if (a < 0.0 && b > 0.0) {
    const double w0 = wa + (wb - wa) * (-a / (b - a));
    return power_weighted(p, a, 0.0, wa, w0) + power_weighted(p, 0.0, b, w0, wb);
  }
  if (b <= 0.0) {
    return power_weighted(p, -b, -a, wb, wa);
  }
  if (a <= 0.5 * b) {
    // Antiderivatives are well conditioned once the interval reaches near zero.
    const double beta = (wb - wa) / (b - a);
    const double alpha = wa - beta * a;
    return alpha * (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0) +
           beta * (std::pow(b, p + 2.0) - std::pow(a, p + 2.0)) / (p + 2.0);
  }
  // Away from zero the integrand is analytic on a neighbourhood of [a, b].
  static const auto rule = [] {
    std::pair<std::vector<double>, std::vector<double>> r;
    gauss_legendre(10, r.first, r.second);
    return r;
  }();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.first.size(); ++i) {
    const double t = rule.first[i];
    const double s = mid + half * t;
    sum += rule.second[i] * std::pow(s, p) * (0.5 * (1.0 - t) * wa + 0.5 * (1.0 + t) * wb);
  }
  return half * sum;
}

/// int over cell c of coefficient * |scale u|^p for a P1 field u, exactly up to
/// round-off: the cell integral reduces to one dimension through the measure of
/// the level sets of u, which is piecewise linear in the level.
double exact_power_cell(double p, double coefficient, const Mesh& mesh, std::size_t c,
                        std::span<const double> nodal, double scale) {
  const auto& cell = mesh.cell(c);
  const double m = mesh.measure(c);
  if (mesh.dim() == 1) {
    double a = scale * nodal[cell[0]], b = scale * nodal[cell[1]];
    if (a > b) {
      std::swap(a, b);
    }
    if (a == b) {
      return coefficient * m * std::pow(std::abs(a), p);
    }
    const double w = m / (b - a);
    return coefficient * power_weighted(p, a, b, w, w);
  }
  std::array<double, 3> v{scale * nodal[cell[0]], scale * nodal[cell[1]], scale * nodal[cell[2]]};
  std::sort(v.begin(), v.end());
  if (v[2] == v[0]) {
    return coefficient * m * std::pow(std::abs(v[0]), p);
  }
  const double peak = 2.0 * m / (v[2] - v[0]);
  return coefficient * (power_weighted(p, v[0], v[1], 0.0, peak) + power_weighted(p, v[1], v[2], peak, 0.0));
}

ModularSum modular_sum(const MusielakFunction& phi, const Mesh& mesh,
                       std::span<const double> nodal, const QuadratureRule& quad, double scale) {
  require(nodal.size() == mesh.num_vertices(), "nodal field size does not match mesh");
  const std::size_t nv = mesh.vertices_per_cell();
  if (phi.kind() == MusielakKind::power) {
    require(quad.dim == mesh.dim(), "quadrature rule dimension does not match mesh");
    ModularSum out;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const double v = exact_power_cell(phi.exponent_coefficients()[0], phi.coefficient(), mesh, c, nodal, scale);
      if (!std::isfinite(v) && out.bad_cell == Mesh::npos) {
        out.bad_cell = c;
      }
      out.value += v;
    }
    return out;
  }
  return integrate_cells(mesh, quad, [&](std::size_t c, const std::array<double, 3>& bary) {
    const auto& cell = mesh.cell(c);
    double u = 0.0;
    for (std::size_t k = 0; k < nv; ++k) {
      u += bary[k] * nodal[cell[k]];
    }
    const Point x = mesh.map(c, std::span<const double>(bary.data(), nv));
    return phi(x, scale * std::abs(u));
  });
}

ModularSum gradient_modular_sum(const MusielakFunction& phi, const Mesh& mesh,
                                std::span<const double> nodal, const QuadratureRule& quad,
                                double scale) {
  require(nodal.size() == mesh.num_vertices(), "nodal field size does not match mesh");
  const std::size_t nv = mesh.vertices_per_cell();
  return integrate_cells(mesh, quad, [&](std::size_t c, const std::array<double, 3>& bary) {
    const auto& cell = mesh.cell(c);
    const auto grads = mesh.basis_gradients(c);
    Vec2 g = Vec2::Zero();
    for (std::size_t k = 0; k < nv; ++k) {
      g += nodal[cell[k]] * grads[k];
    }
    const Point x = mesh.map(c, std::span<const double>(bary.data(), nv));
    return phi(x, scale * g.norm());
  });
}

double checked(const ModularSum& s) {
  if (s.bad_cell != Mesh::npos) {
    throw Error(ErrorCode::divergent_modular,
                "modular integrand is not finite on element " + std::to_string(s.bad_cell));
  }
  return s.value;
}

}  // namespace

MusielakFunction::MusielakFunction(MusielakKind kind, std::string name, Map value, Map deriv)
    : kind_(kind), name_(std::move(name)), value_(std::move(value)), deriv_(std::move(deriv)) {}

MusielakFunction MusielakFunction::power(double exponent, double coefficient) {
  require(exponent >= 1.0, "power Musielak function needs exponent >= 1");
  require(coefficient > 0.0, "power Musielak function needs a positive coefficient");
  std::ostringstream name;
  name << coefficient << "*t^" << exponent;
  MusielakFunction phi(
      MusielakKind::power, name.str(),
      [exponent, coefficient](const Point&, double t) { return coefficient * std::pow(t, exponent); },
      [exponent, coefficient](const Point&, double t) {
        return coefficient * exponent * std::pow(t, exponent - 1.0);
      });
  phi.exponent_ = {exponent, 0.0, 0.0};
  phi.coefficient_ = coefficient;
  return phi;
}

MusielakFunction MusielakFunction::variable_power(std::array<double, 3> exponent,
                                                  double coefficient) {
  require(coefficient > 0.0, "variable-power Musielak function needs a positive coefficient");
  auto p = [exponent](const Point& x) {
    return exponent[0] + exponent[1] * x.x() + exponent[2] * x.y();
  };
  std::ostringstream name;
  name << coefficient << "*t^(" << exponent[0] << "+" << exponent[1] << "*x+" << exponent[2]
       << "*y)";
  MusielakFunction phi(
      MusielakKind::variable_power, name.str(),
      [p, coefficient](const Point& x, double t) { return coefficient * std::pow(t, p(x)); },
      [p, coefficient](const Point& x, double t) {
        const double e = p(x);
        return coefficient * e * std::pow(t, e - 1.0);
      });
  phi.exponent_ = exponent;
  phi.coefficient_ = coefficient;
  return phi;
}

MusielakFunction MusielakFunction::custom(std::string name, Map value, Map deriv) {
  return MusielakFunction(MusielakKind::custom, std::move(name), std::move(value),
                          std::move(deriv));
}

double MusielakFunction::exponent_at(const Point& x) const {
  if (kind_ == MusielakKind::custom) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return exponent_[0] + exponent_[1] * x.x() + exponent_[2] * x.y();
}

double modular(const MusielakFunction& phi, const Mesh& mesh, std::span<const double> nodal,
               const QuadratureRule& quad, double scale) {
  return checked(modular_sum(phi, mesh, nodal, quad, scale));
}

double gradient_modular(const MusielakFunction& phi, const Mesh& mesh,
                        std::span<const double> nodal, const QuadratureRule& quad, double scale) {
  return checked(gradient_modular_sum(phi, mesh, nodal, quad, scale));
}

double luxemburg_norm(const MusielakFunction& phi, const Mesh& mesh,
                      std::span<const double> nodal, const QuadratureRule& quad, double tol) {
  require(tol > 0.0, "Luxemburg norm tolerance must be positive");
  if (std::all_of(nodal.begin(), nodal.end(), [](double v) { return v == 0.0; })) {
    return 0.0;
  }
  // rho(u / lambda); overflow counts as "above one".
  auto rho = [&](double lambda) {
    const ModularSum s = modular_sum(phi, mesh, nodal, quad, 1.0 / lambda);
    if (std::isnan(s.value)) {
      throw Error(ErrorCode::divergent_modular,
                  "modular is NaN on element " + std::to_string(s.bad_cell));
    }
    return s.bad_cell == Mesh::npos ? s.value : kInf;
  };

  double lo = 0.0;
  double hi = 1.0;
  if (rho(hi) > 1.0) {
    int doublings = 0;
    while (rho(hi) > 1.0) {
      lo = hi;
      hi *= 2.0;
      if (++doublings > 200) {
        throw Error(ErrorCode::unbounded_norm, "Luxemburg norm bracket exceeded 200 doublings");
      }
    }
  } else {
    lo = 0.5;
    int halvings = 0;
    while (rho(lo) <= 1.0) {
      hi = lo;
      lo *= 0.5;
      if (++halvings > 1100) {
        return 0.0;
      }
    }
  }
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    if (rho(mid) <= 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double orlicz_dual_bound(const MusielakFunction& phi, const Mesh& mesh,
                         std::span<const double> nodal, const QuadratureRule& quad, double tol) {
  return 2.0 * luxemburg_norm(conjugate_function(phi), mesh, nodal, quad, tol);
}

double conjugate_maximizer(const MusielakFunction& phi, const Point& x, double s) {
  require(s >= 0.0 && std::isfinite(s), "conjugate argument must be finite and non-negative");
  if (s == 0.0) {
    return 0.0;
  }
  auto objective = [&](double t) {
    const double v = s * t - phi(x, t);
    return std::isnan(v) ? -kInf : v;
  };

  // The objective is concave: once g(2t) <= g(t) the maximizer lies in [0, 2t].
  double t_hi = 1.0;
  while (objective(2.0 * t_hi) > objective(t_hi)) {
    t_hi *= 2.0;
    if (t_hi > kConjugateSearchLimit) {
      throw Error(ErrorCode::conjugate_infinite,
                  "conjugate objective unbounded above at s=" + std::to_string(s) +
                      " (function is not superlinear)");
    }
  }
  double a = 0.0;
  double b = 2.0 * t_hi;
  for (int it = 0; it < 60; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (objective(m1) < objective(m2)) {
      a = m1;
    } else {
      b = m2;
    }
  }
  double t_star = 0.5 * (a + b);

  if (phi.has_derivative()) {
    // Solve phi'(t) = s; the derivative is non-decreasing.
    auto excess = [&](double t) { return phi.derivative(x, t) - s; };
    double lo = a;
    double hi = b;
    if (!(excess(lo) <= 0.0 && excess(hi) >= 0.0)) {
      lo = 0.0;
      hi = 2.0 * t_hi;
    }
    if (excess(lo) > 0.0) {
      t_star = lo;
    } else if (excess(hi) >= 0.0) {
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
          break;
        }
        (excess(mid) < 0.0 ? lo : hi) = mid;
      }
      const double cand = objective(lo) >= objective(hi) ? lo : hi;
      if (objective(cand) >= objective(t_star)) {
        t_star = cand;
      }
    }
  }
  return objective(t_star) >= objective(0.0) ? t_star : 0.0;
}

double young_conjugate(const MusielakFunction& phi, const Point& x, double s) {
  const double t = conjugate_maximizer(phi, x, s);
  return std::max(0.0, s * t - phi(x, t));
}

double conjugate_inverse(const MusielakFunction& phi, const Point& x, double y) {
  require(y >= 0.0 && std::isfinite(y), "conjugate inverse needs a finite non-negative value");
  if (y == 0.0) {
    return 0.0;
  }
  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (young_conjugate(phi, x, hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) {
      throw Error(ErrorCode::conjugate_infinite, "conjugate inverse bracket exceeded 200 doublings");
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    (young_conjugate(phi, x, mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MusielakFunction conjugate_function(const MusielakFunction& phi) {
  return MusielakFunction::custom(
      "conj(" + phi.name() + ")",
      [phi](const Point& x, double s) { return young_conjugate(phi, x, s); },
      [phi](const Point& x, double s) { return conjugate_maximizer(phi, x, s); });
}

double young_inequality_check(const MusielakFunction& phi, const Point& x, double s, double t) {
  require(s >= 0.0 && t >= 0.0, "Young inequality arguments must be non-negative");
  return phi(x, s) + young_conjugate(phi, x, t) - s * t;
}

std::vector<double> dyadic_grid(int k_min, int k_max) {
  std::vector<double> grid;
  for (int k = k_min; k <= k_max; ++k) {
    grid.push_back(std::ldexp(1.0, k));
  }
  return grid;
}

Delta2Report delta2_probe(const MusielakFunction& phi, std::span<const double> t_grid,
                          std::span<const Point> x_samples) {
  require(!t_grid.empty() && !x_samples.empty(), "delta2 probe needs grid and samples");
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  require(t_max >= 1024.0, "delta2 probe grid must reach t >= 2^10");

  Delta2Report report;
  bool finite = true;
  for (double t : t_grid) {
    double sup = 0.0;
    for (const Point& x : x_samples) {
      const double r = phi(x, 2.0 * t) / (phi(x, t) + 1.0);
      if (!std::isfinite(r)) {
        finite = false;
        sup = kInf;
        break;
      }
      sup = std::max(sup, r);
    }
    report.C_estimate = std::max(report.C_estimate, sup);
    if (t >= t_max / 10.0) {
      report.top_decade_max = std::max(report.top_decade_max, sup);
    } else if (t >= t_max / 100.0) {
      report.prev_decade_max = std::max(report.prev_decade_max, sup);
    }
  }
  report.satisfied = finite && report.top_decade_max <= 1.1 * report.prev_decade_max;
  return report;
}

NFunctionReport n_function_probe(const MusielakFunction& phi, std::span<const Point> x_samples,
                                 double tol) {
  NFunctionReport report;
  auto fail = [&](const std::string& msg) {
    report.passed = false;
    if (report.violations.size() < 20) {
      report.violations.push_back(msg);
    }
  };
  const std::vector<double> grid = dyadic_grid(-20, 20);
  for (const Point& x : x_samples) {
    std::ostringstream where;
    where << " at x=(" << x.x() << "," << x.y() << ")";
    if (phi(x, 0.0) != 0.0) {
      fail("phi(x,0) != 0" + where.str());
    }
    // Uniform grid on [0, 4] for second differences.
    const int n = 400;
    const double h = 4.0 / n;
    for (int i = 1; i < n; ++i) {
      const double f0 = phi(x, (i - 1) * h);
      const double f1 = phi(x, i * h);
      const double f2 = phi(x, (i + 1) * h);
      const double scale = std::max({1.0, std::abs(f0), std::abs(f2)});
      if (f1 < f0 - tol * scale) {
        fail("phi decreasing near t=" + std::to_string(i * h) + where.str());
        break;
      }
      if (f0 - 2.0 * f1 + f2 < -tol * scale) {
        fail("phi not convex near t=" + std::to_string(i * h) + where.str());
        break;
      }
    }
    const double r_small = phi(x, grid.front()) / grid.front();
    const double r_one = phi(x, 1.0);
    const double r_large = phi(x, grid.back()) / grid.back();
    if (!(r_small < r_one * (1.0 - 1e-6))) {
      fail("phi(x,t)/t does not decay as t -> 0" + where.str());
    }
    if (!(r_large > r_one * (1.0 + 1e-6))) {
      fail("phi(x,t)/t does not grow as t -> infinity" + where.str());
    }
  }
  return report;
}

double log_holder_constant(const MusielakFunction& phi, std::span<const Point> x_samples) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x_samples.size(); ++i) {
    for (std::size_t j = i + 1; j < x_samples.size(); ++j) {
      const double d = (x_samples[i] - x_samples[j]).norm();
      if (d <= 0.0 || d > 0.5) {
        continue;
      }
      const double dp = std::abs(phi.exponent_at(x_samples[i]) - phi.exponent_at(x_samples[j]));
      worst = std::max(worst, dp * std::log(1.0 / d));
    }
  }
  return worst;
}

}  // namespace mopar
