#include "mopar/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mopar {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::config, what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) {
    bad(where + " must be an object");
  }
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      bad("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("key '") + key + "' has the wrong type");
  }
}

Params parse_params(const json& obj) {
  Params out;
  if (obj.is_null()) {
    return out;
  }
  if (!obj.is_object()) {
    bad("params must be an object of numbers");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!value.is_number()) {
      bad("param '" + key + "' must be a number");
    }
    out[key] = value.get<double>();
  }
  return out;
}

double param(const Params& p, const char* key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

Vec2 direction(const Params& p, int dim) {
  Vec2 d(param(p, "dx", 1.0), dim == 1 ? 0.0 : param(p, "dy", 0.0));
  return d;
}

AccumulationLaw parse_b(const json& j) {
  only_keys(j, "b", {"kind", "params"});
  const std::string kind = get_or<std::string>(j, "kind", "");
  const Params p = parse_params(j.value("params", json::object()));
  if (kind == "linear") {
    return laws::b_linear(param(p, "beta", 1.0));
  }
  if (kind == "linear_sine") {
    return laws::b_linear_sine(param(p, "beta", 1.5), param(p, "gamma", 0.2));
  }
  if (kind == "square") {
    return laws::b_square();
  }
  bad("unknown b kind '" + kind + "'");
}

StressLaw parse_a(const json& j) {
  only_keys(j, "a", {"kind", "params"});
  const std::string kind = get_or<std::string>(j, "kind", "");
  const Params p = parse_params(j.value("params", json::object()));
  if (kind == "linear") {
    return laws::stress_linear(param(p, "coefficient", 1.0));
  }
  if (kind == "p_laplace") {
    return laws::stress_p_laplace({param(p, "p0", 2.0), param(p, "p1", 0.0), param(p, "p2", 0.0)});
  }
  bad("unknown a kind '" + kind + "'");
}

ConvectionLaw parse_K(const json& j, int dim) {
  only_keys(j, "K", {"kind", "params"});
  const std::string kind = get_or<std::string>(j, "kind", "");
  const Params p = parse_params(j.value("params", json::object()));
  if (kind == "zero") {
    return laws::convection_zero();
  }
  const double c = param(p, "c", 0.0);
  if (kind == "linear") {
    return laws::convection_linear(c, direction(p, dim));
  }
  if (kind == "sine") {
    return laws::convection_sine(c, direction(p, dim));
  }
  if (kind == "quadratic") {
    return laws::convection_quadratic(c, direction(p, dim));
  }
  bad("unknown K kind '" + kind + "'");
}

SpaceTimeFunction parse_expression(const json& j, const char* where, int dim) {
  only_keys(j, where, {"id", "params"});
  return expressions::by_id(get_or<std::string>(j, "id", ""),
                            parse_params(j.value("params", json::object())), dim);
}

MusielakFunction parse_phi(const json& j) {
  only_keys(j, "phi", {"kind", "exponent", "exponent_expr", "coefficient"});
  const std::string kind = get_or<std::string>(j, "kind", "");
  const double coeff = get_or<double>(j, "coefficient", 1.0);
  try {
    if (kind == "power") {
      return MusielakFunction::power(get_or<double>(j, "exponent", 2.0), coeff);
    }
    if (kind == "variable-power") {
      const auto e = get_or<std::vector<double>>(j, "exponent_expr", {});
      if (e.empty() || e.size() > 3) {
        bad("exponent_expr needs one to three affine coefficients");
      }
      std::array<double, 3> c{0.0, 0.0, 0.0};
      std::copy(e.begin(), e.end(), c.begin());
      return MusielakFunction::variable_power(c, coeff);
    }
  } catch (const Error& e) {
    bad(std::string("phi: ") + e.what());
  }
  bad("unknown phi kind '" + kind + "'");
}

ProblemSpec base_model(const std::string& name, int dim) {
  if (name == "heat_limit") {
    return models::heat_limit(dim);
  }
  if (name == "scaled_heat") {
    return models::scaled_heat(dim);
  }
  if (name == "p_laplacian") {
    return models::p_laplacian(dim);
  }
  if (name == "lipschitz_convection") {
    return models::lipschitz_convection(dim);
  }
  bad("unknown model '" + name + "'");
}

int read_dim(const json& j) {
  const int dim = get_or<int>(j, "dim", 1);
  if (dim != 1 && dim != 2) {
    bad("dim must be 1 or 2");
  }
  return dim;
}

ProblemSpec build_problem(const json& j, std::optional<ExactSolution>* exact) {
  only_keys(j, "problem",
            {"model", "name", "dim", "phi", "b", "a", "K", "f", "u0", "constants", "exact"});
  const int dim = read_dim(j);
  ProblemSpec spec;
  if (j.contains("model")) {
    spec = base_model(get_or<std::string>(j, "model", ""), dim);
  } else {
    for (const char* key : {"phi", "b", "a", "K", "f", "u0", "constants"}) {
      if (!j.contains(key)) {
        bad(std::string("problem needs '") + key + "' when no model is named");
      }
    }
    spec.name = "custom";
    spec.dim = dim;
  }
  spec.name = get_or<std::string>(j, "name", spec.name);
  if (j.contains("phi")) spec.phi = parse_phi(j.at("phi"));
  if (j.contains("b")) spec.b = parse_b(j.at("b"));
  if (j.contains("a")) spec.a = parse_a(j.at("a"));
  if (j.contains("K")) spec.K = parse_K(j.at("K"), dim);
  if (j.contains("f")) spec.f = parse_expression(j.at("f"), "f", dim);
  if (j.contains("u0")) spec.u0 = parse_expression(j.at("u0"), "u0", dim);
  if (j.contains("constants")) {
    const json& c = j.at("constants");
    only_keys(c, "constants", {"b0", "nu", "nu0", "nu1", "lambda"});
    auto& k = spec.constants;
    k.b0 = get_or<double>(c, "b0", k.b0);
    k.nu = get_or<double>(c, "nu", k.nu);
    k.nu0 = get_or<double>(c, "nu0", k.nu0);
    k.nu1 = get_or<double>(c, "nu1", k.nu1);
    k.lambda = get_or<double>(c, "lambda", k.lambda);
  }
  if (j.contains("exact")) {
    const json& e = j.at("exact");
    only_keys(e, "exact", {"id", "params"});
    ExactSolution u = exact::by_id(get_or<std::string>(e, "id", ""),
                                   parse_params(e.value("params", json::object())), dim);
    ManufacturedCase mc = manufacture(std::move(spec), u);
    spec = std::move(mc.spec);
    if (exact != nullptr) {
      *exact = std::move(u);
    }
  }
  return spec;
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

ProblemSpec parse_problem(std::string_view json_text) {
  return build_problem(parse_text(json_text), nullptr);
}

RunConfig parse_config(std::string_view json_text) {
  const json root = parse_text(json_text);
  only_keys(root, "config",
            {"mode", "problem", "mesh", "time", "solver", "validation", "audit", "study", "oracle",
             "outputs"});
  RunConfig cfg;
  cfg.mode = get_or<std::string>(root, "mode", "");
  if (!root.contains("problem")) {
    bad("config needs a problem block");
  }
  cfg.problem = build_problem(root.at("problem"), &cfg.exact);

  const json mesh = root.value("mesh", json::object());
  only_keys(mesh, "mesh", {"dim", "m"});
  if (mesh.contains("dim") && read_dim(mesh) != cfg.problem.dim) {
    bad("mesh.dim differs from problem.dim");
  }
  cfg.m = get_or<int>(mesh, "m", cfg.m);

  const json time = root.value("time", json::object());
  only_keys(time, "time", {"T", "N"});
  cfg.T = get_or<double>(time, "T", cfg.T);
  cfg.N = get_or<int>(time, "N", cfg.N);
  static_cast<void>(TimeGrid(cfg.T, cfg.N));

  const json solver = root.value("solver", json::object());
  only_keys(solver, "solver", {"tol", "max_iters", "damping", "fallback_picard"});
  cfg.solver.tol = get_or<double>(solver, "tol", cfg.solver.tol);
  cfg.solver.max_iters = get_or<int>(solver, "max_iters", cfg.solver.max_iters);
  cfg.solver.damping = get_or<bool>(solver, "damping", cfg.solver.damping);
  cfg.solver.fallback_picard = get_or<bool>(solver, "fallback_picard", cfg.solver.fallback_picard);
  if (!(cfg.solver.tol > 0.0) || cfg.solver.max_iters < 1) {
    bad("solver.tol and solver.max_iters must be positive");
  }

  const json val = root.value("validation", json::object());
  only_keys(val, "validation",
            {"x_samples", "xi_samples", "xi_radius", "s_samples", "s_range", "seed"});
  auto& v = cfg.validation;
  v.x_samples = get_or<std::size_t>(val, "x_samples", v.x_samples);
  v.xi_samples = get_or<std::size_t>(val, "xi_samples", v.xi_samples);
  v.xi_radius = get_or<double>(val, "xi_radius", v.xi_radius);
  v.s_samples = get_or<std::size_t>(val, "s_samples", v.s_samples);
  v.s_range = get_or<double>(val, "s_range", v.s_range);
  v.seed = get_or<std::uint64_t>(val, "seed", v.seed);

  const json audit = root.value("audit", json::object());
  only_keys(audit, "audit", {"eps"});
  cfg.eps = get_or<double>(audit, "eps", cfg.eps);
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) {
    bad("audit.eps must lie in (0, 1)");
  }

  const json study = root.value("study", json::object());
  only_keys(study, "study", {"N_list", "m", "T", "m_list", "N", "spatial_T"});
  cfg.temporal.N_list = get_or<std::vector<int>>(study, "N_list", cfg.temporal.N_list);
  cfg.temporal.m = get_or<int>(study, "m", cfg.temporal.m);
  cfg.temporal.T = get_or<double>(study, "T", cfg.temporal.T);
  cfg.temporal.solver = cfg.solver;
  cfg.spatial.m_list = get_or<std::vector<int>>(study, "m_list", cfg.spatial.m_list);
  cfg.spatial.N = get_or<int>(study, "N", cfg.spatial.N);
  cfg.spatial.T = get_or<double>(study, "spatial_T", cfg.spatial.T);
  cfg.spatial.solver = cfg.solver;

  const json oracle = root.value("oracle", json::object());
  only_keys(oracle, "oracle", {"instances", "grid_resolution", "seed"});
  cfg.oracle.instances = get_or<int>(oracle, "instances", cfg.oracle.instances);
  cfg.oracle.grid_resolution = get_or<int>(oracle, "grid_resolution", cfg.oracle.grid_resolution);
  cfg.oracle.seed = get_or<std::uint64_t>(oracle, "seed", cfg.oracle.seed);

  const json out = root.value("outputs", json::object());
  only_keys(out, "outputs", {"dir", "field_csv", "mesh", "ledger_csv", "report_json"});
  auto& o = cfg.outputs;
  o.dir = get_or<std::string>(out, "dir", o.dir);
  o.field_csv = get_or<bool>(out, "field_csv", o.field_csv);
  o.mesh = get_or<bool>(out, "mesh", o.mesh);
  o.ledger_csv = get_or<bool>(out, "ledger_csv", o.ledger_csv);
  o.report_json = get_or<bool>(out, "report_json", o.report_json);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::io, "cannot read config '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace mopar
