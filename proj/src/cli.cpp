#include "mopar/cli.hpp"

#include "mopar/config.hpp"
#include "mopar/diagnostics.hpp"
#include "mopar/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace mopar {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::nonconvergence:
    case ErrorCode::assembly_nan:
      return 3;
    case ErrorCode::oracle_failure:
    case ErrorCode::probe_failure:
      return 1;
    default:
      return 2;
  }
}

namespace {

struct Session {
  RunConfig cfg;
  fs::path out_dir;
  bool quiet = false;
  std::ostream& out;

  void say(const std::string& line) const {
    if (!quiet) {
      out << line << '\n';
    }
  }

  template <class Writer>
  void write(const std::string& name, Writer&& writer) const {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
      throw Error(ErrorCode::io, "cannot create output directory '" + out_dir.string() + "'");
    }
    const fs::path path = out_dir / name;
    std::ofstream file(path, std::ios::binary);
    if (!file) {
      throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    }
    writer(file);
    file.flush();
    if (!file) {
      throw Error(ErrorCode::io, "write to '" + path.string() + "' failed");
    }
  }

  void write_json(const std::string& name, const ojson& doc) const {
    if (cfg.outputs.report_json) {
      write(name, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    }
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ojson problem_json(const RunConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  const auto& c = p.constants;
  return ojson{{"name", p.name},
               {"dim", p.dim},
               {"b", p.b.kind},
               {"a", p.a.kind},
               {"K", p.K.kind},
               {"f", p.f.id},
               {"u0", p.u0.id},
               {"phi", p.phi.name()},
               {"constants",
                {{"b0", c.b0}, {"b1", c.b1()}, {"nu", c.nu}, {"nu0", c.nu0}, {"nu1", c.nu1},
                 {"lambda", c.lambda}}}};
}

ojson reports_json(const std::vector<StepReport>& reports) {
  ojson steps = ojson::array();
  for (std::size_t n = 0; n < reports.size(); ++n) {
    const StepReport& r = reports[n];
    steps.push_back({{"n", n + 1},
                     {"iterations", r.iterations},
                     {"final_residual", r.final_residual()},
                     {"fallback_used", r.fallback_used}});
  }
  return steps;
}

DiscreteTrajectory solve_and_write(const Session& s) {
  const RunConfig& cfg = s.cfg;
  check_structure(cfg.problem);
  const SpacePtr space = FemSpace::create(cfg.problem.dim, cfg.m);
  DiscreteTrajectory traj = run(cfg.problem, space, TimeGrid(cfg.T, cfg.N), cfg.solver);
  if (cfg.outputs.field_csv) {
    s.write("field.csv", [&](std::ostream& os) { write_field_csv(os, traj.states.back()); });
  }
  if (cfg.outputs.mesh) {
    s.write("mesh.txt", [&](std::ostream& os) { write_mesh(os, space->mesh()); });
  }
  return traj;
}

int mode_validate(const Session& s) {
  const auto reports = validate_all(s.cfg.problem, s.cfg.validation);
  ojson doc{{"mode", "validate"}, {"problem", problem_json(s.cfg)}, {"seed", s.cfg.validation.seed}};
  ojson list = ojson::array();
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.passed;
    ojson measured = ojson::object();
    for (const auto& [key, value] : r.measured) {
      measured[key] = value;
    }
    list.push_back({{"assumption", r.assumption},
                    {"passed", r.passed},
                    {"violations", r.violations},
                    {"measured", measured}});
    s.say(std::string(r.passed ? "PASS " : "FAIL ") + r.assumption);
    for (const auto& v : r.violations) {
      s.say("  " + v);
    }
  }
  doc["reports"] = list;
  doc["verdict"] = ok ? "pass" : "fail";
  s.write_json("validation.json", doc);
  return ok ? 0 : 2;
}

int mode_solve(const Session& s) {
  const DiscreteTrajectory traj = solve_and_write(s);
  const double norm = l2_norm(traj.states.back());
  ojson doc{{"mode", "solve"},
            {"problem", problem_json(s.cfg)},
            {"mesh", {{"dim", s.cfg.problem.dim}, {"m", s.cfg.m}, {"unknowns", traj.space().num_dofs()}}},
            {"time", {{"T", s.cfg.T}, {"N", s.cfg.N}, {"tau", traj.grid.tau()}}},
            {"final_l2_norm", norm},
            {"steps", reports_json(traj.reports)}};
  s.write_json("solve.json", doc);
  s.say("solved " + std::to_string(s.cfg.N) + " steps, ||u^N||_2 = " + num(norm));
  return 0;
}

int mode_audit(const Session& s) {
  const DiscreteTrajectory traj = solve_and_write(s);
  const EnergyLedger ledger = energy_audit(traj, s.cfg.problem, s.cfg.eps);
  if (s.cfg.outputs.ledger_csv) {
    s.write("ledger.csv", [&](std::ostream& os) { write_ledger_csv(os, ledger); });
  }
  const bool ok = ledger.verdict();
  ojson doc{{"mode", "audit"},
            {"problem", problem_json(s.cfg)},
            {"eps", ledger.eps},
            {"margin", ledger.margin},
            {"b0_norm_sq", ledger.b0_norm_sq},
            {"f_l1l2", ledger.f_l1l2},
            {"c4", ledger.c4},
            {"c3_min", ledger.c3_min},
            {"b_lower_bound_holds", ledger.b_lower_bound_holds},
            {"steps", reports_json(traj.reports)},
            {"verdict", ok ? "pass" : "fail"}};
  s.write_json("audit.json", doc);
  s.say(std::string("energy audit ") + (ok ? "PASS" : "FAIL") + " over " +
        std::to_string(ledger.rows.size()) + " steps (margin " + num(ledger.margin) + ")");
  return ok ? 0 : 1;
}

ojson study_json(const ConvergenceReport& r) {
  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"level", row.level},
                    {"N", row.N},
                    {"m", row.m},
                    {"tau_or_h", row.tau_or_h},
                    {"err_L1", row.err_l1},
                    {"err_L2", row.err_l2},
                    {"rate", std::isnan(row.rate) ? ojson(nullptr) : ojson(row.rate)}});
  }
  return ojson{{"kind", r.kind},
               {"degenerate", r.degenerate},
               {"order_L1", r.degenerate ? ojson(nullptr) : ojson(r.order_l1)},
               {"order_L2", r.degenerate ? ojson(nullptr) : ojson(r.order_l2)},
               {"monotone", r.monotone},
               {"spatial_error_estimate", r.spatial_error_estimate},
               {"rows", rows}};
}

ManufacturedCase manufactured_case(const RunConfig& cfg) {
  if (!cfg.exact) {
    throw Error(ErrorCode::config, "convergence studies need problem.exact");
  }
  check_structure(cfg.problem);
  return ManufacturedCase{cfg.problem, *cfg.exact};
}

int mode_temporal(const Session& s) {
  const ManufacturedCase mc = manufactured_case(s.cfg);
  const ConvergenceReport r = temporal_order_study(mc, s.cfg.temporal);
  s.write("temporal.csv", [&](std::ostream& os) { write_convergence_csv(os, r); });
  const bool ok = r.degenerate || (r.order_l1 >= 0.9 && r.monotone);
  ojson doc = study_json(r);
  doc["verdict"] = ok ? "pass" : "fail";
  s.write_json("temporal.json", doc);
  s.say(r.degenerate ? std::string("temporal study degenerate (errors independent of tau), fit skipped")
                     : "temporal order (L1 at T) = " + num(r.order_l1) +
                           (r.monotone ? ", monotone" : ", NOT monotone"));
  return ok ? 0 : 1;
}

int mode_spatial(const Session& s) {
  const ManufacturedCase mc = manufactured_case(s.cfg);
  const ConvergenceReport r = spatial_refinement_study(mc, s.cfg.spatial);
  s.write("spatial.csv", [&](std::ostream& os) { write_convergence_csv(os, r); });
  s.write_json("spatial.json", study_json(r));
  s.say(r.degenerate ? std::string("spatial study degenerate, fit skipped")
                     : "spatial order (exploratory) L1 = " + num(r.order_l1) +
                           ", L2 = " + num(r.order_l2));
  return 0;
}

int mode_oracle(const Session& s) {
  const RunConfig& cfg = s.cfg;
  check_structure(cfg.problem);
  std::mt19937_64 rng(cfg.oracle.seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> step(0.02, 0.5);
  const int dim = cfg.problem.dim;
  double worst = 0.0;
  std::ostringstream csv;
  csv << "instance,m,unknowns,tau,max_abs_diff\n";
  for (int i = 0; i < cfg.oracle.instances; ++i) {
    const int m = dim == 1 ? 2 + static_cast<int>(rng() % 3) : 2;
    const SpacePtr space = FemSpace::create(dim, m);
    Vector prev(static_cast<Eigen::Index>(space->num_dofs()));
    for (Eigen::Index k = 0; k < prev.size(); ++k) {
      prev[k] = coeff(rng);
    }
    const double tau = step(rng);
    const FemFunction u_prev(space, prev);
    const FemFunction newton = solve_step(cfg.problem, u_prev, tau, tau, cfg.solver).u;
    const FemFunction oracle =
        brute_force_oracle(cfg.problem, u_prev, tau, tau, cfg.oracle.grid_resolution);
    const double diff =
        (newton.coefficients() - oracle.coefficients()).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, diff);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%d,%zu,%.17g,%.17g\n", i, m, space->num_dofs(), tau, diff);
    csv << buf;
  }
  s.write("oracle.csv", [&](std::ostream& os) { os << csv.str(); });
  const bool ok = worst <= 1e-8;
  s.write_json("oracle.json", ojson{{"mode", "oracle-check"},
                                    {"problem", problem_json(cfg)},
                                    {"instances", cfg.oracle.instances},
                                    {"seed", cfg.oracle.seed},
                                    {"max_abs_diff", worst},
                                    {"tolerance", 1e-8},
                                    {"verdict", ok ? "pass" : "fail"}});
  s.say(std::string("oracle check ") + (ok ? "PASS" : "FAIL") + ": max |newton - oracle| = " +
        num(worst) + " over " + std::to_string(cfg.oracle.instances) + " instances");
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Backward Euler / P1 solver for nonlinear parabolic problems with Musielak growth",
               "mopar"};
  std::string config_path;
  std::string mode;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--mode", mode, "validate | solve | audit | temporal-study | spatial-study | oracle-check");
  app.add_option("--out", out_dir, "output directory (overrides outputs.dir)");
  app.add_option("--seed", seed, "sampling seed for the validators");
  app.add_flag("--quiet", quiet, "suppress the summary on stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    Session s{load_config(config_path), {}, quiet, out};
    if (!mode.empty()) {
      s.cfg.mode = mode;
    }
    if (seed) {
      s.cfg.validation.seed = *seed;
    }
    s.out_dir = out_dir.empty() ? fs::path(s.cfg.outputs.dir) : fs::path(out_dir);
    const std::string& m = s.cfg.mode;
    if (m == "validate") return mode_validate(s);
    if (m == "solve") return mode_solve(s);
    if (m == "audit") return mode_audit(s);
    if (m == "temporal-study") return mode_temporal(s);
    if (m == "spatial-study") return mode_spatial(s);
    if (m == "oracle-check") return mode_oracle(s);
    throw Error(ErrorCode::config, "unknown mode '" + m + "'");
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mopar
