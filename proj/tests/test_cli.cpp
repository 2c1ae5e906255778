#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mopar/cli.hpp"
#include "mopar/config.hpp"

#include <json.hpp>

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace mopar;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = MOPAR_SOURCE_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mopar");
  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mopar_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config(const std::string& name) { return (source_dir / "configs" / name).string(); }
std::string data(const std::string& name) { return (source_dir / "tests" / "data" / name).string(); }

}  // namespace

TEST_CASE("exit codes cover every error category") {
  for (ErrorCode c : {ErrorCode::config, ErrorCode::io, ErrorCode::precondition, ErrorCode::invalid_resolution,
                      ErrorCode::trace_violation, ErrorCode::structure_violation, ErrorCode::domain,
                      ErrorCode::divergent_modular, ErrorCode::unbounded_norm, ErrorCode::conjugate_infinite}) {
    CHECK(exit_code(c) == 2);
  }
  CHECK(exit_code(ErrorCode::nonconvergence) == 3);
  CHECK(exit_code(ErrorCode::assembly_nan) == 3);
  CHECK(exit_code(ErrorCode::oracle_failure) == 1);
  CHECK(exit_code(ErrorCode::probe_failure) == 1);
}

TEST_CASE("validate on the shipped heat config") {
  const fs::path out = scratch("validate");
  const Outcome r = cli({"--config", config("heat_validate.json"), "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(out / "validation.json"));
  CHECK(doc["verdict"] == "pass");
  CHECK(doc["reports"].size() >= 4);

  const Outcome seeded = cli({"--config", config("heat_validate.json"), "--out", out.string(), "--seed", "77", "--quiet"});
  CHECK(seeded.code == 0);
  CHECK(seeded.out.empty());
  CHECK(nlohmann::json::parse(slurp(out / "validation.json"))["seed"] == 77);
}

TEST_CASE("a failing validator exits 2 and names the assumption") {
  const Outcome r = cli({"--config", data("failing_validate.json"), "--out", scratch("failing").string()});
  CHECK(r.code == 2);
  CHECK(r.out.find("FAIL stress growth, strict monotonicity and coercivity") != std::string::npos);
  CHECK(r.out.find("strict monotonicity fails at sampled xi=") != std::string::npos);
}

TEST_CASE("structure violation exits 2") {
  const Outcome r = cli({"--config", data("bad_structure.json"), "--out", scratch("structure").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("error [structure-violation]") != std::string::npos);
}

TEST_CASE("solver nonconvergence exits 3") {
  const Outcome r = cli({"--config", data("stalled_solver.json"), "--out", scratch("stalled").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("step 1") != std::string::npos);
}

TEST_CASE("configuration and I/O errors exit 2") {
  CHECK(cli({"--config", (source_dir / "no_such.json").string()}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"--config", config("heat_validate.json"), "--mode", "dance"}).code == 2);
  CHECK(cli({"--config", config("heat_validate.json"), "--bogus"}).code == 2);

  const fs::path base = scratch("blocked");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  const Outcome r = cli({"--config", config("heat_audit.json"), "--out", (base / "file" / "sub").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("io") != std::string::npos);

  CHECK_THROWS_AS(parse_config(R"({"mode": "solve", "problem": {"model": "heat_limit"}, "surprise": 1})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"mode": "solve", "problem": {"model": "heat_limit"}, "time": {"T": 3, "N": 2}})"),
                  Error);
  CHECK_THROWS_AS(parse_config(R"({"mode": "solve", "problem": {"model": "heat_limit", "f": {"id": "nope"}}})"),
                  Error);
  CHECK_THROWS_AS(parse_config("{not json"), Error);
}

TEST_CASE("audit writes a ledger with one row per step, byte-identical on re-run") {
  const fs::path a = scratch("audit_a"), b = scratch("audit_b");
  REQUIRE(cli({"--config", config("heat_audit.json"), "--out", a.string(), "--quiet"}).code == 0);
  REQUIRE(cli({"--config", config("heat_audit.json"), "--out", b.string(), "--quiet"}).code == 0);
  std::istringstream ledger(slurp(a / "ledger.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(ledger, line)) {
    ++rows;
  }
  CHECK(rows == 32);
  for (const char* file : {"ledger.csv", "audit.json", "field.csv", "mesh.txt"}) {
    CHECK_MESSAGE(slurp(a / file) == slurp(b / file), file);
    CHECK(!slurp(a / file).empty());
  }
  CHECK(nlohmann::json::parse(slurp(a / "audit.json"))["verdict"] == "pass");
}

TEST_CASE("mode flag overrides the config") {
  const fs::path out = scratch("override");
  const Outcome r = cli({"--config", config("heat_audit.json"), "--mode", "solve", "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "solve.json"));
  CHECK_FALSE(fs::exists(out / "ledger.csv"));
  const auto doc = nlohmann::json::parse(slurp(out / "solve.json"));
  CHECK(doc["steps"].size() == 32);
  for (const auto& step : doc["steps"]) {
    CHECK(step["final_residual"].get<double>() <= 1e-10);
  }
}

TEST_CASE("temporal study exits 0 with first-order CSV") {
  const fs::path out = scratch("temporal");
  const Outcome r = cli({"--config", config("temporal_study.json"), "--out", out.string()});
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(out / "temporal.json"));
  CHECK(doc["order_L1"].get<double>() >= 0.9);
  CHECK(doc["monotone"] == true);
  std::istringstream csv(slurp(out / "temporal.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "level,tau_or_h,err_L1,err_L2,rate");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("every shipped config runs end to end within a minute") {
  for (const auto& entry : fs::directory_iterator(source_dir / "configs")) {
    const auto start = std::chrono::steady_clock::now();
    const Outcome r = cli({"--config", entry.path().string(), "--out",
                           scratch("shipped_" + entry.path().stem().string()).string(), "--quiet"});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK_MESSAGE(r.code == 0, entry.path().filename().string() << ": " << r.err);
    CHECK_MESSAGE(seconds < 60.0, entry.path().filename().string());
  }
  fs::remove_all(fs::temp_directory_path() / ("mopar_cli_" + std::to_string(::getpid())));
}
