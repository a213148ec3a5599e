#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "svpfp/common.hpp"
#include "svpfp/commands.hpp"
#include "svpfp/config.hpp"
#include "svpfp/io.hpp"

using namespace svpfp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "svpfp_cli_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& body) {
  const auto p = (dir / "config.json").string();
  io::write_text(p, body);
  return p;
}

int run(const std::string& cmd, const std::string& config, const fs::path& out_dir, std::string* out = nullptr,
        std::string* err = nullptr, std::vector<std::string> overrides = {}) {
  CommandOptions o;
  o.config_path = config;
  o.output_dir = out_dir.string();
  o.overrides = std::move(overrides);
  std::ostringstream so, se;
  const int code = run_command(cmd, o, so, se);
  if (out) *out = so.str();
  if (err) *err = se.str();
  return code;
}

}  // namespace

TEST_CASE("config parsing") {
  CHECK_NOTHROW(parse_config("{}"));
  CHECK_THROWS_AS(parse_config(R"({"grid": {"nx": 16, "bogus": 1}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"mystery": {}})"), Error);
  try {
    parse_config(R"({"solver": {"dt": -1}})");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("solver.dt") != std::string::npos);
  }
  const auto c = parse_config(apply_overrides(R"({"noise": {"seed": 1}})", {"noise.seed=7", "solver.R=\"inf\"", "output.dir=abc"}));
  CHECK(c.noise.seed == 7);
  CHECK(std::isinf(c.solver.plan.cutoff.R));
  CHECK(c.output.dir == "abc");
  CHECK_THROWS_AS(apply_overrides("{}", {"novalue"}), Error);
}

TEST_CASE("missing config exits 2 naming the path") {
  std::string err;
  const auto d = scratch("missing");
  CHECK(run("run", "/nonexistent/cfg.json", d, nullptr, &err) == kExitConfig);
  CHECK(err.find("/nonexistent/cfg.json") != std::string::npos);
  CHECK(run("nonsense", "/nonexistent/cfg.json", d) == kExitConfig);
}

TEST_CASE("equilibrium run") {
  const auto d = scratch("equilibrium");
  const auto cfg = write_config(d, R"({"grid": {"nx": 16, "nv": 64, "vmax": 12}, "initial": {"kind": "maxwellian"},
    "noise": {"law": "none"}, "solver": {"dt": 0.05, "steps": 20}, "output": {"cadence": 5, "snapshot_times": [0.5]}})");
  std::string out;
  REQUIRE(run("run", cfg, d / "out", &out) == kExitOk);
  CHECK(out.rfind("final t=", 0) == 0);
  const auto log = io::read_csv((d / "out" / "step_log.csv").string());
  const double m0 = log.number(0, "mass");
  const double m1 = log.number(log.rows.size() - 1, "mass");
  CHECK(std::abs(m1 - m0) <= 1e-10 * m0);
  CHECK(fs::exists(d / "out" / "snapshot_10.json"));
  CHECK(fs::exists(d / "out" / "final.json"));
}

TEST_CASE("seed override twice gives identical files") {
  const auto d = scratch("seed");
  const auto cfg = write_config(d, R"({"grid": {"nx": 16, "nv": 32, "vmax": 10}, "noise": {"amplitude": 0.2, "max_wavenumber": 2},
    "solver": {"dt": 0.05, "steps": 6}})");
  REQUIRE(run("run", cfg, d / "a", nullptr, nullptr, {"noise.seed=7"}) == 0);
  REQUIRE(run("run", cfg, d / "b", nullptr, nullptr, {"noise.seed=7"}) == 0);
  REQUIRE(run("run", cfg, d / "c", nullptr, nullptr, {"noise.seed=8"}) == 0);
  const auto a = io::read_text((d / "a" / "step_log.csv").string());
  CHECK(a == io::read_text((d / "b" / "step_log.csv").string()));
  CHECK(a != io::read_text((d / "c" / "step_log.csv").string()));
}

TEST_CASE("numeric abort exits 3 with a last good snapshot") {
  const auto d = scratch("abort");
  const auto cfg = write_config(d, R"({"grid": {"nx": 8, "nv": 16, "vmax": 2}, "initial": {"kind": "maxwellian"},
    "noise": {"amplitude": 40, "max_wavenumber": 1}, "solver": {"dt": 0.1, "steps": 5, "self_field": false}})");
  std::string err;
  CHECK(run("run", cfg, d / "out", nullptr, &err) == kExitNumeric);
  CHECK(err.find("last_good.json") != std::string::npos);
  CHECK(fs::exists(d / "out" / "last_good.json"));
}

TEST_CASE("picard on uniform density reports a degenerate fit") {
  const auto d = scratch("picard");
  const auto cfg = write_config(d, R"({"grid": {"nx": 16, "nv": 64, "vmax": 12}, "initial": {"kind": "maxwellian"},
    "noise": {"law": "none"}, "solver": {"dt": 0.05}, "picard": {"j_max": 3, "T": 0.1}})");
  std::string out;
  REQUIRE(run("picard", cfg, d / "out", &out) == 0);
  CHECK(out.find("degenerate") != std::string::npos);
  const auto t = io::read_csv((d / "out" / "picard_report.csv").string());
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(t.number(i, "d_j") <= 1e-12);
  const auto missing = write_config(d, R"({"grid": {"nx": 16}})");
  CHECK(run("picard", missing, d / "out2") == kExitConfig);
}

TEST_CASE("convergence on deterministic transport is exact") {
  const auto d = scratch("convergence");
  const auto cfg = write_config(d, R"({"grid": {"nx": 16, "nv": 32, "vmax": 10}, "noise": {"law": "none"},
    "solver": {"dt": 0.05, "self_field": false}, "convergence": {"dt_levels": 2, "nx_levels": [8, 16], "t_final": 0.1}})");
  REQUIRE(run("convergence", cfg, d / "out") == 0);
  const auto t = io::read_csv((d / "out" / "convergence.csv").string());
  CHECK(t.header == std::vector<std::string>{"kind", "parameter", "error", "order", "flag"});
  const auto flag = t.column("flag");
  for (const auto& row : t.rows) CHECK(row[flag] == "exact");
}

TEST_CASE("hypo report with admissible constants") {
  const auto d = scratch("hypo");
  const auto cfg = write_config(d, R"({"hypo": {"epsilon": 0.5, "log2_kmax": 12}})");
  REQUIRE(run("hypo", cfg, d / "out") == 0);
  const auto text = io::read_text((d / "out" / "hypo_report.json").string());
  CHECK(text.find("\"admissible\": true") != std::string::npos);
  CHECK(text.find("\"holds\": false") == std::string::npos);
  const auto trace = io::read_csv((d / "out" / "energy_trace.csv").string());
  CHECK(trace.rows.size() == 12);
}

TEST_CASE("ensemble and backends write their outputs") {
  const auto d = scratch("outputs");
  const auto cfg = write_config(d, R"({"grid": {"nx": 16, "nv": 32, "vmax": 10}, "noise": {"amplitude": 0.1, "max_wavenumber": 2},
    "solver": {"dt": 0.05, "steps": 4, "particles": 500, "particle_init": "rejection_sampled", "fk_replicas": 2},
    "ensemble": {"realizations": 3, "cadence": 2, "bootstrap": 20}})");
  REQUIRE(run("ensemble", cfg, d / "ens") == 0);
  CHECK(fs::exists(d / "ens" / "summary.json"));
  CHECK(fs::exists(d / "ens" / "run_0002.csv"));
  REQUIRE(run("run", cfg, d / "pic", nullptr, nullptr, {"solver.backend=pic"}) == 0);
  CHECK(fs::exists(d / "pic" / "particles.json"));
  CHECK(fs::exists(d / "pic" / "pic_log.csv"));
  REQUIRE(run("run", cfg, d / "fk", nullptr, nullptr, {"solver.backend=lagrangian_fk"}) == 0);
  CHECK(fs::exists(d / "fk" / "final.json"));
}

TEST_CASE("csv reader") {
  const auto d = scratch("csv");
  const auto p = (d / "t.csv").string();
  {
    io::CsvWriter w(p, {"a", "b,c"});
    w.row(std::vector<std::string>{"x\"y", "1.5"});
  }
  const auto t = io::read_csv(p);
  CHECK(t.header[1] == "b,c");
  CHECK(t.rows[0][0] == "x\"y");
  CHECK(t.number(0, "b,c") == 1.5);
  CHECK_THROWS_AS(t.column("zzz"), Error);
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(INFINITY) == "inf");
}
