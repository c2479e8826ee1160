#include <doctest.h>

#include "run_io.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

using namespace qmflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qmflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

const char* kManufactured = R"({
  "n": 2,
  "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
  "omega_h": {"c": 1.0, "rho": {"terms": [{"k": [0, 1], "amplitude": 0.05}]}},
  "f": "manufactured",
  "u_star": [{"k": [1, 0], "amplitude": 0.1}, {"k": [1, 1], "amplitude": 0.05}],
  "u0": 0,
  "tol_steady": 1e-9,
  "t_max": 200,
  "snapshot_interval": 500
})";

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_run_config(kManufactured);
  CHECK(c.n == 2);
  CHECK(c.grid->num_points() == 256);
  CHECK(c.manufactured);
  CHECK(c.u_star.terms.size() == 2);
  CHECK(c.rho.terms.size() == 1);
  CHECK(c.tol_steady == 1e-9);
  CHECK(c.sigma == 0.2);
  CHECK(c.snapshot_interval == 500);

  const RunConfig full = parse_run_config(
      R"({"n": 2, "grid": {"active_dims": "all", "sizes": 4}, "f": 0.3})");
  CHECK(full.grid->num_active() == 8);
  CHECK_FALSE(full.manufactured);
  CHECK(full.f.evaluate(std::vector<double>(8, 0.0)) == 0.3);

  const RunConfig rnd = parse_run_config(
      R"({"n": 2, "seed": 4, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
          "u0": {"random": {"terms": 3, "amplitude": 0.02, "max_k": 2}}})");
  CHECK(rnd.u0.terms.size() == 3);
  const RunConfig rnd2 = parse_run_config(
      R"({"n": 2, "seed": 4, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
          "u0": {"random": {"terms": 3, "amplitude": 0.02, "max_k": 2}}})");
  CHECK(rnd.u0.terms[1].amplitude == rnd2.u0.terms[1].amplitude);

  CHECK_THROWS_WITH_AS(parse_run_config(R"({"n": 1, "grid": {"sizes": 4}})"),
                       doctest::Contains("1/(n-1)"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"n": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [8, 8]},
                                       "u0": [{"k": [4, 0], "amplitude": 1}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [8, 8]},
                                       "sigma": -1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [8, 8]},
                                       "f": "nope"})"),
                  ConfigError);
}

TEST_CASE("snapshot round trip") {
  const fs::path dir = scratch_dir("snap");
  auto g = TorusGrid::make(2, {0, 4}, {8, 6});
  auto rng = instance_rng(1, 1, 1);
  ScalarField u = sample(random_trig_poly(rng, *g, 4, 2, 1.0), g);
  u[3] = -0.0;
  u[4] = 1e-310;
  write_snapshot(dir / "u.snap", u, 1.25, "u");
  const Snapshot s = read_snapshot(dir / "u.snap");
  CHECK(s.header.n == 2);
  CHECK(s.header.shape == std::vector<int>{8, 6});
  CHECK(s.header.active_dims == std::vector<int>{0, 4});
  CHECK(s.header.t == 1.25);
  CHECK(s.header.field == "u");
  REQUIRE(s.values.size() == u.size());
  CHECK(std::memcmp(s.values.data(), u.values().data(), u.size() * 8) == 0);
  CHECK(fs::file_size(dir / "u.snap") > u.size() * 8);

  // header line then exactly product(shape) * 8 bytes
  std::ifstream is(dir / "u.snap", std::ios::binary);
  std::string header;
  std::getline(is, header);
  const auto h = nlohmann::json::parse(header);
  CHECK(h["byte_order"] == "little");
  CHECK(h["dtype"] == "float64");
  CHECK(fs::file_size(dir / "u.snap") == header.size() + 1 + 48 * 8);

  fs::resize_file(dir / "u.snap", fs::file_size(dir / "u.snap") - 5);
  CHECK_THROWS_WITH_AS(read_snapshot(dir / "u.snap"), doctest::Contains("truncated"),
                       SnapshotError);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.snap"), SnapshotError);
  write_file(dir / "garbage.snap", "not json\n");
  CHECK_THROWS_AS(read_snapshot(dir / "garbage.snap"), SnapshotError);
}

TEST_CASE("flow and check commands") {
  const fs::path dir = scratch_dir("flow");
  const fs::path cfg = write_file(dir / "m.json", kManufactured);
  std::ostringstream log;
  const FlowRunSummary s = run_flow_command(cfg, dir / "out", log);
  CHECK(s.exit_code == 0);
  CHECK(s.converged);
  CHECK(std::abs(s.b_tilde) <= 1e-6);

  std::ifstream rj(dir / "out" / "result.json");
  const auto result = nlohmann::json::parse(rj);
  CHECK(result["converged"] == true);
  CHECK(result.contains("wall_time_seconds"));
  CHECK(result["error_vs_u_star"].get<double>() <= 1e-5);
  CHECK(std::abs(result["b_tilde"].get<double>()) <= 1e-6);
  CHECK(fs::exists(dir / "out" / "u_step_00000000.snap"));
  CHECK(fs::exists(dir / "out" / "u_step_00000500.snap"));

  // diagnostics rows strictly increasing in step and t
  std::ifstream csv(dir / "out" / "diagnostics.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "step,t,dt,sup_abs_ut,osc_u,max_beta,max_eta,min_eig,osc_ut,spectral_tail");
  long prev_step = -1;
  double prev_t = -1.0;
  long rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string a, b;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    CHECK(std::stol(a) > prev_step);
    CHECK(std::stod(b) > prev_t);
    prev_step = std::stol(a);
    prev_t = std::stod(b);
    ++rows;
  }
  CHECK(rows == s.steps + 1);

  std::ostringstream out;
  CHECK(check_command(cfg, dir / "out" / "u_final.snap", std::nullopt, out).exit_code == 0);
  CHECK(out.str().find("residual") != std::string::npos);
  CHECK(check_command(cfg, dir / "out" / "u_step_00000000.snap", std::nullopt, out).exit_code == 1);

  fs::copy_file(dir / "out" / "u_final.snap", dir / "cut.snap");
  fs::resize_file(dir / "cut.snap", fs::file_size(dir / "cut.snap") - 8);
  CHECK(check_command(cfg, dir / "cut.snap", std::nullopt, out).exit_code == 2);

  const fs::path other = write_file(dir / "other.json",
      R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [8, 8]}})");
  CHECK(check_command(other, dir / "out" / "u_final.snap", std::nullopt, out).exit_code == 2);
}

TEST_CASE("flow command exit codes") {
  const fs::path dir = scratch_dir("codes");
  std::ostringstream log;

  const fs::path constant = write_file(dir / "c.json",
      R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]}, "f": 0.3})");
  const FlowRunSummary c = run_flow_command(constant, dir / "c", log);
  CHECK(c.exit_code == 0);
  CHECK(std::abs(c.b_tilde + 0.3) <= 1e-8);

  const fs::path bad_u0 = write_file(dir / "u0.json",
      R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
          "u0": [{"k": [1, 0], "amplitude": -20}]})");
  const FlowRunSummary b = run_flow_command(bad_u0, dir / "u0", log);
  CHECK(b.exit_code == 3);
  CHECK(b.message.find("grid point") != std::string::npos);

  const fs::path invalid = write_file(dir / "bad.json", R"({"n": 1})");
  CHECK(run_flow_command(invalid, dir / "bad", log).exit_code == 2);
  CHECK(run_flow_command(dir / "missing.json", dir / "m", log).exit_code == 2);

  const fs::path bad_oh = write_file(dir / "oh.json",
      R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
          "omega_h": {"c": 1, "rho": [{"k": [1, 0], "amplitude": 10}]}})");
  CHECK(run_flow_command(bad_oh, dir / "oh", log).exit_code == 2);

  const fs::path slow = write_file(dir / "slow.json",
      R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
          "f": [{"k": [1, 0], "amplitude": 0.1}], "t_max": 0.01})");
  CHECK(run_flow_command(slow, dir / "slow", log).exit_code == 1);

  const fs::path u_zero = write_file(dir / "zero.json",
      R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
          "f": [{"k": [1, 0], "amplitude": 0.1}]})");
  write_snapshot(dir / "zero.snap", ScalarField(load_run_config(u_zero).grid), 0.0, "u");
  std::ostringstream out;
  CHECK(check_command(u_zero, dir / "zero.snap", std::nullopt, out).exit_code == 1);

  ScalarField huge(load_run_config(u_zero).grid);
  for (std::size_t p = 0; p < huge.size(); ++p)
    huge[p] = -20.0 * std::cos(load_run_config(u_zero).grid->coordinates(p)[0]);
  write_snapshot(dir / "huge.snap", huge, 0.0, "u");
  CHECK(check_command(u_zero, dir / "huge.snap", std::nullopt, out).exit_code == 3);
}
