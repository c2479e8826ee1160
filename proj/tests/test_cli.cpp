// Exit-code contract of qmflow-cli, driven through the shell.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(QMFLOW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "qmflow_cli_test";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("identities subcommand") {
  const fs::path dir = scratch();
  CHECK(run("identities --n 1") == 2);
  CHECK(run("identities --n 5") == 2);
  CHECK(run("identities --n two") == 2);
  CHECK(run("identities --n 2 --trials 3 --seed 7 --out " + (dir / "a.json").string()) == 0);
  CHECK(run("identities --n 2 --trials 3 --seed 7 --out " + (dir / "b.json").string()) == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(slurp(dir / "a.json").find("\"all_pass\": true") != std::string::npos);

  const std::string msg_cmd = std::string(QMFLOW_CLI_PATH) + " identities --n 1 2>&1 >/dev/null | grep -q '1/(n-1)'";
  CHECK(std::system(msg_cmd.c_str()) == 0);
}

TEST_CASE("flow and check subcommands") {
  const fs::path dir = scratch();
  std::ofstream(dir / "const.json")
      << R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]}, "f": 0.3})";
  std::ofstream(dir / "bad_u0.json")
      << R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
            "u0": [{"k": [1, 0], "amplitude": -20}]})";
  std::ofstream(dir / "n1.json") << R"({"n": 1, "grid": {"sizes": 4}})";
  std::ofstream(dir / "f.json")
      << R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
            "f": [{"k": [1, 0], "amplitude": 0.1}], "t_max": 0.01})";

  CHECK(run("flow " + (dir / "const.json").string() + " --out " + (dir / "c").string()) == 0);
  CHECK(fs::exists(dir / "c" / "result.json"));
  CHECK(fs::exists(dir / "c" / "diagnostics.csv"));
  CHECK(run("check " + (dir / "const.json").string() + " " + (dir / "c" / "u_final.snap").string()) == 0);

  CHECK(run("flow " + (dir / "bad_u0.json").string() + " --out " + (dir / "b").string()) == 3);
  CHECK(run("flow " + (dir / "n1.json").string()) == 2);
  CHECK(run("flow " + (dir / "missing.json").string()) == 2);
  CHECK(run("flow") == 2);

  CHECK(run("flow " + (dir / "f.json").string() + " --out " + (dir / "f").string()) == 1);
  CHECK(run("check " + (dir / "f.json").string() + " " + (dir / "f" / "u_step_00000000.snap").string()) == 2);
  CHECK(run("check " + (dir / "f.json").string() + " " + (dir / "c" / "u_final.snap").string()) == 1);

  fs::copy_file(dir / "c" / "u_final.snap", dir / "cut.snap");
  fs::resize_file(dir / "cut.snap", fs::file_size(dir / "cut.snap") - 3);
  CHECK(run("check " + (dir / "const.json").string() + " " + (dir / "cut.snap").string()) == 2);
}
