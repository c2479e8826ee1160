// qmflow-cli: identities | flow | check. Talks to the library only through
// the C interface.

#include "qmflow/qmflow.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace {

int cmd_identities(int n, int trials, std::uint64_t seed, const std::string& out,
                   bool json_stdout) {
  if (n == 1) {
    std::cerr << "error: n = 1 is not supported (Omega-tilde carries a 1/(n-1) factor)\n";
    return 2;
  }
  if (n < 2 || n > 4 || trials < 1) {
    std::cerr << "error: need 2 <= n <= 4 and trials >= 1\n";
    return 2;
  }
  qmf_report* report = nullptr;
  if (qmf_identities_run(n, trials, seed, &report) != QMF_OK) {
    std::cerr << "error: " << qmf_last_error() << '\n';
    return 2;
  }
  const char* json = nullptr;
  const char* summary = nullptr;
  int all = 0;
  qmf_report_json(report, &json);
  qmf_report_summary(report, &summary);
  qmf_report_all_pass(report, &all);
  if (!out.empty()) {
    std::ofstream os(out, std::ios::binary);
    if (!os) {
      std::cerr << "error: cannot write " << out << '\n';
      qmf_report_free(report);
      return 2;
    }
    os << json;
  }
  std::cout << (json_stdout ? json : summary);
  qmf_report_free(report);
  return all ? 0 : 1;
}

int cmd_flow(const std::string& config, const std::string& out) {
  int code = 2;
  qmf_flow_result* r = nullptr;
  const qmf_status s = qmf_flow_run(config.c_str(), out.empty() ? nullptr : out.c_str(),
                                    &code, &r);
  if (!r) {
    std::cerr << "error: " << qmf_last_error() << '\n';
    return code == 0 ? 2 : code;
  }
  const char* msg = nullptr;
  qmf_flow_result_message(r, &msg);
  if (s != QMF_OK) {
    std::cerr << "error: " << msg << '\n';
  } else {
    int converged = 0;
    double b = 0, res = 0, t = 0, wall = 0;
    long steps = 0;
    qmf_flow_result_get(r, &converged, &b, &res, &t, &steps, &wall);
    std::printf("%s\nsteps %ld\nt %.6g\nb_tilde %.17g\nresidual %.6g\nwall_seconds %.3f\n",
                msg, steps, t, b, res, wall);
  }
  qmf_flow_result_free(r);
  return code;
}

int cmd_check(const std::string& config, const std::string& snapshot, double tol) {
  int code = 2;
  qmf_check_result* r = nullptr;
  const qmf_status s = qmf_check(config.c_str(), snapshot.c_str(), tol, &code, &r);
  if (!r) {
    std::cerr << "error: " << qmf_last_error() << '\n';
    return 2;
  }
  const char* msg = nullptr;
  qmf_check_result_message(r, &msg);
  if (s != QMF_OK) {
    std::cerr << "error: " << msg << '\n';
  } else {
    double res = 0, b = 0;
    qmf_check_result_get(r, &res, &b);
    std::printf("residual %.17g\nb_tilde %.17g\n%s\n", res, b, msg);
  }
  qmf_check_result_free(r);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  qmf_set_workers(0, nullptr);

  CLI::App app{"Parabolic quaternionic Monge-Ampere flow on flat hyperKaehler tori"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qmf_version()));

  int n = 2, trials = 200;
  std::uint64_t seed = 7;
  std::string report_out;
  bool json_stdout = false;
  auto* ids = app.add_subcommand("identities", "run the randomized identity suite");
  ids->add_option("--n", n, "quaternionic dimension (2..4)");
  ids->add_option("--trials", trials, "random instances per identity");
  ids->add_option("--seed", seed, "seed of the instance generator");
  ids->add_option("--out", report_out, "write the JSON report to this file");
  ids->add_flag("--json", json_stdout, "print the JSON report instead of the table");

  std::string config, flow_out;
  auto* flow = app.add_subcommand("flow", "integrate the flow to a steady state");
  flow->add_option("config", config, "run configuration (JSON)")->required();
  flow->add_option("--out", flow_out, "output directory (overrides output_dir)");

  std::string check_config, snapshot;
  double tol = 0.0;
  auto* check = app.add_subcommand("check", "elliptic residual of a snapshot");
  check->add_option("config", check_config, "run configuration (JSON)")->required();
  check->add_option("snapshot", snapshot, "snapshot file")->required();
  check->add_option("--tol", tol, "tolerance (default: the config's tol_steady)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*ids) return cmd_identities(n, trials, seed, report_out, json_stdout);
  if (*flow) return cmd_flow(config, flow_out);
  if (*check) return cmd_check(check_config, snapshot, tol);
  return 2;
}
