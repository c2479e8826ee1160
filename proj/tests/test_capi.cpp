#include <doctest.h>

#include "qmflow/qmflow.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::vector<double> standard_form(int n) {
  const int d = 2 * n;
  std::vector<double> a(2 * d * d, 0.0);
  for (int i = 0; i < n; ++i) {
    a[2 * ((2 * i) * d + 2 * i + 1)] = 1.0;
    a[2 * ((2 * i + 1) * d + 2 * i)] = -1.0;
  }
  return a;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qmflow_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("pointwise functions") {
  double re = 0, im = 0;
  auto om = standard_form(3);
  CHECK(qmf_pfaffian(3, om.data(), &re, &im) == QMF_OK);
  CHECK(re == doctest::Approx(1.0));
  CHECK(im == 0.0);
  CHECK(qmf_s_m(3, om.data(), 2, &re, &im) == QMF_OK);
  CHECK(re == doctest::Approx(3.0));
  CHECK(qmf_s_m(3, om.data(), 4, &re, &im) == QMF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qmf_last_error()).find("m must lie") != std::string::npos);
  double lam = 0;
  CHECK(qmf_min_positivity_eigenvalue(3, om.data(), &lam) == QMF_OK);
  CHECK(lam == doctest::Approx(1.0));

  std::vector<double> not_antisym(32, 0.0);
  not_antisym[2] = 1.0;
  CHECK(qmf_pfaffian(2, not_antisym.data(), &re, &im) == QMF_ERR_INVALID_ARGUMENT);
  CHECK(qmf_pfaffian(2, nullptr, &re, &im) == QMF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qmf_version()).size() > 0);
  int w = 0;
  CHECK(qmf_set_workers(1, &w) == QMF_OK);
  CHECK(w == 1);
}

TEST_CASE("identity reports") {
  qmf_report* r = nullptr;
  REQUIRE(qmf_identities_run(2, 2, 7, &r) == QMF_OK);
  int all = 0;
  CHECK(qmf_report_all_pass(r, &all) == QMF_OK);
  CHECK(all == 1);
  size_t count = 0;
  qmf_report_count(r, &count);
  CHECK(count == 9);
  const char* name = nullptr;
  double err = 1, tol = 0;
  int pass = 0;
  CHECK(qmf_report_entry(r, 0, &name, &err, &tol, &pass) == QMF_OK);
  CHECK(std::string(name).size() > 0);
  CHECK(pass == 1);
  CHECK(qmf_report_entry(r, 99, &name, &err, &tol, &pass) == QMF_ERR_INVALID_ARGUMENT);
  const char* json = nullptr;
  qmf_report_json(r, &json);
  CHECK(std::string(json).find("\"reports\"") != std::string::npos);
  const char* table = nullptr;
  qmf_report_summary(r, &table);
  CHECK(std::string(table).find("PASS") != std::string::npos);
  qmf_report_free(r);
  qmf_report_free(nullptr);

  CHECK(qmf_identities_run(1, 2, 7, &r) == QMF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qmf_last_error()).find("1/(n-1)") != std::string::npos);
  CHECK(r == nullptr);
}

TEST_CASE("configs, flow, check and snapshots") {
  const fs::path dir = scratch("flow");
  {
    std::ofstream(dir / "c.json") << R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
      "f": "manufactured", "u_star": [{"k": [1, 0], "amplitude": 0.1}], "tol_steady": 1e-9})";
  }
  qmf_config* c = nullptr;
  REQUIRE(qmf_config_load((dir / "c.json").c_str(), &c) == QMF_OK);
  size_t np = 0;
  qmf_config_num_points(c, &np);
  CHECK(np == 256);
  qmf_config_free(c);
  CHECK(qmf_config_parse("{\"n\": 2}", &c) == QMF_ERR_CONFIG);
  CHECK(c == nullptr);

  int code = -1;
  qmf_flow_result* fr = nullptr;
  REQUIRE(qmf_flow_run((dir / "c.json").c_str(), (dir / "out").c_str(), &code, &fr) == QMF_OK);
  CHECK(code == 0);
  int converged = 0;
  double b = 1, res = 1, t = 0, wall = -1;
  long steps = 0;
  qmf_flow_result_get(fr, &converged, &b, &res, &t, &steps, &wall);
  CHECK(converged == 1);
  CHECK(std::abs(b) < 1e-6);
  CHECK(res < 1e-9);
  CHECK(steps > 0);
  CHECK(wall >= 0.0);
  qmf_flow_result_free(fr);

  qmf_check_result* cr = nullptr;
  REQUIRE(qmf_check((dir / "c.json").c_str(), (dir / "out" / "u_final.snap").c_str(), 0.0,
                    &code, &cr) == QMF_OK);
  CHECK(code == 0);
  qmf_check_result_get(cr, &res, &b);
  CHECK(res < 1e-9);
  qmf_check_result_free(cr);

  qmf_field* f = nullptr;
  REQUIRE(qmf_snapshot_read((dir / "out" / "u_final.snap").c_str(), &f) == QMF_OK);
  size_t n = 0;
  qmf_field_size(f, &n);
  CHECK(n == 256);
  const double* v = nullptr;
  qmf_field_values(f, &v);
  CHECK(std::isfinite(v[0]));
  double tt = 0;
  qmf_field_time(f, &tt);
  CHECK(tt == doctest::Approx(t));
  qmf_field_free(f);
  CHECK(qmf_snapshot_read((dir / "nope.snap").c_str(), &f) == QMF_ERR_IO);

  {
    std::ofstream(dir / "bad.json") << R"({"n": 2, "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
      "u0": [{"k": [1, 0], "amplitude": -20}]})";
  }
  CHECK(qmf_flow_run((dir / "bad.json").c_str(), (dir / "bad").c_str(), &code, &fr) ==
        QMF_ERR_POSITIVITY);
  CHECK(code == 3);
  qmf_flow_result_free(fr);
  CHECK(qmf_flow_run((dir / "missing.json").c_str(), nullptr, &code, &fr) == QMF_ERR_CONFIG);
  CHECK(code == 2);
  qmf_flow_result_free(fr);
}
