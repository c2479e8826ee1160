#include "qmflow/qmflow.h"

#include "run_io.hpp"

#include <cstring>
#include <sstream>

using namespace qmflow;

struct qmf_report {
  std::vector<IdentityReport> reports;
  std::string json;
  std::string summary;
};

struct qmf_config {
  RunConfig config;
};

struct qmf_flow_result {
  FlowRunSummary summary;
};

struct qmf_check_result {
  CheckSummary summary;
};

struct qmf_field {
  Snapshot snapshot;
};

namespace {

thread_local std::string g_last_error;

qmf_status fail(qmf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs fn, translating library exceptions into status codes.
template <class F>
qmf_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const PositivityError& e) {
    return fail(QMF_ERR_POSITIVITY, e.what());
  } catch (const StiffnessError& e) {
    return fail(QMF_ERR_STIFFNESS, e.what());
  } catch (const ConfigError& e) {
    return fail(QMF_ERR_CONFIG, e.what());
  } catch (const SnapshotError& e) {
    return fail(QMF_ERR_IO, e.what());
  } catch (const DimensionError& e) {
    return fail(QMF_ERR_DIMENSION, e.what());
  } catch (const DegenerateFormError& e) {
    return fail(QMF_ERR_DEGENERATE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(QMF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(QMF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QMF_ERR_INTERNAL, "unknown error");
  }
}

qmf_status null_arg(const char* what) {
  return fail(QMF_ERR_INVALID_ARGUMENT, std::string(what) + " must not be NULL");
}

JRealTwoForm form_from(int n, const double* a) {
  if (n < 1 || n > kMaxQuaternionicDim) throw std::invalid_argument("n must be in [1, 4]");
  const int d = 2 * n;
  SmallCMatrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) m(j, k) = cplx(a[2 * (j * d + k)], a[2 * (j * d + k) + 1]);
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("matrix is not antisymmetric");
  return JRealTwoForm::from_matrix(m);
}

qmf_status status_for_exit(int code) {
  switch (code) {
    case 0:
    case 1:
      return QMF_OK;
    case 2:
      return QMF_ERR_CONFIG;
    case 3:
      return QMF_ERR_POSITIVITY;
    case 4:
      return QMF_ERR_STIFFNESS;
    default:
      return QMF_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* qmf_version(void) { return "1.0.0"; }

const char* qmf_last_error(void) { return g_last_error.c_str(); }

qmf_status qmf_set_workers(int workers, int* out) {
  return guarded([&] {
    int w = 0;
    if (workers > 0) {
      set_workers(workers);
      w = workers;
    } else {
      w = configure_workers_from_env();
    }
    if (out) *out = w;
    return QMF_OK;
  });
}

qmf_status qmf_pfaffian(int n, const double* a, double* re, double* im) {
  if (!a || !re || !im) return null_arg("arguments");
  return guarded([&] {
    const cplx pf = pfaffian(form_from(n, a));
    *re = pf.real();
    *im = pf.imag();
    return QMF_OK;
  });
}

qmf_status qmf_s_m(int n, const double* chi, int m, double* re, double* im) {
  if (!chi || !re || !im) return null_arg("arguments");
  return guarded([&] {
    const cplx s = s_m(form_from(n, chi), JRealTwoForm::standard(n), m);
    *re = s.real();
    *im = s.imag();
    return QMF_OK;
  });
}

qmf_status qmf_min_positivity_eigenvalue(int n, const double* a, double* out) {
  if (!a || !out) return null_arg("arguments");
  return guarded([&] {
    *out = min_positivity_eigenvalue(form_from(n, a));
    return QMF_OK;
  });
}

qmf_status qmf_identities_run(int n, int trials, uint64_t seed, qmf_report** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  if (n == 1)
    return fail(QMF_ERR_INVALID_ARGUMENT,
                "n = 1 is not supported: Omega-tilde carries a 1/(n-1) factor");
  return guarded([&] {
    auto r = std::make_unique<qmf_report>();
    r->reports = run_identity_suite(n, trials, seed);
    r->json = identity_report_json(r->reports);
    r->summary = identity_summary_table(r->reports);
    *out = r.release();
    return QMF_OK;
  });
}

qmf_status qmf_report_all_pass(const qmf_report* r, int* out) {
  if (!r || !out) return null_arg("arguments");
  int all = 1;
  for (const auto& e : r->reports) all = all && e.pass;
  *out = all;
  return QMF_OK;
}

qmf_status qmf_report_count(const qmf_report* r, size_t* out) {
  if (!r || !out) return null_arg("arguments");
  *out = r->reports.size();
  return QMF_OK;
}

qmf_status qmf_report_entry(const qmf_report* r, size_t i, const char** name,
                            double* max_rel_error, double* tolerance, int* pass) {
  if (!r) return null_arg("report");
  if (i >= r->reports.size()) return fail(QMF_ERR_INVALID_ARGUMENT, "entry index out of range");
  const auto& e = r->reports[i];
  if (name) *name = e.name.c_str();
  if (max_rel_error) *max_rel_error = e.max_rel_error;
  if (tolerance) *tolerance = e.tolerance;
  if (pass) *pass = e.pass ? 1 : 0;
  return QMF_OK;
}

qmf_status qmf_report_json(const qmf_report* r, const char** out) {
  if (!r || !out) return null_arg("arguments");
  *out = r->json.c_str();
  return QMF_OK;
}

qmf_status qmf_report_summary(const qmf_report* r, const char** out) {
  if (!r || !out) return null_arg("arguments");
  *out = r->summary.c_str();
  return QMF_OK;
}

void qmf_report_free(qmf_report* r) { delete r; }

qmf_status qmf_config_load(const char* path, qmf_config** out) {
  if (!path || !out) return null_arg("arguments");
  *out = nullptr;
  return guarded([&] {
    *out = new qmf_config{load_run_config(path)};
    return QMF_OK;
  });
}

qmf_status qmf_config_parse(const char* json_text, qmf_config** out) {
  if (!json_text || !out) return null_arg("arguments");
  *out = nullptr;
  return guarded([&] {
    *out = new qmf_config{parse_run_config(json_text)};
    return QMF_OK;
  });
}

qmf_status qmf_config_num_points(const qmf_config* c, size_t* out) {
  if (!c || !out) return null_arg("arguments");
  *out = c->config.grid->num_points();
  return QMF_OK;
}

void qmf_config_free(qmf_config* c) { delete c; }

qmf_status qmf_flow_run(const char* config_path, const char* out_dir, int* exit_code,
                        qmf_flow_result** out) {
  if (!config_path || !exit_code || !out) return null_arg("arguments");
  *out = nullptr;
  return guarded([&] {
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = out_dir;
    std::ostringstream log;
    auto r = std::make_unique<qmf_flow_result>();
    r->summary = run_flow_command(config_path, dir, log);
    *exit_code = r->summary.exit_code;
    const qmf_status s = status_for_exit(r->summary.exit_code);
    if (s != QMF_OK) g_last_error = r->summary.message;
    *out = r.release();
    return s;
  });
}

qmf_status qmf_flow_result_get(const qmf_flow_result* r, int* converged, double* b_tilde,
                               double* residual, double* t_final, long* steps,
                               double* wall_seconds) {
  if (!r) return null_arg("result");
  const auto& s = r->summary;
  if (converged) *converged = s.converged ? 1 : 0;
  if (b_tilde) *b_tilde = s.b_tilde;
  if (residual) *residual = s.residual;
  if (t_final) *t_final = s.t_final;
  if (steps) *steps = s.steps;
  if (wall_seconds) *wall_seconds = s.wall_seconds;
  return QMF_OK;
}

qmf_status qmf_flow_result_message(const qmf_flow_result* r, const char** out) {
  if (!r || !out) return null_arg("arguments");
  *out = r->summary.message.c_str();
  return QMF_OK;
}

void qmf_flow_result_free(qmf_flow_result* r) { delete r; }

qmf_status qmf_check(const char* config_path, const char* snapshot_path, double tol,
                     int* exit_code, qmf_check_result** out) {
  if (!config_path || !snapshot_path || !exit_code || !out) return null_arg("arguments");
  *out = nullptr;
  return guarded([&] {
    std::optional<double> t;
    if (tol > 0.0) t = tol;
    std::ostringstream sink;
    auto r = std::make_unique<qmf_check_result>();
    r->summary = check_command(config_path, snapshot_path, t, sink);
    *exit_code = r->summary.exit_code;
    qmf_status s = QMF_OK;
    if (r->summary.exit_code == 2) s = QMF_ERR_IO;
    if (r->summary.exit_code == 3) s = QMF_ERR_POSITIVITY;
    if (s != QMF_OK) g_last_error = r->summary.message;
    *out = r.release();
    return s;
  });
}

qmf_status qmf_check_result_get(const qmf_check_result* r, double* residual,
                                double* b_tilde) {
  if (!r) return null_arg("result");
  if (residual) *residual = r->summary.residual;
  if (b_tilde) *b_tilde = r->summary.b_tilde;
  return QMF_OK;
}

qmf_status qmf_check_result_message(const qmf_check_result* r, const char** out) {
  if (!r || !out) return null_arg("arguments");
  *out = r->summary.message.c_str();
  return QMF_OK;
}

void qmf_check_result_free(qmf_check_result* r) { delete r; }

qmf_status qmf_snapshot_read(const char* path, qmf_field** out) {
  if (!path || !out) return null_arg("arguments");
  *out = nullptr;
  return guarded([&] {
    *out = new qmf_field{read_snapshot(path)};
    return QMF_OK;
  });
}

qmf_status qmf_field_size(const qmf_field* f, size_t* out) {
  if (!f || !out) return null_arg("arguments");
  *out = f->snapshot.values.size();
  return QMF_OK;
}

qmf_status qmf_field_values(const qmf_field* f, const double** out) {
  if (!f || !out) return null_arg("arguments");
  *out = f->snapshot.values.data();
  return QMF_OK;
}

qmf_status qmf_field_time(const qmf_field* f, double* out) {
  if (!f || !out) return null_arg("arguments");
  *out = f->snapshot.header.t;
  return QMF_OK;
}

void qmf_field_free(qmf_field* f) { delete f; }

}  // extern "C"
