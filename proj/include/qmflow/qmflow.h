/* qmflow: parabolic quaternionic Monge-Ampere flow on flat hyperKaehler tori.
 *
 * C interface over opaque handles. Every function returns a qmf_status; on
 * failure qmf_last_error() describes the problem (thread-local, valid until
 * the next call on the same thread). Handles are released with the matching
 * *_free function, which accepts NULL. */

#ifndef QMFLOW_QMFLOW_H
#define QMFLOW_QMFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(QMFLOW_BUILDING_LIBRARY)
#define QMF_API __attribute__((visibility("default")))
#else
#define QMF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  QMF_OK = 0,
  QMF_ERR_INVALID_ARGUMENT = 1,
  QMF_ERR_CONFIG = 2,
  QMF_ERR_POSITIVITY = 3,
  QMF_ERR_STIFFNESS = 4,
  QMF_ERR_IO = 5,
  QMF_ERR_DIMENSION = 6,
  QMF_ERR_DEGENERATE = 7,
  QMF_ERR_INTERNAL = 99
} qmf_status;

typedef struct qmf_report qmf_report;
typedef struct qmf_config qmf_config;
typedef struct qmf_flow_result qmf_flow_result;
typedef struct qmf_check_result qmf_check_result;
typedef struct qmf_field qmf_field;

QMF_API const char* qmf_version(void);
QMF_API const char* qmf_last_error(void);

/* Worker count for data-parallel stages. workers <= 0 reads QMFLOW_WORKERS
 * (default: available parallelism). The count in effect is stored in *out
 * when out is not NULL. */
QMF_API qmf_status qmf_set_workers(int workers, int* out);

/* --- pointwise algebra; a is a row-major antisymmetric 2n x 2n matrix of
 * interleaved (re, im) pairs, 8 n^2 doubles. */
QMF_API qmf_status qmf_pfaffian(int n, const double* a, double* re, double* im);
QMF_API qmf_status qmf_s_m(int n, const double* chi, int m, double* re, double* im);
QMF_API qmf_status qmf_min_positivity_eigenvalue(int n, const double* a, double* out);

/* --- identity suite */
QMF_API qmf_status qmf_identities_run(int n, int trials, uint64_t seed, qmf_report** out);
QMF_API qmf_status qmf_report_all_pass(const qmf_report* r, int* out);
QMF_API qmf_status qmf_report_count(const qmf_report* r, size_t* out);
QMF_API qmf_status qmf_report_entry(const qmf_report* r, size_t i, const char** name,
                                    double* max_rel_error, double* tolerance, int* pass);
/* The returned strings live as long as the report. */
QMF_API qmf_status qmf_report_json(const qmf_report* r, const char** out);
QMF_API qmf_status qmf_report_summary(const qmf_report* r, const char** out);
QMF_API void qmf_report_free(qmf_report* r);

/* --- run configurations */
QMF_API qmf_status qmf_config_load(const char* path, qmf_config** out);
QMF_API qmf_status qmf_config_parse(const char* json_text, qmf_config** out);
QMF_API qmf_status qmf_config_num_points(const qmf_config* c, size_t* out);
QMF_API void qmf_config_free(qmf_config* c);

/* --- flow: out_dir may be NULL (config's output_dir). *exit_code receives
 * 0 converged, 1 not converged, 2 configuration error, 3 initial positivity
 * failure, 4 stiffness failure; the status mirrors it. A result handle is
 * produced whenever the run started. */
QMF_API qmf_status qmf_flow_run(const char* config_path, const char* out_dir,
                                int* exit_code, qmf_flow_result** out);
QMF_API qmf_status qmf_flow_result_get(const qmf_flow_result* r, int* converged,
                                       double* b_tilde, double* residual, double* t_final,
                                       long* steps, double* wall_seconds);
QMF_API qmf_status qmf_flow_result_message(const qmf_flow_result* r, const char** out);
QMF_API void qmf_flow_result_free(qmf_flow_result* r);

/* --- check: *exit_code receives 0 residual <= tol, 1 above, 2 shape or I/O
 * error, 3 positivity failure. tol <= 0 uses the config's tol_steady. */
QMF_API qmf_status qmf_check(const char* config_path, const char* snapshot_path, double tol,
                             int* exit_code, qmf_check_result** out);
QMF_API qmf_status qmf_check_result_get(const qmf_check_result* r, double* residual,
                                        double* b_tilde);
QMF_API qmf_status qmf_check_result_message(const qmf_check_result* r, const char** out);
QMF_API void qmf_check_result_free(qmf_check_result* r);

/* --- snapshots */
QMF_API qmf_status qmf_snapshot_read(const char* path, qmf_field** out);
QMF_API qmf_status qmf_field_size(const qmf_field* f, size_t* out);
QMF_API qmf_status qmf_field_values(const qmf_field* f, const double** out);
QMF_API qmf_status qmf_field_time(const qmf_field* f, double* out);
QMF_API void qmf_field_free(qmf_field* f);

#ifdef __cplusplus
}
#endif

#endif
