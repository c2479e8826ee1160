// Run configuration, snapshot files, diagnostics CSV, result JSON, and the
// flow / check drivers behind the command-line tool.

#pragma once

#include "verification.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace qmflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int n = 2;
  GridPtr grid;
  double c = 1.0;
  TrigPolySpec rho;
  bool manufactured = false;
  TrigPolySpec f;       // used when !manufactured
  TrigPolySpec u_star;  // used when manufactured
  TrigPolySpec u0;
  double sigma = 0.2;
  double tol_steady = 1e-8;
  double t_max = 100.0;
  long max_steps = -1;
  long snapshot_interval = 0;  // in accepted steps; 0 writes only the final state
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "qmflow_out";
};

// Parses and validates the JSON run configuration (structure, n, band
// limits). Positivity is checked when the problem is assembled.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

struct AssembledProblem {
  FlowProblem problem;
  ScalarField u0;
  std::optional<ScalarField> u_star;
};

// Omega_h, f (or the manufactured f) and u0 on the config grid. Throws
// PositivityError if Omega_h or the manufactured Ot(u*) is not positive.
AssembledProblem assemble(const RunConfig& config);

struct SnapshotHeader {
  int n = 0;
  std::vector<int> shape;
  std::vector<int> active_dims;
  double t = 0.0;
  std::string field;
};

// One JSON header line, then row-major little-endian float64 values.
void write_snapshot(const std::filesystem::path& path, const ScalarField& u, double t,
                    const std::string& field);
struct Snapshot {
  SnapshotHeader header;
  std::vector<double> values;
};
Snapshot read_snapshot(const std::filesystem::path& path);

class DiagnosticsWriter {
 public:
  explicit DiagnosticsWriter(const std::filesystem::path& path);
  ~DiagnosticsWriter();
  void write(const DiagnosticsRecord& r);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Applies QMFLOW_WORKERS (positive integer) to the OpenMP team size.
// Returns the worker count in effect.
int configure_workers_from_env();
void set_workers(int workers);

struct FlowRunSummary {
  int exit_code = 0;
  std::string message;
  bool converged = false;
  double b_tilde = 0.0;
  double residual = 0.0;
  double t_final = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;
  std::filesystem::path output_dir;
};

// Exit codes: 0 converged, 1 t_max reached, 2 configuration error,
// 3 initial positivity failure, 4 stiffness failure.
FlowRunSummary run_flow_command(const std::filesystem::path& config_path,
                                const std::optional<std::filesystem::path>& out_dir,
                                std::ostream& log);

struct CheckSummary {
  int exit_code = 0;
  std::string message;
  double residual = 0.0;
  double b_tilde = 0.0;
};

// Exit codes: 0 residual <= tol, 1 residual > tol, 2 shape or I/O error,
// 3 positivity failure. tol defaults to the config's tol_steady.
CheckSummary check_command(const std::filesystem::path& config_path,
                           const std::filesystem::path& snapshot_path,
                           std::optional<double> tol, std::ostream& out);

}  // namespace qmflow
