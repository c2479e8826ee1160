#include "run_io.hpp"

#include <json.hpp>

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qmflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) bad(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

std::vector<int> int_list(const json& j, const std::string& what) {
  if (!j.is_array()) bad(what + " must be an array of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) bad(what + " must contain integers only");
    out.push_back(v.get<int>());
  }
  return out;
}

TrigTerm parse_term(const json& t, const std::string& what) {
  if (!t.is_object() || !t.contains("k") || !t.contains("amplitude"))
    bad(what + ": each term needs 'k' and 'amplitude'");
  TrigTerm term;
  term.k = int_list(t["k"], what + ".k");
  if (!t["amplitude"].is_number()) bad(what + ": amplitude must be a number");
  term.amplitude = t["amplitude"].get<double>();
  if (t.contains("phase")) {
    if (!t["phase"].is_number()) bad(what + ": phase must be a number");
    term.phase = t["phase"].get<double>();
  }
  return term;
}

// A spec is a number (constant), a term list, or an object with "terms"
// and/or "constant", or {"random": {"terms", "amplitude", "max_k"}}.
TrigPolySpec parse_spec(const json& j, const TorusGrid& grid, std::uint64_t seed,
                        std::uint64_t stream, const std::string& what) {
  TrigPolySpec spec;
  if (j.is_null()) return spec;
  if (j.is_number()) {
    spec = TrigPolySpec::constant(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& t : j) spec.terms.push_back(parse_term(t, what));
  } else if (j.is_object()) {
    if (j.contains("random")) {
      const json& r = j["random"];
      const int terms = r.value("terms", 3);
      const int max_k = r.value("max_k", 1);
      const double amp = r.value("amplitude", 0.01);
      if (terms < 0 || max_k < 0 || !(amp >= 0.0)) bad(what + ": invalid random spec");
      auto rng = instance_rng(seed, stream, 0);
      spec = random_trig_poly(rng, grid, terms, max_k, amp);
    }
    if (j.contains("terms")) {
      if (!j["terms"].is_array()) bad(what + ".terms must be an array");
      for (const auto& t : j["terms"]) spec.terms.push_back(parse_term(t, what));
    }
    if (j.contains("constant")) {
      if (!j["constant"].is_number()) bad(what + ".constant must be a number");
      spec.add(std::vector<int>(grid.num_active(), 0), j["constant"].get<double>());
    }
  } else {
    bad(what + " must be a number, a term list or an object");
  }
  for (auto& t : spec.terms)
    if (t.k.empty() && grid.num_active() > 0) t.k.assign(grid.num_active(), 0);
  try {
    check_band_limit(spec, grid);
  } catch (const std::invalid_argument& e) {
    bad(what + ": " + e.what());
  }
  return spec;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("config must be a JSON object");

  RunConfig c;
  if (!j.contains("n") || !j["n"].is_number_integer()) bad("'n' (integer) is required");
  c.n = j["n"].get<int>();
  if (c.n == 1)
    bad("n = 1 is not supported: Omega-tilde carries a 1/(n-1) factor");
  if (c.n < 2 || c.n > kMaxQuaternionicDim) bad("n must satisfy 2 <= n <= 4");

  if (!j.contains("grid") || !j["grid"].is_object()) bad("'grid' object is required");
  const json& g = j["grid"];
  std::vector<int> dims;
  if (!g.contains("active_dims") || (g["active_dims"].is_string() && g["active_dims"] == "all")) {
    for (int d = 0; d < 4 * c.n; ++d) dims.push_back(d);
  } else {
    dims = int_list(g["active_dims"], "grid.active_dims");
  }
  std::vector<int> sizes;
  if (!g.contains("sizes")) bad("grid.sizes is required");
  if (g["sizes"].is_number_integer())
    sizes.assign(dims.size(), g["sizes"].get<int>());
  else
    sizes = int_list(g["sizes"], "grid.sizes");
  try {
    c.grid = TorusGrid::make(c.n, dims, sizes);
  } catch (const std::invalid_argument& e) {
    bad(std::string("grid: ") + e.what());
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) bad("'seed' must be an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  const json oh = j.value("omega_h", json::object());
  if (!oh.is_object()) bad("'omega_h' must be an object");
  c.c = number(oh, "c", 1.0);
  if (!(c.c > 0.0)) bad("omega_h.c must be positive");
  c.rho = parse_spec(oh.value("rho", json()), *c.grid, c.seed, 1, "omega_h.rho");

  const json fj = j.value("f", json(0.0));
  if (fj.is_string()) {
    if (fj != "manufactured") bad("'f' must be a spec or the string \"manufactured\"");
    if (!j.contains("u_star")) bad("'u_star' is required when f is \"manufactured\"");
    c.manufactured = true;
    c.u_star = parse_spec(j["u_star"], *c.grid, c.seed, 2, "u_star");
  } else {
    c.f = parse_spec(fj, *c.grid, c.seed, 2, "f");
  }
  c.u0 = parse_spec(j.value("u0", json(0.0)), *c.grid, c.seed, 3, "u0");

  c.sigma = number(j, "sigma", c.sigma);
  c.tol_steady = number(j, "tol_steady", c.tol_steady);
  c.t_max = number(j, "t_max", c.t_max);
  if (!(c.sigma > 0.0)) bad("'sigma' must be positive");
  if (!(c.tol_steady > 0.0)) bad("'tol_steady' must be positive");
  if (!(c.t_max > 0.0)) bad("'t_max' must be positive");
  if (j.contains("max_steps")) {
    if (!j["max_steps"].is_number_integer()) bad("'max_steps' must be an integer");
    c.max_steps = j["max_steps"].get<long>();
  }
  if (j.contains("snapshot_interval")) {
    if (!j["snapshot_interval"].is_number_integer() || j["snapshot_interval"].get<long>() < 0)
      bad("'snapshot_interval' must be a nonnegative integer");
    c.snapshot_interval = j["snapshot_interval"].get<long>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) bad("'output_dir' must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) { return parse_run_config(read_text(path)); }

AssembledProblem assemble(const RunConfig& config) {
  AssembledProblem a;
  const GridPtr& grid = config.grid;
  a.problem.grid = grid;
  if (config.manufactured) {
    ManufacturedProblem mp = build_manufactured(config.u_star, config.c, config.rho, grid);
    a.problem.omega_h = std::move(mp.omega_h);
    a.problem.f = std::move(mp.f);
    a.u_star = std::move(mp.u_star);
  } else {
    a.problem.omega_h = build_omega_h(config.c, config.rho, grid);
    a.problem.f = sample(config.f, grid);
  }
  a.u0 = sample(config.u0, grid);
  return a;
}

// --- snapshots --------------------------------------------------------------

void write_snapshot(const fs::path& path, const ScalarField& u, double t,
                    const std::string& field) {
  const TorusGrid& g = *u.grid();
  json h = {{"n", g.n()},         {"shape", g.sizes()},     {"active_dims", g.active_dims()},
            {"t", t},             {"field", field},         {"byte_order", "little"},
            {"dtype", "float64"}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SnapshotError("cannot write snapshot " + path.string());
  os << h.dump() << '\n';
  std::vector<unsigned char> buf(u.size() * 8);
  for (std::size_t p = 0; p < u.size(); ++p) {
    auto bits = std::bit_cast<std::uint64_t>(u[p]);
    for (int b = 0; b < 8; ++b) buf[p * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw SnapshotError("failed writing snapshot " + path.string());
}

Snapshot read_snapshot(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotError("cannot open snapshot " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw SnapshotError("snapshot has no header line");
  Snapshot s;
  try {
    const json h = json::parse(line);
    s.header.n = h.at("n").get<int>();
    s.header.shape = h.at("shape").get<std::vector<int>>();
    s.header.active_dims = h.at("active_dims").get<std::vector<int>>();
    s.header.t = h.at("t").get<double>();
    s.header.field = h.at("field").get<std::string>();
    if (h.at("byte_order") != "little" || h.at("dtype") != "float64")
      throw SnapshotError("unsupported snapshot encoding");
  } catch (const json::exception& e) {
    throw SnapshotError(std::string("malformed snapshot header: ") + e.what());
  }
  std::size_t count = 1;
  for (int d : s.header.shape) {
    if (d <= 0) throw SnapshotError("snapshot shape must be positive");
    count *= static_cast<std::size_t>(d);
  }
  std::vector<unsigned char> buf(count * 8);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size())
    throw SnapshotError("snapshot payload truncated: expected " + std::to_string(buf.size()) +
                        " bytes, found " + std::to_string(is.gcount()));
  if (is.peek() != std::char_traits<char>::eof())
    throw SnapshotError("snapshot payload longer than its header declares");
  s.values.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[p * 8 + b]) << (8 * b);
    s.values[p] = std::bit_cast<double>(bits);
  }
  return s;
}

// --- diagnostics -------------------------------------------------------------

struct DiagnosticsWriter::Impl {
  std::FILE* file = nullptr;
};

DiagnosticsWriter::DiagnosticsWriter(const fs::path& path) : impl_(std::make_unique<Impl>()) {
  impl_->file = std::fopen(path.c_str(), "w");
  if (!impl_->file) throw std::runtime_error("cannot write " + path.string());
  std::fputs("step,t,dt,sup_abs_ut,osc_u,max_beta,max_eta,min_eig,osc_ut,spectral_tail\n",
             impl_->file);
}

DiagnosticsWriter::~DiagnosticsWriter() {
  if (impl_ && impl_->file) std::fclose(impl_->file);
}

void DiagnosticsWriter::write(const DiagnosticsRecord& r) {
  std::fprintf(impl_->file, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
               r.step, r.t, r.dt, r.sup_abs_ut, r.osc_u, r.max_beta, r.max_eta,
               r.min_eig_omega_tilde, r.osc_ut, r.spectral_tail);
}

// --- workers ------------------------------------------------------------------

void set_workers(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

int configure_workers_from_env() {
  if (const char* env = std::getenv("QMFLOW_WORKERS")) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && w > 0) set_workers(static_cast<int>(w));
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// --- commands -------------------------------------------------------------------

FlowRunSummary run_flow_command(const fs::path& config_path,
                                const std::optional<fs::path>& out_dir, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  FlowRunSummary s;
  RunConfig config;
  AssembledProblem ap;
  try {
    config = load_run_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    ap = assemble(config);
  } catch (const std::exception& e) {
    s.exit_code = 2;
    s.message = std::string("invalid configuration: ") + e.what();
    return s;
  }
  s.output_dir = config.output_dir;

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    s.exit_code = 2;
    s.message = "cannot create output directory " + config.output_dir.string();
    return s;
  }

  StepControl control;
  control.sigma = config.sigma;
  FlowIntegrator integrator(ap.problem, control);
  DiagnosticsWriter csv(config.output_dir / "diagnostics.csv");
  SteadyOptions opts;
  opts.tol_steady = config.tol_steady;
  opts.t_max = config.t_max;
  opts.max_steps = config.max_steps;
  opts.on_step = [&](const FlowState& st, const RhsEvaluation&, const DiagnosticsRecord& d) {
    csv.write(d);
    if (config.snapshot_interval > 0 && st.step_count % config.snapshot_interval == 0) {
      std::ostringstream name;
      name << "u_step_" << std::setw(8) << std::setfill('0') << st.step_count << ".snap";
      write_snapshot(config.output_dir / name.str(), st.u, st.t, "u");
    }
  };

  json result = {{"converged", false}};
  try {
    SteadyResult r = run_to_steady(ap.u0, integrator, opts);
    s.converged = r.converged;
    s.b_tilde = r.b_tilde;
    s.residual = r.residual;
    s.t_final = r.t_final;
    s.steps = r.steps;
    s.exit_code = r.converged ? 0 : 1;
    s.message = r.converged ? "converged" : "t_max reached without convergence";
    write_snapshot(config.output_dir / "u_final.snap", r.u_final, r.t_final, "u");
    write_snapshot(config.output_dir / "u_normalized.snap", r.u_normalized, r.t_final,
                   "u_normalized");
    result["converged"] = r.converged;
    result["b_tilde"] = r.b_tilde;
    result["residual"] = r.residual;
    result["t_final"] = r.t_final;
    result["steps"] = r.steps;
    result["max_principle_holds"] = monitor_maximum_principle(r.history);
    if (ap.u_star) result["error_vs_u_star"] = max_abs_diff(r.u_normalized, normalize(*ap.u_star));
  } catch (const PositivityError& e) {
    s.exit_code = 3;
    s.message = std::string("initial data violates positivity: ") + e.what();
    std::ostringstream coords;
    for (double x : e.coordinates()) coords << x << ' ';
    s.message += " at x = [ " + coords.str() + "]";
  } catch (const StiffnessError& e) {
    s.exit_code = 4;
    s.message = e.what();
    s.t_final = e.last().t;
    s.steps = e.last().step;
  }
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result["status"] = s.message;
  result["exit_code"] = s.exit_code;
  result["wall_time_seconds"] = s.wall_seconds;
  write_text(config.output_dir / "result.json", result.dump(2) + "\n");
  log << s.message << '\n';
  return s;
}

CheckSummary check_command(const fs::path& config_path, const fs::path& snapshot_path,
                           std::optional<double> tol, std::ostream& out) {
  CheckSummary s;
  RunConfig config;
  Snapshot snap;
  AssembledProblem ap;
  try {
    config = load_run_config(config_path);
    snap = read_snapshot(snapshot_path);
    const TorusGrid& g = *config.grid;
    if (snap.header.n != g.n() || snap.header.shape != g.sizes() ||
        snap.header.active_dims != g.active_dims())
      throw SnapshotError("snapshot grid does not match the config grid");
    ap = assemble(config);
  } catch (const std::exception& e) {
    s.exit_code = 2;
    s.message = e.what();
    return s;
  }
  const ScalarField u(config.grid, std::move(snap.values));
  const RhsEvaluation r = evaluate_rhs(u, ap.problem.omega_h, ap.problem.f);
  if (!r.positive || !r.finite) {
    std::ostringstream os;
    os << "Omega-tilde not strictly positive at grid point " << r.argmin
       << " (min eigenvalue " << r.min_eig << ")";
    s.exit_code = 3;
    s.message = os.str();
    return s;
  }
  s.residual = r.ut.oscillation();
  s.b_tilde = r.ut.mean();
  const double limit = tol.value_or(config.tol_steady);
  s.exit_code = s.residual <= limit ? 0 : 1;
  s.message = s.exit_code == 0 ? "stationary" : "residual above tolerance";
  out << std::setprecision(17) << "residual " << s.residual << "\nb_tilde " << s.b_tilde
      << "\ntolerance " << limit << '\n';
  return s;
}

}  // namespace qmflow
