#include "verification.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace qmflow {

namespace {

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double rel_err(const SmallCMatrix& a, const SmallCMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// Grids for the field identities: four active real coordinates spread over
// different quaternionic lines and both halves (x and y) of the z-planes.
GridPtr identity_grid(int n) {
  if (n == 2) return TorusGrid::make(2, {0, 2, 5, 7}, {8, 8, 8, 8});
  return TorusGrid::make(3, {0, 3, 7, 11}, {8, 8, 8, 8});
}

struct FieldInstance {
  TrigPolySpec u_spec;
  ScalarField u;
  TwoFormField omega_h;
};

// Random (u, rho, c) with Ot(u) keeping a positivity margin of at least 0.1.
FieldInstance draw_field_instance(std::mt19937_64& rng, const GridPtr& grid) {
  const int max_k = grid->sizes().front() / 4;
  std::uniform_real_distribution<double> cdist(0.5, 2.0);
  const double c = cdist(rng);
  TrigPolySpec u_spec = random_trig_poly(rng, *grid, 3, max_k, 0.02);
  TrigPolySpec rho = random_trig_poly(rng, *grid, 2, max_k, 0.02);
  for (int attempt = 0; attempt < 40; ++attempt) {
    try {
      FieldInstance inst{u_spec, sample(u_spec, grid), build_omega_h(c, rho, grid)};
      const RhsEvaluation r = evaluate_rhs(inst.u, inst.omega_h, ScalarField(grid));
      if (r.min_eig >= 0.1) return inst;
    } catch (const PositivityError&) {
    }
    for (auto& t : u_spec.terms) t.amplitude *= 0.5;
    for (auto& t : rho.terms) t.amplitude *= 0.5;
  }
  throw std::logic_error("could not draw a positive identity instance");
}

SmallCMatrix random_antisymmetric(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  SmallCMatrix a = SmallCMatrix::Zero(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int k = j + 1; k < dim; ++k) {
      a(j, k) = cplx(g(rng), g(rng));
      a(k, j) = -a(j, k);
    }
  return a;
}

class Accumulator {
 public:
  Accumulator(std::string name, int n, int trials, double tol, std::uint64_t seed) {
    r_.name = std::move(name);
    r_.n = n;
    r_.trials = trials;
    r_.tolerance = tol;
    r_.seed = seed;
  }
  void add(double e) {
    if (std::isnan(e)) e = std::numeric_limits<double>::infinity();
    r_.max_rel_error = std::max(r_.max_rel_error, e);
  }
  IdentityReport finish() {
    r_.pass = r_.max_rel_error <= r_.tolerance;
    return r_;
  }

 private:
  IdentityReport r_;
};

enum Stream : std::uint64_t { kFieldStream = 1, kPointStream = 2 };

}  // namespace

std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(index), hi(index)};
  return std::mt19937_64(seq);
}

TrigPolySpec random_trig_poly(std::mt19937_64& rng, const TorusGrid& grid, int terms,
                              int max_k, double amp) {
  std::uniform_int_distribution<int> kd(-max_k, max_k);
  std::uniform_real_distribution<double> ad(-amp, amp);
  std::uniform_real_distribution<double> pd(0.0, 2.0 * M_PI);
  TrigPolySpec spec;
  for (int t = 0; t < terms; ++t) {
    std::vector<int> k(grid.num_active());
    for (auto& ki : k) ki = kd(rng);
    const double a = ad(rng);
    const double ph = pd(rng);
    spec.add(std::move(k), a, ph);
  }
  return spec;
}

JRealTwoForm random_j_real_form(std::mt19937_64& rng, int n, double shift) {
  JRealTwoForm a = j_real_part(JRealTwoForm::from_matrix(random_antisymmetric(rng, 2 * n)));
  if (shift != 0.0) a += shift * JRealTwoForm::standard(n);
  return a;
}

cplx volume_ratio(const JRealTwoForm& alpha) {
  const int n = alpha.quaternionic_dim();
  const int h = 2 * n;
  const int g = 4 * n;
  const ExteriorElement hol = alpha.to_exterior(g, 0, false).power(n);
  const ExteriorElement antihol = alpha.to_exterior(g, h, true).power(n);
  const cplx lhs = wedge(hol, antihol).top() / (factorial(n) * factorial(n));

  // omega = i sum a_{j kbar} dz^j ^ dzbar^k, dzbar^k is generator h + k.
  const SmallCMatrix a = one_one_form_metric(alpha);
  ExteriorElement w(g);
  for (int j = 0; j < h; ++j)
    for (int k = 0; k < h; ++k)
      w.add((1u << j) | (1u << (h + k)), cplx(0.0, 1.0) * a(j, k));
  const cplx rhs = w.power(2 * n).top() / factorial(2 * n);
  if (std::abs(rhs) == 0.0) throw DegenerateFormError("volume_ratio: omega^{2n} vanishes");
  return lhs / rhs;
}

std::vector<IdentityReport> run_identity_suite(int n, int trials, std::uint64_t seed) {
  if (n < 2 || n > kMaxQuaternionicDim)
    throw std::invalid_argument("identity suite supports 2 <= n <= 4");
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  const bool fields = n <= 3;
  const double ft = kFieldTolerance;
  const double pt = kPointwiseTolerance;

  Accumulator omega_u_paths("omega_u_two_paths", n, trials, ft, seed);
  Accumulator s1_diff("s1_difference", n, trials, ft, seed);
  Accumulator recon("ddj_reconstruction", n, trials, ft, seed);
  Accumulator lap("s1_laplacian", n, trials, ft, seed);
  Accumulator beta_paths("beta_two_paths", n, trials, ft, seed);
  Accumulator det_form("real_form_determinant", n, trials, ft, seed);
  Accumulator pf_det("pfaffian_squared_det", n, trials, pt, seed);
  Accumulator tq("top_quotient_two_paths", n, trials, pt, seed);
  Accumulator vol("volume_identity", n, trials, pt, seed);

  const JRealTwoForm omega = JRealTwoForm::standard(n);
  const GridPtr grid = fields ? identity_grid(n) : nullptr;
  const double four_n = std::pow(4.0, n);
  constexpr int kPointSamples = 4;

  for (int trial = 0; trial < trials; ++trial) {
    if (fields) {
      auto rng = instance_rng(seed, kFieldStream + 16 * n, trial);
      const FieldInstance inst = draw_field_instance(rng, grid);
      const ScalarField& u = inst.u;
      const std::size_t np = u.size();
      const TwoFormField ddj = del_delJ(u);
      const TwoFormField ot = omega_tilde(u, inst.omega_h);

      const HermitianField wm = omega_u(u, inst.omega_h);
      const HermitianField wl = omega_u_explicit(u, inst.omega_h);
      for (std::size_t p = 0; p < np; ++p) omega_u_paths.add(rel_err(wl.at(p), wm.at(p)));

      const ScalarField s1 = s1_field(ddj);
      const ScalarField bm = beta(u);
      const ScalarField bw = beta_wedge(u);
      const ScalarField zero_f(grid);
      const ScalarField logratio = flow_rhs(u, inst.omega_h, zero_f);
      det_form.add(real_form_determinant_defect(u, inst.omega_h, logratio));

      for (std::size_t p = 0; p < np; ++p) {
        const JRealTwoForm ot_p = ot.at(p);
        const JRealTwoForm oh_p = inst.omega_h.at(p);
        const JRealTwoForm ddj_p = ddj.at(p);
        const cplx expanded = s_m(ot_p, omega, 1) - s_m(oh_p, omega, 1);
        s1_diff.add(rel_err(s1[p], expanded));
        recon.add(rel_err(reconstruct_del_delJ(ot_p, oh_p).matrix(), ddj_p.matrix()));

        const auto x = active_coordinates(*grid, p);
        double quarter_laplacian = 0.0;
        for (std::size_t a = 0; a < grid->num_active(); ++a)
          quarter_laplacian += 0.25 * inst.u_spec.second_derivative(x, a, a);
        lap.add(rel_err(s1[p], quarter_laplacian));
        beta_paths.add(rel_err(bw[p], bm[p]));
      }
    }

    auto rng = instance_rng(seed, kPointStream + 16 * n, trial);
    for (int s = 0; s < kPointSamples; ++s) {
      const SmallCMatrix a = random_antisymmetric(rng, 2 * n);
      const cplx pf = pfaffian(a);
      const Eigen::MatrixXcd full = a;
      pf_det.add(rel_err(pf * pf, full.fullPivLu().determinant()));

      const JRealTwoForm alpha = random_j_real_form(rng, n);
      const JRealTwoForm reference = random_j_real_form(rng, n, 2.0);
      tq.add(rel_err(top_quotient(alpha, reference), top_quotient_expanded(alpha, reference)));
      tq.add(rel_err(top_quotient(alpha, omega), top_quotient_expanded(alpha, omega)));

      // The identity concerns positive forms; near the cone boundary both
      // sides of the ratio vanish and the quotient loses digits.
      JRealTwoForm beta_form = random_j_real_form(rng, n, 2.0);
      while (min_positivity_eigenvalue(beta_form) < 0.25)
        beta_form = random_j_real_form(rng, n, 2.0);
      vol.add(rel_err(volume_ratio(beta_form), cplx(four_n)));
    }
  }

  std::vector<IdentityReport> out;
  if (fields) {
    out.push_back(omega_u_paths.finish());
    out.push_back(s1_diff.finish());
    out.push_back(recon.finish());
    out.push_back(lap.finish());
    out.push_back(beta_paths.finish());
    out.push_back(det_form.finish());
  }
  out.push_back(pf_det.finish());
  out.push_back(tq.finish());
  out.push_back(vol.finish());
  return out;
}

std::string identity_report_json(const std::vector<IdentityReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.pass;
    arr.push_back({{"identity", r.name},
                   {"n", r.n},
                   {"trials", r.trials},
                   {"max_rel_error", r.max_rel_error},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass},
                   {"seed", r.seed}});
  }
  nlohmann::ordered_json doc = {{"all_pass", all}, {"reports", arr}};
  return doc.dump(2) + "\n";
}

std::string identity_summary_table(const std::vector<IdentityReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "identity" << std::setw(4) << "n" << std::setw(8)
     << "trials" << std::setw(14) << "max_rel_err" << std::setw(10) << "tol"
     << "result\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(26) << r.name << std::setw(4) << r.n << std::setw(8)
       << r.trials << std::setw(14) << std::scientific << std::setprecision(3)
       << r.max_rel_error << std::setw(10) << std::setprecision(0) << r.tolerance
       << std::defaultfloat << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  return os.str();
}

ManufacturedProblem build_manufactured(const TrigPolySpec& u_star, double c,
                                       const TrigPolySpec& rho, const GridPtr& grid) {
  check_band_limit(u_star, *grid);
  check_band_limit(rho, *grid);
  ManufacturedProblem mp;
  mp.grid = grid;
  mp.omega_h = build_omega_h(c, rho, grid);
  mp.u_star = sample(u_star, grid);
  const ScalarField zero(grid);
  RhsEvaluation r = evaluate_rhs(mp.u_star, mp.omega_h, zero);
  if (!r.positive || !r.finite) {
    // min eigenvalue of Omega_h + s * (Ot(u*) - Omega_h) is concave in s.
    const TwoFormField ot = omega_tilde(mp.u_star, mp.omega_h);
    auto positive_at = [&](double s) {
      for (std::size_t p = 0; p < ot.size(); ++p) {
        const JRealTwoForm oh = mp.omega_h.at(p);
        if (!(min_positivity_eigenvalue(oh + s * (ot.at(p) - oh)) > 1e-8)) return false;
      }
      return true;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (positive_at(mid) ? lo : hi) = mid;
    }
    std::ostringstream os;
    os << "manufactured solution: reduce the u* amplitudes by a factor of at least "
       << (lo > 0.0 ? 1.0 / lo : std::numeric_limits<double>::infinity());
    throw_positivity(os.str(), *grid, r.argmin, r.min_eig);
  }
  mp.margin = r.min_eig;
  mp.f = std::move(r.ut);
  return mp;
}

LinearizationCheck linearization_order_check(const ScalarField& u, const ScalarField& v,
                                             const TwoFormField& omega_h,
                                             const std::vector<double>& epsilons) {
  if (epsilons.size() < 2)
    throw std::invalid_argument("linearization check needs at least two epsilons");
  const ScalarField zero(u.grid());
  const ScalarField lv = apply_linearized(u, v, omega_h);
  LinearizationCheck out;
  out.epsilons = epsilons;
  for (double eps : epsilons) {
    const ScalarField plus = flow_rhs(u + eps * v, omega_h, zero);
    const ScalarField minus = flow_rhs(u - eps * v, omega_h, zero);
    double e = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p)
      e = std::max(e, std::abs((plus[p] - minus[p]) / (2.0 * eps) - lv[p]));
    out.errors.push_back(e);
  }
  const bool all_tiny = std::all_of(out.errors.begin(), out.errors.end(),
                                    [](double e) { return e <= 1e-13; });
  if (all_tiny) {
    out.exact = true;
    out.order = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    lx.push_back(std::log(epsilons[i]));
    ly.push_back(std::log(std::max(out.errors[i], 1e-300)));
  }
  out.order = fit_line(lx, ly).slope;
  return out;
}

double real_form_determinant_defect(const ScalarField& u, const TwoFormField& omega_h,
                                    const ScalarField& ut_plus_f) {
  const int h = 2 * u.grid()->n();
  const HermitianField w = omega_u(u, omega_h);
  const double det_omega = std::pow(0.5, h);
  double worst = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const Eigen::MatrixXcd a = w.at(p);
    const double lhs = a.fullPivLu().determinant().real() / det_omega;
    const double rhs = std::exp(2.0 * ut_plus_f[p]);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, rhs));
  }
  return worst;
}

}  // namespace qmflow
