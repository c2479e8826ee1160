// Oracle layer: seeded randomized identity suites, manufactured stationary
// solutions, and the finite-difference order check of the linearization.

#pragma once

#include "flow.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace qmflow {

struct IdentityReport {
  std::string name;
  int n = 0;
  int trials = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

inline constexpr double kFieldTolerance = 1e-10;
inline constexpr double kPointwiseTolerance = 1e-12;

// Errors are |a - b| / max(1, |b|) with b the reference path, maximized over
// points and trials. n in {2, 3} runs field and pointwise identities; n = 4
// runs the pointwise ones only.
std::vector<IdentityReport> run_identity_suite(int n, int trials, std::uint64_t seed);

// Deterministic JSON (no timings) and a fixed-width summary table.
std::string identity_report_json(const std::vector<IdentityReport>& reports);
std::string identity_summary_table(const std::vector<IdentityReport>& reports);

// Generator for one (seed, stream, index) triple; the sequence does not
// depend on the order in which instances are drawn.
std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index);

// Random band-limited trig polynomial with `terms` terms, wavevectors in
// [-max_k, max_k] per active axis and amplitudes uniform in [-amp, amp].
TrigPolySpec random_trig_poly(std::mt19937_64& rng, const TorusGrid& grid,
                              int terms, int max_k, double amp);

// Random J-real form (projection of a random antisymmetric matrix) plus
// `shift` times the standard form.
JRealTwoForm random_j_real_form(std::mt19937_64& rng, int n, double shift = 0.0);

// Wedge-path top quotient of the volume identity:
// Ot^n ^ conj(Ot)^n / (n!)^2 divided by omega^{2n} / (2n)!, where omega is
// the real (1,1)-form of Ot (equals 4^n with omega = I/2 for Omega).
cplx volume_ratio(const JRealTwoForm& alpha);

struct ManufacturedProblem {
  GridPtr grid;
  ScalarField u_star;
  ScalarField f;
  TwoFormField omega_h;
  double margin = 0.0;  // min eigenvalue of Ot(u*) over the grid
};

// f := log(Ot(u*)^n / Omega^n), so u* is stationary with b-tilde = 0.
// Throws PositivityError (with the amplitude reduction needed) when Ot(u*)
// is not strictly positive.
ManufacturedProblem build_manufactured(const TrigPolySpec& u_star, double c,
                                       const TrigPolySpec& rho, const GridPtr& grid);

struct LinearizationCheck {
  std::vector<double> epsilons;
  std::vector<double> errors;
  double order = 0.0;  // least-squares slope of log e against log eps
  bool exact = false;  // every error at round-off level; order is +inf
};

// e(eps) = || (N(u + eps v) - N(u - eps v)) / 2 eps - L_u v ||_inf with
// N(u) = log(Ot(u)^n / Omega^n).
LinearizationCheck linearization_order_check(const ScalarField& u, const ScalarField& v,
                                             const TwoFormField& omega_h,
                                             const std::vector<double>& epsilons);

// max_x | det(a_u) / det(a_omega) - exp(2 (u_t + f)) | / max(1, exp(2 (u_t + f)))
// with a_u the real (1,1)-form of Ot(u) built through the metric.
double real_form_determinant_defect(const ScalarField& u, const TwoFormField& omega_h,
                                    const ScalarField& ut_plus_f);

}  // namespace qmflow
