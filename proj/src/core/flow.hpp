// Time integration of u_t = log(Ot(u)^n / Omega^n) - f with explicit Heun
// steps, positivity-guarded step rejection, steady-state detection and the
// diagnostics that mirror the a priori estimates (sup |u_t|, osc u, beta,
// eta, min eigenvalue of Ot).

#pragma once

#include "operators.hpp"

#include <functional>
#include <optional>

namespace qmflow {

struct FlowProblem {
  GridPtr grid;
  TwoFormField omega_h;
  ScalarField f;
};

struct FlowState {
  ScalarField u;
  double t = 0.0;
  double dt = 0.0;  // step to attempt next; <= 0 means "use the CFL cap"
  long step_count = 0;
};

struct DiagnosticsRecord {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double sup_abs_ut = 0.0;
  double osc_u = 0.0;
  double max_beta = 0.0;
  double max_eta = 0.0;
  double min_eig_omega_tilde = 0.0;
  double osc_ut = 0.0;
  double spectral_tail = 0.0;
  int rejections = 0;
};

struct StepControl {
  double sigma = 0.2;
  double positivity_margin = 1e-8;
  int max_rejections = 20;
  int growth_interval = 10;
  double growth_factor = 1.1;
};

class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, DiagnosticsRecord last)
      : std::runtime_error(what), last_(last) {}
  const DiagnosticsRecord& last() const { return last_; }

 private:
  DiagnosticsRecord last_;
};

// u - mean(u); the volume form is constant on the flat torus.
ScalarField normalize(const ScalarField& u);

class FlowIntegrator {
 public:
  explicit FlowIntegrator(FlowProblem problem, StepControl control = {});

  const FlowProblem& problem() const { return problem_; }
  const StepControl& control() const { return control_; }

  RhsEvaluation evaluate(const ScalarField& u) const;

  // sigma h_min^2 / kappa, kappa = max_x sum_i 1 / lambda_i(Ot).
  double cfl_dt(const ScalarField& u) const;
  double cfl_dt(const RhsEvaluation& rhs) const;

  // One accepted Heun step. The attempted step is state.dt (the CFL cap when
  // state.dt <= 0); a predictor or corrector that loses positivity (margin
  // control().positivity_margin) or goes non-finite halves dt and retries.
  // The returned state's dt is the proposal for the next step.
  FlowState step(const FlowState& state);

  // Right-hand side at the most recently accepted state.
  const RhsEvaluation& last_rhs() const { return *cached_rhs_; }
  int last_rejections() const { return last_rejections_; }

  DiagnosticsRecord diagnostics(const FlowState& state, const RhsEvaluation& rhs) const;

 private:
  bool acceptable(const RhsEvaluation& r) const;
  const RhsEvaluation& rhs_at(const ScalarField& u);

  FlowProblem problem_;
  StepControl control_;
  std::optional<ScalarField> cached_u_;
  std::optional<RhsEvaluation> cached_rhs_;
  int consecutive_accepted_ = 0;
  int last_rejections_ = 0;
};

struct SteadyOptions {
  double tol_steady = 1e-8;
  double t_max = 100.0;
  long max_steps = -1;  // unlimited when negative
  // Called after the initial state (step 0) and after every accepted step.
  std::function<void(const FlowState&, const RhsEvaluation&, const DiagnosticsRecord&)>
      on_step;
};

struct SteadyResult {
  ScalarField u_final;
  ScalarField u_normalized;
  double b_tilde = 0.0;
  double residual = 0.0;
  bool converged = false;
  double t_final = 0.0;
  long steps = 0;
  std::vector<DiagnosticsRecord> history;
};

// Integrates from u0 until osc(u_t) < tol_steady or t > t_max. Throws
// PositivityError if u0 violates the initial positivity condition and
// StiffnessError if a step cannot be completed.
SteadyResult run_to_steady(const ScalarField& u0, FlowIntegrator& integrator,
                           const SteadyOptions& options);

// sup|u_t| never exceeds its initial value + initial_slack and never grows
// by more than step_slack between consecutive records.
bool monitor_maximum_principle(const std::vector<DiagnosticsRecord>& history,
                               double initial_slack = 1e-7,
                               double step_slack = 1e-9);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qmflow
