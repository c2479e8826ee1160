#include "flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace qmflow {

ScalarField normalize(const ScalarField& u) {
  ScalarField out = u;
  out += -u.mean();
  return out;
}

FlowIntegrator::FlowIntegrator(FlowProblem problem, StepControl control)
    : problem_(std::move(problem)), control_(control) {
  if (!problem_.grid) throw std::invalid_argument("flow problem without a grid");
  if (problem_.omega_h.size() != problem_.grid->num_points() ||
      problem_.f.size() != problem_.grid->num_points())
    throw std::invalid_argument("flow problem fields do not match the grid");
  if (!(control_.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
}

RhsEvaluation FlowIntegrator::evaluate(const ScalarField& u) const {
  return evaluate_rhs(u, problem_.omega_h, problem_.f);
}

double FlowIntegrator::cfl_dt(const RhsEvaluation& rhs) const {
  if (!rhs.positive)
    throw_positivity("cfl_dt", *problem_.grid, rhs.argmin, rhs.min_eig);
  const double h = problem_.grid->min_spacing();
  return control_.sigma * h * h / rhs.kappa;
}

double FlowIntegrator::cfl_dt(const ScalarField& u) const {
  return cfl_dt(evaluate(u));
}

bool FlowIntegrator::acceptable(const RhsEvaluation& r) const {
  return r.finite && r.positive && r.min_eig > control_.positivity_margin;
}

const RhsEvaluation& FlowIntegrator::rhs_at(const ScalarField& u) {
  const bool hit = cached_u_ && cached_u_->size() == u.size() &&
                   std::memcmp(cached_u_->values().data(), u.values().data(),
                               u.size() * sizeof(double)) == 0;
  if (!hit) {
    cached_rhs_ = evaluate(u);
    cached_u_ = u;
    consecutive_accepted_ = 0;
  }
  return *cached_rhs_;
}

DiagnosticsRecord FlowIntegrator::diagnostics(const FlowState& state,
                                              const RhsEvaluation& rhs) const {
  DiagnosticsRecord d;
  d.step = state.step_count;
  d.t = state.t;
  d.dt = state.dt;
  d.sup_abs_ut = rhs.ut.max_abs();
  d.osc_u = state.u.oscillation();
  d.max_beta = rhs.max_beta;
  d.max_eta = rhs.max_eta;
  d.min_eig_omega_tilde = rhs.min_eig;
  d.osc_ut = rhs.ut.oscillation();
  d.spectral_tail = rhs.spectral_tail;
  d.rejections = last_rejections_;
  return d;
}

FlowState FlowIntegrator::step(const FlowState& state) {
  const RhsEvaluation k1 = rhs_at(state.u);
  if (!acceptable(k1))
    throw_positivity("step: current state", *problem_.grid, k1.argmin, k1.min_eig);
  const double cap = cfl_dt(k1);
  double dt = state.dt > 0.0 ? state.dt : cap;

  const std::size_t np = state.u.size();
  int rejections = 0;
  while (true) {
    ScalarField pred = state.u;
    for (std::size_t p = 0; p < np; ++p) pred[p] += dt * k1.ut[p];
    RhsEvaluation k2 = evaluate(pred);
    if (acceptable(k2)) {
      ScalarField next = state.u;
      for (std::size_t p = 0; p < np; ++p) next[p] += 0.5 * dt * (k1.ut[p] + k2.ut[p]);
      RhsEvaluation k3 = evaluate(next);
      if (acceptable(k3)) {
        FlowState out;
        out.t = state.t + dt;
        out.step_count = state.step_count + 1;
        last_rejections_ = rejections;
        consecutive_accepted_ = rejections == 0 ? consecutive_accepted_ + 1 : 0;
        double next_dt = dt;
        if (consecutive_accepted_ >= control_.growth_interval) {
          next_dt *= control_.growth_factor;
          consecutive_accepted_ = 0;
        }
        out.dt = std::min(next_dt, cfl_dt(k3));
        const int carried = consecutive_accepted_;
        cached_u_ = next;
        cached_rhs_ = std::move(k3);
        consecutive_accepted_ = carried;
        out.u = std::move(next);
        return out;
      }
    }
    ++rejections;
    if (rejections >= control_.max_rejections) {
      last_rejections_ = rejections;
      FlowState failed = state;
      failed.dt = dt;
      std::ostringstream os;
      os << "stiffness failure at t = " << state.t << ": " << rejections
         << " consecutive step rejections (last dt = " << dt << ")";
      throw StiffnessError(os.str(), diagnostics(failed, k1));
    }
    dt *= 0.5;
  }
}

SteadyResult run_to_steady(const ScalarField& u0, FlowIntegrator& integrator,
                           const SteadyOptions& options) {
  const RhsEvaluation e0 = integrator.evaluate(u0);
  if (!e0.positive || !e0.finite ||
      e0.min_eig <= integrator.control().positivity_margin)
    throw_positivity("initial data", *u0.grid(), e0.argmin, e0.min_eig);

  SteadyResult result;
  FlowState state{u0, 0.0, integrator.cfl_dt(e0), 0};
  auto record = [&](const RhsEvaluation& rhs) {
    DiagnosticsRecord d = integrator.diagnostics(state, rhs);
    if (state.step_count == 0) d.rejections = 0;
    result.history.push_back(d);
    if (options.on_step) options.on_step(state, rhs, d);
    return d.osc_ut;
  };

  double osc = record(e0);
  double mean_ut = e0.ut.mean();
  while (true) {
    if (osc < options.tol_steady) {
      result.converged = true;
      break;
    }
    if (state.t >= options.t_max) break;
    if (options.max_steps >= 0 && state.step_count >= options.max_steps) break;
    state = integrator.step(state);
    osc = record(integrator.last_rhs());
    mean_ut = integrator.last_rhs().ut.mean();
  }

  result.residual = osc;
  result.b_tilde = mean_ut;
  result.t_final = state.t;
  result.steps = state.step_count;
  result.u_normalized = normalize(state.u);
  result.u_final = std::move(state.u);
  return result;
}

bool monitor_maximum_principle(const std::vector<DiagnosticsRecord>& history,
                               double initial_slack, double step_slack) {
  if (history.size() < 2) return true;
  const double initial = history.front().sup_abs_ut;
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (!(history[k].sup_abs_ut <= initial + initial_slack)) return false;
    if (k > 0 && !(history[k].sup_abs_ut <= history[k - 1].sup_abs_ut + step_slack))
      return false;
  }
  return true;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line needs at least two paired samples");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace qmflow
