// Differential operators of the quaternionic Monge-Ampere flow on the flat
// torus: d_J, the quaternionic Hessian dd_J u, S_1, Omega-tilde, the flow
// right-hand side, the gradient and Laplacian quantities beta and eta, the
// linearized operator, and the real (1,1)-form omega_u.

#pragma once

#include "spectral.hpp"

#include <string>

namespace qmflow {

// One (2,0)-form per grid point, stored as flat 2n x 2n blocks.
class TwoFormField {
 public:
  TwoFormField() = default;
  explicit TwoFormField(GridPtr grid);
  TwoFormField(GridPtr grid, const JRealTwoForm& constant);

  const GridPtr& grid() const { return grid_; }
  int n() const { return n_; }
  std::size_t size() const { return grid_ ? grid_->num_points() : 0; }

  JRealTwoForm at(std::size_t p) const;
  void set(std::size_t p, const JRealTwoForm& form);
  // Row-major 2n x 2n coefficient block of point p.
  const cplx* block(std::size_t p) const { return data_.data() + p * 4 * n_ * n_; }

  double max_j_reality_defect() const;

 private:
  GridPtr grid_;
  int n_ = 0;
  std::vector<cplx> data_;
};

// Real (1,1)-forms omega = i sum a_{j kbar} dz^j ^ dzbar^k, one Hermitian
// matrix a per grid point. The standard form induced by Omega is a = I/2,
// i.e. omega = sum_j dx^j ^ dx^{2n+j}.
class HermitianField {
 public:
  HermitianField() = default;
  explicit HermitianField(GridPtr grid);

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return grid_ ? grid_->num_points() : 0; }
  SmallCMatrix at(std::size_t p) const;
  void set(std::size_t p, const SmallCMatrix& a);

  double max_hermiticity_defect() const;

 private:
  GridPtr grid_;
  int dim_ = 0;
  std::vector<cplx> data_;
};

class PositivityError : public std::runtime_error {
 public:
  PositivityError(const std::string& what, std::size_t point,
                  std::vector<double> coordinates, double min_eigenvalue);

  std::size_t point() const { return point_; }
  const std::vector<double>& coordinates() const { return coords_; }
  double min_eigenvalue() const { return min_eig_; }

 private:
  std::size_t point_;
  std::vector<double> coords_;
  double min_eig_;
};

[[noreturn]] void throw_positivity(const std::string& context, const TorusGrid& grid,
                                   std::size_t point, double min_eig);

// --- pointwise kernels -----------------------------------------------------

// (dd_J u)_{jk} at a point from the complex Hessian H_{jl} = u_{j lbar}:
// A = -H T + (H T)^T.
JRealTwoForm del_delJ_from_hessian(const SmallCMatrix& hess);
// Omega_h + (S_1(chi) Omega - chi) / (n - 1).
JRealTwoForm omega_tilde_from(const JRealTwoForm& omega_h, const JRealTwoForm& ddj);
// (n-1) Omega_h - S_1(Omega_h) Omega + S_1(Omega-tilde) Omega - (n-1) Omega-tilde.
JRealTwoForm reconstruct_del_delJ(const JRealTwoForm& omega_tilde,
                                  const JRealTwoForm& omega_h);

// Real (1,1)-form of a J-real form through the metric g = Re(alpha(., J .)),
// omega = g(I ., .), assembled with real 4n x 4n matrices.
SmallCMatrix one_one_form_metric(const JRealTwoForm& alpha);
// Coefficient matrix of J applied to sum H_{jk} dz^j ^ dzbar^k.
SmallCMatrix j_on_one_one(const SmallCMatrix& h);

// A = n/(n-1) (S_{n-1}(Ot) Omega^{n-1} - Ot^{n-1}), and A ^ chi / Ot^n.
ExteriorElement linearization_form(const JRealTwoForm& omega_tilde);
double linearized_quotient(const JRealTwoForm& omega_tilde, const JRealTwoForm& chi);

// --- field operators -------------------------------------------------------

// (d_J u)_m = -sum_l u_{lbar} T_{lm}; one complex field per holomorphic index.
std::vector<ComplexField> d_J(const ScalarField& u);
TwoFormField del_delJ(const ScalarField& u);
ScalarField s1_field(const TwoFormField& chi);
TwoFormField omega_tilde(const ScalarField& u, const TwoFormField& omega_h);

// c Omega + dd_J rho; throws PositivityError if not strictly positive
// (margin 1e-10) at some grid point.
TwoFormField build_omega_h(double c, const TrigPolySpec& rho, const GridPtr& grid);

struct RhsEvaluation {
  ScalarField ut;               // log(Ot^n / Omega^n) - f
  double min_eig = 0.0;         // min over the grid of Ot's quaternionic eigenvalues
  std::size_t argmin = 0;
  double kappa = 0.0;           // max over the grid of sum_i 1/lambda_i
  double max_imag_ratio = 0.0;  // largest |Im Pf(Ot)| / |Pf(Ot)|
  double max_beta = 0.0;
  double max_eta = 0.0;
  double spectral_tail = 0.0;
  bool positive = false;        // every lambda_i > 0
  bool finite = false;
};

// Right-hand side plus the pointwise quantities needed for step control and
// diagnostics. Does not throw on loss of positivity; see `positive`.
RhsEvaluation evaluate_rhs(const ScalarField& u, const TwoFormField& omega_h,
                           const ScalarField& f);
// log(Pf(Ot)/Pf(Omega)) - f; throws PositivityError where Ot is not positive.
ScalarField flow_rhs(const ScalarField& u, const TwoFormField& omega_h,
                     const ScalarField& f);

// beta = |du|^2 / 4 with the flat metric.
ScalarField beta(const ScalarField& u);
// n du ^ d_J u ^ Omega^{n-1} / Omega^n by exterior expansion.
ScalarField beta_wedge(const ScalarField& u);
ScalarField eta(const ScalarField& u);

// Spatial part of the linearized operator, L_u v = A ^ dd_J v / Ot^n.
ScalarField apply_linearized(const ScalarField& u, const ScalarField& v,
                             const TwoFormField& omega_h);

// omega_u from the metric definition g_u = Re(Ot(., J .)), omega_u = g_u(I ., .).
HermitianField omega_u(const ScalarField& u, const TwoFormField& omega_h);
// omega_h + (S_1(dd_J u) omega - (i dd-bar u - i J dd-bar u)/2) / (n - 1).
HermitianField omega_u_explicit(const ScalarField& u, const TwoFormField& omega_h);

}  // namespace qmflow
