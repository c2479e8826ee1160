#include "operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qmflow {

// ---------------------------------------------------------------------------
// Field containers

TwoFormField::TwoFormField(GridPtr grid)
    : grid_(std::move(grid)), n_(grid_->n()) {
  const std::size_t d = 2 * n_;
  data_.assign(grid_->num_points() * d * d, cplx(0.0));
}

TwoFormField::TwoFormField(GridPtr grid, const JRealTwoForm& constant)
    : TwoFormField(std::move(grid)) {
  if (constant.quaternionic_dim() != n_)
    throw DimensionError("constant two-form has the wrong dimension");
  for (std::size_t p = 0; p < size(); ++p) set(p, constant);
}

JRealTwoForm TwoFormField::at(std::size_t p) const {
  const int d = 2 * n_;
  SmallCMatrix m(d, d);
  const cplx* src = data_.data() + p * d * d;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) m(j, k) = src[j * d + k];
  JRealTwoForm f(n_);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) f.set(j, k, m(j, k));
  return f;
}

void TwoFormField::set(std::size_t p, const JRealTwoForm& form) {
  if (form.quaternionic_dim() != n_)
    throw DimensionError("two-form has the wrong dimension for this field");
  const int d = 2 * n_;
  cplx* dst = data_.data() + p * d * d;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) dst[j * d + k] = form(j, k);
}

double TwoFormField::max_j_reality_defect() const {
  double m = 0.0;
  for (std::size_t p = 0; p < size(); ++p) m = std::max(m, j_reality_defect(at(p)));
  return m;
}

HermitianField::HermitianField(GridPtr grid)
    : grid_(std::move(grid)), dim_(2 * grid_->n()) {
  data_.assign(grid_->num_points() * dim_ * dim_, cplx(0.0));
}

SmallCMatrix HermitianField::at(std::size_t p) const {
  SmallCMatrix m(dim_, dim_);
  const cplx* src = data_.data() + p * dim_ * dim_;
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < dim_; ++k) m(j, k) = src[j * dim_ + k];
  return m;
}

void HermitianField::set(std::size_t p, const SmallCMatrix& a) {
  cplx* dst = data_.data() + p * dim_ * dim_;
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < dim_; ++k) dst[j * dim_ + k] = a(j, k);
}

double HermitianField::max_hermiticity_defect() const {
  double m = 0.0;
  for (std::size_t p = 0; p < size(); ++p) m = std::max(m, hermiticity_defect(at(p)));
  return m;
}

PositivityError::PositivityError(const std::string& what, std::size_t point,
                                 std::vector<double> coordinates,
                                 double min_eigenvalue)
    : std::runtime_error(what),
      point_(point),
      coords_(std::move(coordinates)),
      min_eig_(min_eigenvalue) {}

void throw_positivity(const std::string& context, const TorusGrid& grid,
                      std::size_t point, double min_eig) {
  auto x = grid.coordinates(point);
  std::ostringstream os;
  os << context << ": form not strictly positive at grid point " << point
     << " (multi-index";
  for (int i : grid.multi_index(point)) os << ' ' << i;
  os << "), min eigenvalue " << min_eig;
  throw PositivityError(os.str(), point, std::move(x), min_eig);
}

// ---------------------------------------------------------------------------
// Pointwise kernels

JRealTwoForm del_delJ_from_hessian(const SmallCMatrix& hess) {
  const int n = static_cast<int>(hess.rows() / 2);
  const SmallCMatrix ht = hess * j_covector_table(n).cast<cplx>();
  JRealTwoForm out(n);
  for (int j = 0; j < 2 * n; ++j)
    for (int k = j + 1; k < 2 * n; ++k) out.set(j, k, ht(k, j) - ht(j, k));
  return out;
}

JRealTwoForm omega_tilde_from(const JRealTwoForm& omega_h, const JRealTwoForm& ddj) {
  const int n = omega_h.quaternionic_dim();
  JRealTwoForm out = omega_h;
  const double s1 = s1_standard(ddj);
  const double w = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i) out.add(2 * i, 2 * i + 1, w * s1);
  out -= w * ddj;
  return out;
}

JRealTwoForm reconstruct_del_delJ(const JRealTwoForm& omega_tilde,
                                  const JRealTwoForm& omega_h) {
  const int n = omega_h.quaternionic_dim();
  const JRealTwoForm omega = JRealTwoForm::standard(n);
  const double s1_h = s_m(omega_h, omega, 1).real();
  const double s1_t = s_m(omega_tilde, omega, 1).real();
  return static_cast<double>(n - 1) * omega_h - s1_h * omega + s1_t * omega -
         static_cast<double>(n - 1) * omega_tilde;
}

SmallCMatrix one_one_form_metric(const JRealTwoForm& alpha) {
  const int n = alpha.quaternionic_dim();
  const int h = 2 * n;
  const int r = 4 * n;
  // (1,0)-parts of the real coordinate vectors: d/dx^j -> e_j, d/dy^j -> i e_j.
  Eigen::MatrixXcd xi = Eigen::MatrixXcd::Zero(h, r);
  for (int j = 0; j < h; ++j) {
    xi(j, j) = 1.0;
    xi(j, h + j) = cplx(0.0, 1.0);
  }
  // g(X, Y) = Re alpha(X^{1,0}, J Y^{0,1}); J on (0,1)-vectors is T.
  const Eigen::MatrixXcd t = j_covector_table(n).cast<cplx>();
  const Eigen::MatrixXcd a = alpha.matrix();
  const Eigen::MatrixXd g = (xi.transpose() * a * t * xi.conjugate()).real();
  // I d/dx^j = d/dy^j, I d/dy^j = -d/dx^j.
  Eigen::MatrixXd imat = Eigen::MatrixXd::Zero(r, r);
  for (int j = 0; j < h; ++j) {
    imat(h + j, j) = 1.0;
    imat(j, h + j) = -1.0;
  }
  const Eigen::MatrixXd w = imat.transpose() * g;  // omega(X_a, X_b)
  // a_{j kbar} = -i omega(d_j, dbar_k)
  SmallCMatrix out(h, h);
  const cplx i1(0.0, 1.0);
  for (int j = 0; j < h; ++j)
    for (int k = 0; k < h; ++k) {
      const cplx val = 0.25 * (w(j, k) + i1 * w(j, h + k) - i1 * w(h + j, k) +
                               w(h + j, h + k));
      out(j, k) = -i1 * val;
    }
  return out;
}

SmallCMatrix j_on_one_one(const SmallCMatrix& hmat) {
  // J(dz^j ^ dzbar^k) = J dz^j ^ J dzbar^k = -sum T_ja T_kb dz^b ^ dzbar^a
  const int n = static_cast<int>(hmat.rows() / 2);
  const SmallCMatrix t = j_covector_table(n).cast<cplx>();
  return -(t.transpose() * hmat * t).transpose();
}

ExteriorElement linearization_form(const JRealTwoForm& omega_tilde) {
  const int n = omega_tilde.quaternionic_dim();
  const ExteriorElement om = JRealTwoForm::standard(n).to_exterior();
  const ExteriorElement om_nm1 = om.power(n - 1);
  const cplx om_top = wedge(om_nm1, om).top();
  const ExteriorElement ot_nm1 = omega_tilde.to_exterior().power(n - 1);
  const cplx s_nm1 = static_cast<double>(n) * wedge(ot_nm1, om).top() / om_top;
  const double w = static_cast<double>(n) / (n - 1);
  return w * (s_nm1 * om_nm1 - ot_nm1);
}

double linearized_quotient(const JRealTwoForm& omega_tilde, const JRealTwoForm& chi) {
  const int n = omega_tilde.quaternionic_dim();
  const ExteriorElement a = linearization_form(omega_tilde);
  const ExteriorElement ot = omega_tilde.to_exterior();
  const cplx den = ot.power(n).top();
  return (wedge(a, chi.to_exterior()).top() / den).real();
}

// ---------------------------------------------------------------------------
// Field operators

std::vector<ComplexField> d_J(const ScalarField& u) {
  const int n = u.grid()->n();
  const int h = 2 * n;
  const RealDerivatives d = differentiate(u, false);
  const SmallRMatrix t = j_covector_table(n);
  std::vector<ComplexField> out(h, ComplexField{u.grid(), std::vector<cplx>(u.size())});
  for (std::size_t p = 0; p < u.size(); ++p) {
    for (int m = 0; m < h; ++m) {
      cplx s = 0.0;
      for (int l = 0; l < h; ++l) {
        if (t(l, m) == 0.0) continue;
        const cplx ubar_l = 0.5 * cplx(d.d(l, p), d.d(h + l, p));
        s -= ubar_l * t(l, m);
      }
      out[m].values[p] = s;
    }
  }
  return out;
}

TwoFormField del_delJ(const ScalarField& u) {
  const RealDerivatives d = differentiate(u, true);
  TwoFormField out(u.grid());
  const auto np = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < np; ++p)
    out.set(p, del_delJ_from_hessian(complex_hessian(d, p)));
  return out;
}

ScalarField s1_field(const TwoFormField& chi) {
  ScalarField out(chi.grid());
  for (std::size_t p = 0; p < chi.size(); ++p) out[p] = s1_standard(chi.at(p));
  return out;
}

TwoFormField omega_tilde(const ScalarField& u, const TwoFormField& omega_h) {
  const RealDerivatives d = differentiate(u, true);
  TwoFormField out(u.grid());
  const auto np = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < np; ++p)
    out.set(p, omega_tilde_from(omega_h.at(p),
                                del_delJ_from_hessian(complex_hessian(d, p))));
  return out;
}

TwoFormField build_omega_h(double c, const TrigPolySpec& rho, const GridPtr& grid) {
  if (!(c > 0.0)) throw std::invalid_argument("Omega_h scale c must be positive");
  const int n = grid->n();
  const ScalarField rho_field = sample(rho, grid);
  const TwoFormField ddj = del_delJ(rho_field);
  const JRealTwoForm base = c * JRealTwoForm::standard(n);
  TwoFormField out(grid);
  for (std::size_t p = 0; p < out.size(); ++p) {
    const JRealTwoForm form = base + ddj.at(p);
    const double lam = min_positivity_eigenvalue(form);
    if (!(lam > 1e-10)) throw_positivity("build_omega_h", *grid, p, lam);
    out.set(p, form);
  }
  return out;
}

namespace {

// Second derivatives indexed by real coordinate, null for inactive ones.
struct HessianAccess {
  explicit HessianAccess(const RealDerivatives& d) : r(4 * d.grid->n()) {
    table.assign(r * r, nullptr);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        const int ia = d.grid->axis_of(a);
        const int ib = d.grid->axis_of(b);
        if (ia >= 0 && ib >= 0)
          table[a * r + b] =
              d.second[RealDerivatives::pair_index(ia, ib, d.grid->num_active())].values().data();
      }
  }
  double operator()(int a, int b, std::size_t p) const {
    const double* v = table[a * r + b];
    return v ? v[p] : 0.0;
  }
  int r;
  std::vector<const double*> table;
};

struct PointResult {
  double logratio;
  double min_eig;
  double kappa;
  double imag_ratio;
  double eta;
};

// Hot-loop kernel on fixed-size matrices. With H_{jk} = u_{j kbar} and the
// positivity matrix M(alpha) = A T, M(dd_J u) = H + T^T conj(H) T, so
// M(Ot) = M(Omega_h) + (tr H I - H - T^T conj(H) T) / (n - 1). The
// Pfaffian is taken of Ot = M(Ot) T^{-1} = -M(Ot) T.
template <int D>
PointResult rhs_kernel(const HessianAccess& dd, const cplx* oh, std::size_t p) {
  using Mat = Eigen::Matrix<cplx, D, D>;
  constexpr int n = D / 2;
  Mat h;
  for (int j = 0; j < D; ++j)
    for (int k = j; k < D; ++k) {
      const double re = dd(j, k, p) + dd(D + j, D + k, p);
      const double im = dd(j, D + k, p) - dd(D + j, k, p);
      h(j, k) = 0.25 * cplx(re, im);
      h(k, j) = std::conj(h(j, k));
    }
  const double tr = h.trace().real();

  // X -> X T: column 2i <- column 2i+1, column 2i+1 <- -column 2i.
  auto times_t = [](const Mat& x) {
    Mat y;
    for (int i = 0; i < n; ++i) {
      y.col(2 * i) = x.col(2 * i + 1);
      y.col(2 * i + 1) = -x.col(2 * i);
    }
    return y;
  };
  // X -> T^T X: row 2i <- row 2i+1, row 2i+1 <- -row 2i.
  auto t_transpose_times = [](const Mat& x) {
    Mat y;
    for (int i = 0; i < n; ++i) {
      y.row(2 * i) = x.row(2 * i + 1);
      y.row(2 * i + 1) = -x.row(2 * i);
    }
    return y;
  };

  const Mat a_h = Eigen::Map<const Eigen::Matrix<cplx, D, D, Eigen::RowMajor>>(oh);
  const Mat m_ddj = h + t_transpose_times(times_t(h.conjugate()));
  const Mat m = times_t(a_h) + (tr * Mat::Identity() - m_ddj) / static_cast<double>(n - 1);

  PointResult r;
  r.eta = tr;
  double l_min, kappa;
  if constexpr (n == 2) {
    const double s = 0.5 * m.trace().real();
    const double q = 0.5 * m.squaredNorm();
    const double rad = 0.5 * std::sqrt(std::max(0.0, 2.0 * q - s * s));
    const double l1 = 0.5 * s - rad, l2 = 0.5 * s + rad;
    l_min = l1;
    kappa = 1.0 / l1 + 1.0 / l2;
  } else {
    const Mat herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(herm, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    l_min = 0.5 * (ev(0) + ev(1));
    kappa = 0.0;
    for (int i = 0; i < n; ++i) kappa += 2.0 / (ev(2 * i) + ev(2 * i + 1));
  }
  r.min_eig = l_min;
  r.kappa = kappa;

  const Mat ot = -times_t(m);
  cplx pf;
  if constexpr (n == 2) {
    pf = ot(0, 1) * ot(2, 3) - ot(0, 2) * ot(1, 3) + ot(0, 3) * ot(1, 2);
  } else {
    pf = pfaffian(SmallCMatrix(ot));
  }
  r.imag_ratio = std::abs(pf) > 0.0 ? std::abs(pf.imag()) / std::abs(pf) : 0.0;
  r.logratio = pf.real() > 0.0 ? std::log(pf.real()) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

using KernelFn = PointResult (*)(const HessianAccess&, const cplx*, std::size_t);

KernelFn kernel_for(int n) {
  switch (n) {
    case 2:
      return &rhs_kernel<4>;
    case 3:
      return &rhs_kernel<6>;
    case 4:
      return &rhs_kernel<8>;
    default:
      throw DimensionError("flow right-hand side needs 2 <= n <= 4");
  }
}

}  // namespace

RhsEvaluation evaluate_rhs(const ScalarField& u, const TwoFormField& omega_h,
                           const ScalarField& f) {
  const GridPtr& grid = u.grid();
  const int n = grid->n();
  const std::size_t np = u.size();
  if (omega_h.size() != np || f.size() != np)
    throw DimensionError("evaluate_rhs: fields live on different grids");
  const RealDerivatives d = differentiate(u, true);
  const HessianAccess dd(d);
  const KernelFn kernel = kernel_for(n);
  // Pf(Omega) = 1 for the standard form, so the kernel's Pfaffian is the ratio.

  RhsEvaluation r;
  r.ut = ScalarField(grid);
  std::vector<double> min_eig(np), kappa(np), imag_ratio(np), beta_v(np), eta_v(np);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(np); ++ip) {
    const auto p = static_cast<std::size_t>(ip);
    const PointResult k = kernel(dd, omega_h.block(p), p);
    min_eig[p] = k.min_eig;
    kappa[p] = k.kappa;
    imag_ratio[p] = k.imag_ratio;
    r.ut[p] = k.logratio - f[p];
    double g2 = 0.0;
    for (const auto& g : d.first) g2 += g[p] * g[p];
    beta_v[p] = 0.25 * g2;
    eta_v[p] = k.eta;
  }

  r.min_eig = min_eig[0];
  r.argmin = 0;
  r.kappa = kappa[0];
  r.max_beta = beta_v[0];
  r.max_eta = eta_v[0];
  for (std::size_t p = 0; p < np; ++p) {
    if (min_eig[p] < r.min_eig) {
      r.min_eig = min_eig[p];
      r.argmin = p;
    }
    r.kappa = std::max(r.kappa, kappa[p]);
    r.max_imag_ratio = std::max(r.max_imag_ratio, imag_ratio[p]);
    r.max_beta = std::max(r.max_beta, beta_v[p]);
    r.max_eta = std::max(r.max_eta, eta_v[p]);
  }
  r.positive = r.min_eig > 0.0;
  r.finite = r.ut.all_finite();
  r.spectral_tail = d.spectral_tail;
  return r;
}

ScalarField flow_rhs(const ScalarField& u, const TwoFormField& omega_h,
                     const ScalarField& f) {
  RhsEvaluation r = evaluate_rhs(u, omega_h, f);
  if (!r.positive || !r.finite)
    throw_positivity("flow_rhs", *u.grid(), r.argmin, r.min_eig);
  return std::move(r.ut);
}

ScalarField beta(const ScalarField& u) {
  const RealDerivatives d = differentiate(u, false);
  ScalarField out(u.grid());
  for (std::size_t p = 0; p < u.size(); ++p) {
    double s = 0.0;
    for (const auto& g : d.first) s += g[p] * g[p];
    out[p] = 0.25 * s;
  }
  return out;
}

ScalarField beta_wedge(const ScalarField& u) {
  const int n = u.grid()->n();
  const int h = 2 * n;
  const RealDerivatives d = differentiate(u, false);
  const auto dj = d_J(u);
  const ExteriorElement om = JRealTwoForm::standard(n).to_exterior();
  const ExteriorElement om_nm1 = om.power(n - 1);
  const cplx om_top = wedge(om_nm1, om).top();
  ScalarField out(u.grid());
  std::vector<cplx> du(h), dju(h);
  for (std::size_t p = 0; p < u.size(); ++p) {
    const Eigen::VectorXcd g = holomorphic_gradient(d, p);
    for (int j = 0; j < h; ++j) {
      du[j] = g(j);
      dju[j] = dj[j].values[p];
    }
    const ExteriorElement chi = wedge(ExteriorElement::one_form(h, du),
                                      ExteriorElement::one_form(h, dju));
    out[p] = (static_cast<double>(n) * wedge(chi, om_nm1).top() / om_top).real();
  }
  return out;
}

ScalarField eta(const ScalarField& u) { return s1_field(del_delJ(u)); }

ScalarField apply_linearized(const ScalarField& u, const ScalarField& v,
                             const TwoFormField& omega_h) {
  const TwoFormField ot = omega_tilde(u, omega_h);
  const TwoFormField ddv = del_delJ(v);
  ScalarField out(u.grid());
  const auto np = static_cast<std::ptrdiff_t>(u.size());
  std::vector<double> lam(u.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ip = 0; ip < np; ++ip) {
    const auto p = static_cast<std::size_t>(ip);
    const JRealTwoForm form = ot.at(p);
    lam[p] = min_positivity_eigenvalue(form);
    out[p] = linearized_quotient(form, ddv.at(p));
  }
  for (std::size_t p = 0; p < u.size(); ++p)
    if (!(lam[p] > 0.0)) throw_positivity("apply_linearized", *u.grid(), p, lam[p]);
  return out;
}

HermitianField omega_u(const ScalarField& u, const TwoFormField& omega_h) {
  const TwoFormField ot = omega_tilde(u, omega_h);
  HermitianField out(u.grid());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const JRealTwoForm form = ot.at(p);
    const double lam = min_positivity_eigenvalue(form);
    if (!(lam > 0.0)) throw_positivity("omega_u", *u.grid(), p, lam);
    out.set(p, one_one_form_metric(form));
  }
  return out;
}

HermitianField omega_u_explicit(const ScalarField& u, const TwoFormField& omega_h) {
  const int n = u.grid()->n();
  const int h = 2 * n;
  const RealDerivatives d = differentiate(u, true);
  const SmallCMatrix omega_std = 0.5 * SmallCMatrix::Identity(h, h);
  HermitianField out(u.grid());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const SmallCMatrix hess = complex_hessian(d, p);  // i dd-bar u <-> hess
    const double s1 = hess.trace().real();  // S_1(dd_J u) = sum_k u_{k kbar}
    const SmallCMatrix omega_h_p = one_one_form_metric(omega_h.at(p));
    const SmallCMatrix correction = 0.5 * (hess - j_on_one_one(hess));
    out.set(p, omega_h_p + (s1 * omega_std - correction) / static_cast<double>(n - 1));
  }
  return out;
}

}  // namespace qmflow
