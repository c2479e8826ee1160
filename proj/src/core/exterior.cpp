#include "exterior.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>

namespace qmflow {

namespace {

constexpr int kMaxGenerators = 16;

void check_generators(int g) {
  if (g < 0 || g > kMaxGenerators)
    throw DimensionError("exterior algebra supports at most 16 generators, got " +
                         std::to_string(g));
}

void check_quaternionic_dim(int n) {
  if (n < 1 || n > kMaxQuaternionicDim)
    throw DimensionError("quaternionic dimension must be in [1, 4], got " +
                         std::to_string(n));
}

std::vector<std::uint32_t> nonzero_masks(const std::vector<cplx>& c) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t m = 0; m < c.size(); ++m)
    if (c[m] != cplx(0.0)) out.push_back(m);
  return out;
}

}  // namespace

int merge_sign(std::uint32_t a, std::uint32_t b) {
  // Count pairs (i in a, j in b) with i > j.
  int inversions = 0;
  while (b != 0) {
    const int j = std::countr_zero(b);
    b &= b - 1;
    const std::uint32_t above = (j >= 31) ? 0u : (a >> (j + 1));
    inversions += std::popcount(above);
  }
  return (inversions & 1) ? -1 : 1;
}

ExteriorElement::ExteriorElement(int generators) : generators_(generators) {
  check_generators(generators);
  coeffs_.assign(std::size_t{1} << generators, cplx(0.0));
}

ExteriorElement ExteriorElement::scalar(int generators, cplx value) {
  ExteriorElement e(generators);
  e.coeffs_[0] = value;
  return e;
}

ExteriorElement ExteriorElement::monomial(int generators, std::uint32_t mask,
                                          cplx coeff) {
  ExteriorElement e(generators);
  e.add(mask, coeff);
  return e;
}

ExteriorElement ExteriorElement::one_form(int generators,
                                          const std::vector<cplx>& c,
                                          int offset) {
  ExteriorElement e(generators);
  for (std::size_t j = 0; j < c.size(); ++j)
    e.add(1u << (offset + static_cast<int>(j)), c[j]);
  return e;
}

bool ExteriorElement::is_even() const {
  for (std::uint32_t m = 0; m < coeffs_.size(); ++m)
    if (coeffs_[m] != cplx(0.0) && (std::popcount(m) & 1)) return false;
  return true;
}

std::size_t ExteriorElement::support_size() const {
  return static_cast<std::size_t>(
      std::count_if(coeffs_.begin(), coeffs_.end(),
                    [](cplx c) { return c != cplx(0.0); }));
}

double ExteriorElement::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

ExteriorElement& ExteriorElement::operator+=(const ExteriorElement& other) {
  if (other.generators_ != generators_)
    throw DimensionError("exterior elements over different generator counts");
  for (std::size_t m = 0; m < coeffs_.size(); ++m) coeffs_[m] += other.coeffs_[m];
  return *this;
}

ExteriorElement& ExteriorElement::operator-=(const ExteriorElement& other) {
  if (other.generators_ != generators_)
    throw DimensionError("exterior elements over different generator counts");
  for (std::size_t m = 0; m < coeffs_.size(); ++m) coeffs_[m] -= other.coeffs_[m];
  return *this;
}

ExteriorElement& ExteriorElement::operator*=(cplx s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

ExteriorElement ExteriorElement::power(int k) const {
  if (k < 0) throw std::invalid_argument("negative wedge power");
  ExteriorElement result = scalar(generators_, 1.0);
  for (int i = 0; i < k; ++i) result = wedge(result, *this);
  return result;
}

ExteriorElement wedge(const ExteriorElement& a, const ExteriorElement& b) {
  if (a.generators_ != b.generators_)
    throw DimensionError("wedge of elements over " +
                         std::to_string(a.generators_) + " and " +
                         std::to_string(b.generators_) + " generators");
  ExteriorElement out(a.generators_);
  const auto na = nonzero_masks(a.coeffs_);
  const auto nb = nonzero_masks(b.coeffs_);
  for (const auto ma : na) {
    const cplx ca = a.coeffs_[ma];
    for (const auto mb : nb) {
      if (ma & mb) continue;
      const cplx term = ca * b.coeffs_[mb];
      out.coeffs_[ma | mb] += merge_sign(ma, mb) > 0 ? term : -term;
    }
  }
  return out;
}

ExteriorElement operator+(ExteriorElement a, const ExteriorElement& b) {
  a += b;
  return a;
}
ExteriorElement operator-(ExteriorElement a, const ExteriorElement& b) {
  a -= b;
  return a;
}
ExteriorElement operator*(cplx s, ExteriorElement a) {
  a *= s;
  return a;
}

// ---------------------------------------------------------------------------

JRealTwoForm::JRealTwoForm(int n) : n_(n) {
  check_quaternionic_dim(n);
  a_ = SmallCMatrix::Zero(2 * n, 2 * n);
}

JRealTwoForm JRealTwoForm::standard(int n) {
  JRealTwoForm f(n);
  for (int i = 0; i < n; ++i) f.set(2 * i, 2 * i + 1, 1.0);
  return f;
}

JRealTwoForm JRealTwoForm::block_diagonal(const std::vector<double>& values) {
  JRealTwoForm f(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    f.set(2 * static_cast<int>(i), 2 * static_cast<int>(i) + 1, values[i]);
  return f;
}

JRealTwoForm JRealTwoForm::from_matrix(const SmallCMatrix& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw DimensionError("two-form matrix must be square of even size");
  JRealTwoForm f(static_cast<int>(m.rows() / 2));
  f.a_ = 0.5 * (m - m.transpose());
  return f;
}

void JRealTwoForm::set(int j, int k, cplx value) {
  if (j == k) {
    if (value != cplx(0.0))
      throw std::invalid_argument("diagonal of a two-form must vanish");
    return;
  }
  a_(j, k) = value;
  a_(k, j) = -value;
}

void JRealTwoForm::add(int j, int k, cplx value) {
  if (j == k) return;
  a_(j, k) += value;
  a_(k, j) -= value;
}

double JRealTwoForm::max_abs() const {
  return a_.size() == 0 ? 0.0 : a_.cwiseAbs().maxCoeff();
}

JRealTwoForm& JRealTwoForm::operator+=(const JRealTwoForm& o) {
  if (o.n_ != n_) throw DimensionError("two-forms of different dimension");
  a_ += o.a_;
  return *this;
}
JRealTwoForm& JRealTwoForm::operator-=(const JRealTwoForm& o) {
  if (o.n_ != n_) throw DimensionError("two-forms of different dimension");
  a_ -= o.a_;
  return *this;
}
JRealTwoForm& JRealTwoForm::operator*=(double s) {
  a_ *= s;
  return *this;
}

JRealTwoForm operator+(JRealTwoForm a, const JRealTwoForm& b) {
  a += b;
  return a;
}
JRealTwoForm operator-(JRealTwoForm a, const JRealTwoForm& b) {
  a -= b;
  return a;
}
JRealTwoForm operator*(double s, JRealTwoForm a) {
  a *= s;
  return a;
}

ExteriorElement JRealTwoForm::to_exterior(int generators, int offset,
                                          bool conj) const {
  if (offset + holomorphic_dim() > generators)
    throw DimensionError("two-form does not fit the requested generator range");
  ExteriorElement e(generators);
  const int d = holomorphic_dim();
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      const cplx c = conj ? std::conj(a_(j, k)) : a_(j, k);
      if (c != cplx(0.0)) e.add((1u << (offset + j)) | (1u << (offset + k)), c);
    }
  return e;
}

// ---------------------------------------------------------------------------

SmallRMatrix j_covector_table(int n) {
  check_quaternionic_dim(n);
  SmallRMatrix t = SmallRMatrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    t(2 * i, 2 * i + 1) = -1.0;
    t(2 * i + 1, 2 * i) = 1.0;
  }
  return t;
}

cplx pfaffian(const SmallCMatrix& input) {
  const Eigen::Index d = input.rows();
  if (d != input.cols())
    throw DimensionError("Pfaffian of a non-square matrix");
  if (d % 2 != 0) return 0.0;
  SmallCMatrix a = input;
  cplx pf = 1.0;
  for (Eigen::Index k = 0; k + 1 < d; k += 2) {
    Eigen::Index pivot = k + 1;
    double best = std::abs(a(k + 1, k));
    for (Eigen::Index i = k + 2; i < d; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        pivot = i;
      }
    }
    if (pivot != k + 1) {
      a.row(k + 1).swap(a.row(pivot));
      a.col(k + 1).swap(a.col(pivot));
      pf = -pf;
    }
    if (a(k + 1, k) == cplx(0.0)) return 0.0;
    pf *= a(k, k + 1);
    if (k + 2 < d) {
      const cplx inv = 1.0 / a(k, k + 1);
      const Eigen::Index rest = d - k - 2;
      // Eliminate row/column k against the pivot pair (k, k+1).
      Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxHolomorphicDim, 1> tau =
          a.row(k).tail(rest).transpose() * inv;
      Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxHolomorphicDim, 1> col =
          a.col(k + 1).tail(rest);
      a.bottomRightCorner(rest, rest) +=
          tau * col.transpose() - col * tau.transpose();
    }
  }
  return pf;
}

cplx pfaffian(const JRealTwoForm& alpha) { return pfaffian(alpha.matrix()); }

cplx top_quotient(const JRealTwoForm& alpha, const JRealTwoForm& omega) {
  if (alpha.quaternionic_dim() != omega.quaternionic_dim())
    throw DimensionError("top_quotient: dimension mismatch");
  const cplx pf_omega = pfaffian(omega);
  if (std::abs(pf_omega) == 0.0)
    throw DegenerateFormError("top_quotient: reference form is degenerate");
  return pfaffian(alpha) / pf_omega;
}

cplx top_quotient_expanded(const JRealTwoForm& alpha,
                           const JRealTwoForm& omega) {
  if (alpha.quaternionic_dim() != omega.quaternionic_dim())
    throw DimensionError("top_quotient: dimension mismatch");
  const int n = alpha.quaternionic_dim();
  const cplx denom = omega.to_exterior().power(n).top();
  if (std::abs(denom) == 0.0)
    throw DegenerateFormError("top_quotient: reference form is degenerate");
  return alpha.to_exterior().power(n).top() / denom;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

cplx s_m(const JRealTwoForm& chi, const JRealTwoForm& omega, int m) {
  const int n = omega.quaternionic_dim();
  if (chi.quaternionic_dim() != n) throw DimensionError("s_m: dimension mismatch");
  if (m < 0 || m > n)
    throw std::invalid_argument("s_m: m must lie in [0, n], got " +
                                std::to_string(m));
  const ExteriorElement om = omega.to_exterior();
  const cplx denom = om.power(n).top();
  if (std::abs(denom) == 0.0)
    throw DegenerateFormError("s_m: reference form is degenerate");
  const cplx num = wedge(chi.to_exterior().power(m), om.power(n - m)).top();
  return static_cast<double>(binomial(n, m)) * num / denom;
}

double s1_standard(const JRealTwoForm& chi) {
  cplx s = 0.0;
  for (int i = 0; i < chi.quaternionic_dim(); ++i) s += chi(2 * i, 2 * i + 1);
  return s.real();
}

SmallCMatrix positivity_matrix(const JRealTwoForm& alpha) {
  const SmallRMatrix t = j_covector_table(alpha.quaternionic_dim());
  return alpha.matrix() * t.cast<cplx>();
}

double hermiticity_defect(const SmallCMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

std::vector<double> quaternionic_eigenvalues(const JRealTwoForm& alpha) {
  const int n = alpha.quaternionic_dim();
  const SmallCMatrix m = positivity_matrix(alpha);
  if (n == 2) {
    // Doubled spectrum {l1,l1,l2,l2}: tr M = 2(l1+l2), |M|_F^2 = 2(l1^2+l2^2).
    const double s = 0.5 * m.trace().real();
    const double q = 0.5 * m.squaredNorm();
    const double disc = std::max(0.0, 2.0 * q - s * s);
    const double r = 0.5 * std::sqrt(disc);
    return {0.5 * s - r, 0.5 * s + r};
  }
  const SmallCMatrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<SmallCMatrix> es(herm, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = 0.5 * (ev(2 * i) + ev(2 * i + 1));
  return out;
}

double min_positivity_eigenvalue(const JRealTwoForm& alpha) {
  return quaternionic_eigenvalues(alpha).front();
}

bool is_strictly_positive(const JRealTwoForm& alpha, double margin) {
  return min_positivity_eigenvalue(alpha) > margin;
}

double j_reality_defect(const JRealTwoForm& alpha) {
  const SmallCMatrix t = j_covector_table(alpha.quaternionic_dim()).cast<cplx>();
  const SmallCMatrix j_alpha = t.transpose() * alpha.matrix() * t;
  const SmallCMatrix diff = j_alpha - alpha.matrix().conjugate();
  return diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff();
}

JRealTwoForm j_real_part(const JRealTwoForm& alpha) {
  const SmallCMatrix t = j_covector_table(alpha.quaternionic_dim()).cast<cplx>();
  const SmallCMatrix j_alpha = t.transpose() * alpha.matrix() * t;
  return JRealTwoForm::from_matrix(0.5 * (alpha.matrix() + j_alpha.conjugate()));
}

}  // namespace qmflow
