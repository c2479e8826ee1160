// Pointwise multilinear algebra for (2,0)-forms on C^{2n}: an exact
// subset-indexed exterior algebra, Pfaffians, the S_m operators, positivity
// in the quaternionic sense and the J-reality test.
//
// Conventions (fixed here and calibrated by tests):
//   * holomorphic generators dz^0 .. dz^{2n-1}; quaternionic line i is
//     span(dz^{2i}, dz^{2i+1});
//   * a (2,0)-form alpha is stored as the full antisymmetric matrix A with
//     alpha = sum_{j<k} A_jk dz^j ^ dz^k;
//   * J acts on covectors by J dz^j = sum_k T_jk dzbar^k, with T the real
//     block matrix [[0,-1],[1,0]] on every quaternionic line.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmflow {

using cplx = std::complex<double>;

inline constexpr int kMaxQuaternionicDim = 4;
inline constexpr int kMaxHolomorphicDim = 2 * kMaxQuaternionicDim;

using SmallCMatrix =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxHolomorphicDim,
                  kMaxHolomorphicDim>;
using SmallRMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxHolomorphicDim,
                  kMaxHolomorphicDim>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateFormError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Element of the exterior algebra over `generators` anticommuting symbols,
// stored densely by bitmask. Up to 16 generators (dz and dzbar for n <= 4).
class ExteriorElement {
 public:
  explicit ExteriorElement(int generators);

  static ExteriorElement scalar(int generators, cplx value);
  static ExteriorElement monomial(int generators, std::uint32_t mask,
                                  cplx coeff = 1.0);
  // sum_j c_j dz^{offset + j}
  static ExteriorElement one_form(int generators, const std::vector<cplx>& c,
                                  int offset = 0);

  int generators() const { return generators_; }
  std::uint32_t top_mask() const { return (1u << generators_) - 1u; }

  cplx coeff(std::uint32_t mask) const { return coeffs_.at(mask); }
  cplx top() const { return coeffs_[top_mask()]; }
  void add(std::uint32_t mask, cplx value) { coeffs_.at(mask) += value; }

  // True when every nonzero coefficient sits on a subset of even size.
  bool is_even() const;
  // Number of nonzero coefficients.
  std::size_t support_size() const;
  double max_abs_coeff() const;

  ExteriorElement& operator+=(const ExteriorElement& other);
  ExteriorElement& operator-=(const ExteriorElement& other);
  ExteriorElement& operator*=(cplx s);

  // k-fold wedge power; power(0) is the unit.
  ExteriorElement power(int k) const;

  friend ExteriorElement wedge(const ExteriorElement& a,
                               const ExteriorElement& b);

 private:
  int generators_;
  std::vector<cplx> coeffs_;
};

ExteriorElement operator+(ExteriorElement a, const ExteriorElement& b);
ExteriorElement operator-(ExteriorElement a, const ExteriorElement& b);
ExteriorElement operator*(cplx s, ExteriorElement a);

// Sign of the permutation that sorts the concatenation of two disjoint
// ordered index sets (given as bitmasks) into increasing order.
int merge_sign(std::uint32_t a, std::uint32_t b);

// A (2,0)-form at a point, stored as an antisymmetric 2n x 2n matrix.
class JRealTwoForm {
 public:
  JRealTwoForm() = default;
  // Zero form on C^{2n}.
  explicit JRealTwoForm(int n);

  // Omega = sum_i dz^{2i} ^ dz^{2i+1}.
  static JRealTwoForm standard(int n);
  // sum_i values[i] dz^{2i} ^ dz^{2i+1}.
  static JRealTwoForm block_diagonal(const std::vector<double>& values);
  // Antisymmetric part of an arbitrary square matrix, (M - M^T)/2.
  static JRealTwoForm from_matrix(const SmallCMatrix& m);

  int quaternionic_dim() const { return n_; }
  int holomorphic_dim() const { return 2 * n_; }

  cplx operator()(int j, int k) const { return a_(j, k); }
  // Sets A_jk and A_kj = -A_jk.
  void set(int j, int k, cplx value);
  void add(int j, int k, cplx value);

  const SmallCMatrix& matrix() const { return a_; }
  double max_abs() const;

  JRealTwoForm& operator+=(const JRealTwoForm& o);
  JRealTwoForm& operator-=(const JRealTwoForm& o);
  JRealTwoForm& operator*=(double s);

  // Embedding into the exterior algebra over `generators` symbols, the
  // holomorphic generators starting at `offset`. conj=true embeds alpha-bar.
  ExteriorElement to_exterior(int generators, int offset = 0,
                              bool conj = false) const;
  ExteriorElement to_exterior() const {
    return to_exterior(holomorphic_dim());
  }

 private:
  int n_ = 0;
  SmallCMatrix a_;
};

JRealTwoForm operator+(JRealTwoForm a, const JRealTwoForm& b);
JRealTwoForm operator-(JRealTwoForm a, const JRealTwoForm& b);
JRealTwoForm operator*(double s, JRealTwoForm a);

// The real 2n x 2n matrix T with J dz^j = sum_k T_jk dzbar^k. The induced
// action on vectors is J dbar_k = sum_j T_jk d_j.
SmallRMatrix j_covector_table(int n);

// Pfaffian of an antisymmetric matrix (skew LTL^T elimination with
// pivoting). Pf^2 = det.
cplx pfaffian(const SmallCMatrix& a);
cplx pfaffian(const JRealTwoForm& alpha);

// alpha^n / Omega^n through Pfaffians.
cplx top_quotient(const JRealTwoForm& alpha, const JRealTwoForm& omega);
// The same quotient by exact exterior expansion.
cplx top_quotient_expanded(const JRealTwoForm& alpha,
                           const JRealTwoForm& omega);

// C(n,m) chi^m ^ Omega^{n-m} / Omega^n, by exterior expansion.
cplx s_m(const JRealTwoForm& chi, const JRealTwoForm& omega, int m);
// S_1 against the standard Omega: the sum of the block entries A_{2i,2i+1}.
double s1_standard(const JRealTwoForm& chi);

std::uint64_t binomial(int n, int k);

// M_jk = alpha(e_j, J ebar_k) = (A T)_jk.
SmallCMatrix positivity_matrix(const JRealTwoForm& alpha);
// Largest deviation of M from Hermitian.
double hermiticity_defect(const SmallCMatrix& m);

// The n quaternionic eigenvalues of the positivity matrix, ascending. The
// 2n complex eigenvalues of a J-real form come in equal pairs; each pair is
// reported once.
std::vector<double> quaternionic_eigenvalues(const JRealTwoForm& alpha);
double min_positivity_eigenvalue(const JRealTwoForm& alpha);

bool is_strictly_positive(const JRealTwoForm& alpha, double margin = 1e-10);

// || T^T A T - conj(A) ||_inf, i.e. the distance of J(alpha) from alpha-bar.
double j_reality_defect(const JRealTwoForm& alpha);
// Orthogonal projection onto J-real forms: (A + conj(T^T A T)) / 2.
JRealTwoForm j_real_part(const JRealTwoForm& alpha);

}  // namespace qmflow
