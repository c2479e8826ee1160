#include <doctest.h>

#include "exterior.hpp"
#include "verification.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace qmflow;

namespace {

// Recursive expansion along the first row.
cplx pfaffian_oracle(const Eigen::MatrixXcd& a) {
  const int d = static_cast<int>(a.rows());
  if (d == 0) return 1.0;
  if (d % 2) return 0.0;
  cplx s = 0.0;
  for (int j = 1; j < d; ++j) {
    std::vector<int> keep;
    for (int k = 1; k < d; ++k)
      if (k != j) keep.push_back(k);
    Eigen::MatrixXcd minor(d - 2, d - 2);
    for (int r = 0; r < d - 2; ++r)
      for (int c = 0; c < d - 2; ++c) minor(r, c) = a(keep[r], keep[c]);
    const double sign = (j % 2) ? 1.0 : -1.0;
    s += sign * a(0, j) * pfaffian_oracle(minor);
  }
  return s;
}

int permutation_sign(std::vector<int> p) {
  int sign = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) sign = -sign;
  return sign;
}

// Coefficient of dz^i ^ dz^j ^ dz^k ^ dz^l (sorted) in alpha ^ beta:
// 1/4 sum over orderings sgn(s) alpha_{s0 s1} beta_{s2 s3}.
cplx wedge_oracle(const SmallCMatrix& a, const SmallCMatrix& b, std::vector<int> idx) {
  std::vector<int> perm(4);
  std::iota(perm.begin(), perm.end(), 0);
  cplx s = 0.0;
  do {
    const int sg = permutation_sign(perm);
    s += static_cast<double>(sg) * a(idx[perm[0]], idx[perm[1]]) * b(idx[perm[2]], idx[perm[3]]);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 0.25 * s;
}

SmallCMatrix random_antisym(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  SmallCMatrix a = SmallCMatrix::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      a(j, k) = cplx(g(rng), g(rng));
      a(k, j) = -a(j, k);
    }
  return a;
}

}  // namespace

TEST_CASE("wedge of disjoint and overlapping monomials") {
  const auto a = ExteriorElement::monomial(4, 0b0011);
  const auto b = ExteriorElement::monomial(4, 0b1100);
  CHECK(wedge(a, b).coeff(0b1111) == cplx(1.0));
  const auto c = ExteriorElement::monomial(4, 0b1001);
  CHECK(wedge(a, c).support_size() == 0);
  CHECK_THROWS_AS(wedge(a, ExteriorElement::monomial(6, 0b11)), DimensionError);
}

TEST_CASE("wedge of random two-forms matches the permutation expansion") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const SmallCMatrix a = random_antisym(rng, 6);
    const SmallCMatrix b = random_antisym(rng, 6);
    const auto w = wedge(JRealTwoForm::from_matrix(a).to_exterior(),
                         JRealTwoForm::from_matrix(b).to_exterior());
    CHECK(w.is_even());
    for (std::uint32_t mask = 0; mask < 64; ++mask) {
      if (__builtin_popcount(mask) != 4) continue;
      std::vector<int> idx;
      for (int g = 0; g < 6; ++g)
        if (mask & (1u << g)) idx.push_back(g);
      CHECK(std::abs(w.coeff(mask) - wedge_oracle(a, b, idx)) < 1e-12);
    }
    // graded commutativity for even elements
    const auto w2 = wedge(JRealTwoForm::from_matrix(b).to_exterior(),
                          JRealTwoForm::from_matrix(a).to_exterior());
    CHECK((w - w2).max_abs_coeff() < 1e-14);
  }
}

TEST_CASE("pfaffian examples") {
  for (int n = 2; n <= 4; ++n) CHECK(std::abs(pfaffian(JRealTwoForm::standard(n)) - 1.0) < 1e-15);

  std::mt19937_64 rng(3);
  const SmallCMatrix a = random_antisym(rng, 4);
  const cplx expected = a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
  CHECK(std::abs(pfaffian(a) - expected) < 1e-14);

  for (int trial = 0; trial < 10; ++trial) {
    const SmallCMatrix b = random_antisym(rng, 6);
    const Eigen::MatrixXcd full = b;
    const cplx pf = pfaffian(b);
    CHECK(std::abs(pf - pfaffian_oracle(full)) < 1e-12 * std::max(1.0, std::abs(pf)));
    const cplx det = full.determinant();
    CHECK(std::abs(pf * pf - det) <= 1e-12 * std::max(1.0, std::abs(det)));
  }
}

TEST_CASE("pfaffian normalization: alpha^n = n! Pf(alpha) top") {
  std::mt19937_64 rng(5);
  for (int n = 2; n <= 4; ++n) {
    const auto alpha = JRealTwoForm::from_matrix(random_antisym(rng, 2 * n));
    double fact = 1;
    for (int i = 2; i <= n; ++i) fact *= i;
    const cplx top = alpha.to_exterior().power(n).top();
    CHECK(std::abs(top - fact * pfaffian(alpha)) < 1e-11 * std::max(1.0, std::abs(top)));
  }
}

TEST_CASE("s_m examples") {
  const auto om = JRealTwoForm::standard(2);
  CHECK(std::abs(s_m(om, om, 1) - 2.0) < 1e-14);
  CHECK(std::abs(s_m(om, om, 2) - 1.0) < 1e-14);
  for (int n = 2; n <= 4; ++n)
    for (int m = 0; m <= n; ++m) {
      const auto o = JRealTwoForm::standard(n);
      CHECK(std::abs(s_m(o, o, m) - static_cast<double>(binomial(n, m))) < 1e-12);
    }
  const auto chi = JRealTwoForm::block_diagonal({2.0, 3.0});
  CHECK(std::abs(s_m(chi, om, 1) - 5.0) < 1e-14);
  CHECK(std::abs(s_m(chi, om, 2) - 6.0) < 1e-14);
  std::mt19937_64 rng(1);
  CHECK(std::abs(s_m(random_j_real_form(rng, 3), JRealTwoForm::standard(3), 0) - 1.0) < 1e-15);

  // elementary symmetric polynomials of the block values
  const auto c3 = JRealTwoForm::block_diagonal({1.5, -2.0, 0.5});
  const auto o3 = JRealTwoForm::standard(3);
  CHECK(std::abs(s_m(c3, o3, 1) - 0.0) < 1e-14);
  CHECK(std::abs(s_m(c3, o3, 2) - (-3.0 + 0.75 - 1.0)) < 1e-14);
  CHECK(std::abs(s_m(c3, o3, 3) - (-1.5)) < 1e-14);

  CHECK_THROWS_AS(s_m(om, om, 3), std::invalid_argument);
  CHECK_THROWS_AS(s_m(om, om, -1), std::invalid_argument);
  CHECK_THROWS_AS(s_m(om, JRealTwoForm(2), 1), DegenerateFormError);
}

TEST_CASE("s_m of J-real forms is real") {
  std::mt19937_64 rng(9);
  for (int n = 2; n <= 4; ++n)
    for (int trial = 0; trial < 5; ++trial) {
      const auto chi = random_j_real_form(rng, n);
      for (int m = 0; m <= n; ++m) {
        const cplx s = s_m(chi, JRealTwoForm::standard(n), m);
        CHECK(std::abs(s.imag()) <= 1e-12 * (1.0 + std::abs(s)));
      }
    }
}

TEST_CASE("top_quotient examples and dual paths") {
  const auto om = JRealTwoForm::standard(2);
  CHECK(std::abs(top_quotient(om, om) - 1.0) < 1e-15);
  CHECK(std::abs(top_quotient(2.0 * om, om) - 4.0) < 1e-14);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto alpha = random_j_real_form(rng, 2);
    const cplx a = top_quotient(alpha, om);
    const cplx b = top_quotient_expanded(alpha, om);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
  }
  CHECK_THROWS_AS(top_quotient(om, JRealTwoForm(2)), DegenerateFormError);
  CHECK_THROWS_AS(top_quotient_expanded(om, JRealTwoForm(2)), DegenerateFormError);
}

TEST_CASE("positivity matrix and strict positivity") {
  for (int n = 2; n <= 4; ++n) {
    const SmallCMatrix m = positivity_matrix(JRealTwoForm::standard(n));
    CHECK(m == SmallCMatrix::Identity(2 * n, 2 * n));
    CHECK(positivity_matrix(-1.0 * JRealTwoForm::standard(n)) ==
          SmallCMatrix(-SmallCMatrix::Identity(2 * n, 2 * n)));
  }
  const auto mixed = JRealTwoForm::block_diagonal({1.0, -0.5});
  const SmallCMatrix pm = positivity_matrix(mixed);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es{Eigen::MatrixXcd(pm)};
  CHECK(es.eigenvalues()(0) == doctest::Approx(-0.5));
  CHECK(es.eigenvalues()(1) == doctest::Approx(-0.5));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(3) == doctest::Approx(1.0));
  CHECK_FALSE(is_strictly_positive(mixed, 0.0));

  CHECK(is_strictly_positive(JRealTwoForm::standard(2), 0.0));
  JRealTwoForm dented = JRealTwoForm::standard(2);
  dented.add(0, 1, -1.5);
  CHECK_FALSE(is_strictly_positive(dented, 0.0));
  CHECK_FALSE(is_strictly_positive(JRealTwoForm::standard(2), 1.5));
  CHECK_FALSE(is_strictly_positive(-1.0 * JRealTwoForm::standard(3), 0.0));

  // random J-real forms: Hermitian positivity matrix, eigenvalues in pairs
  std::mt19937_64 rng(4);
  for (int n = 2; n <= 4; ++n) {
    const auto a = random_j_real_form(rng, n, 3.0);
    const SmallCMatrix m = positivity_matrix(a);
    CHECK(hermiticity_defect(m) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> oracle{Eigen::MatrixXcd(m)};
    const auto lam = quaternionic_eigenvalues(a);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(oracle.eigenvalues()(2 * i) - lam[i]) < 1e-10);
      CHECK(std::abs(oracle.eigenvalues()(2 * i + 1) - lam[i]) < 1e-10);
    }
  }
}

TEST_CASE("J-reality defect") {
  CHECK(j_reality_defect(JRealTwoForm::standard(2)) == 0.0);
  JRealTwoForm single(2);
  single.set(0, 2, 1.0);
  CHECK(j_reality_defect(single) > 0.5);
  std::mt19937_64 rng(8);
  CHECK(j_reality_defect(random_j_real_form(rng, 3)) < 1e-14);
  // a non-J-real form has a non-Hermitian positivity matrix
  CHECK(hermiticity_defect(positivity_matrix(single)) > 0.5);
}
