// Fourier-multiplier derivatives of periodic fields (FFTW underneath).
//
// Nyquist handling on even grids: odd-order and mixed multipliers vanish on
// the Nyquist mode, pure second derivatives keep -k^2. No dealiasing.

#pragma once

#include "hk_model.hpp"

#include <optional>

namespace qmflow {

struct RealDerivatives {
  GridPtr grid;
  std::vector<ScalarField> first;   // one per active axis
  std::vector<ScalarField> second;  // packed upper triangle over active axes
  double spectral_tail = 0.0;

  // Derivatives indexed by real coordinate; zero for inactive coordinates.
  double d(int dim, std::size_t p) const;
  double dd(int dim_a, int dim_b, std::size_t p) const;

  static std::size_t pair_index(std::size_t a, std::size_t b, std::size_t naxes);
};

// First (and optionally second) spectral derivatives over the active axes.
RealDerivatives differentiate(const ScalarField& u, bool with_second = true);

// d/dz^k = (d/dx^k - i d/dx^{2n+k}) / 2, and the conjugate operator.
ComplexField partial_z(const ScalarField& u, int k);
ComplexField partial_zbar(const ScalarField& u, int k);

// Complex first and mixed second derivatives at one grid point:
// grad[j] = u_j, hess(j, k) = u_{j kbar}, hol_hess(j, k) = u_{jk}.
Eigen::VectorXcd holomorphic_gradient(const RealDerivatives& d, std::size_t p);
SmallCMatrix complex_hessian(const RealDerivatives& d, std::size_t p);
SmallCMatrix holomorphic_hessian(const RealDerivatives& d, std::size_t p);

// Fraction of the non-mean spectral energy in modes whose normalized
// wavenumber max_a |k_a| / (N_a / 2) exceeds 2/3.
double spectral_tail(const ScalarField& u);

}  // namespace qmflow
