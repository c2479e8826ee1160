// Flat hyperKaehler torus T^{4n} = R^{4n} / (2 pi Z)^{4n} with the constant
// hypercomplex structure, periodic grids over a subset of the real
// coordinates, and scalar fields sampled on them.
//
// Real coordinates x^0 .. x^{4n-1}; holomorphic coordinates
// z^j = x^j + i x^{2n+j} for j < 2n.

#pragma once

#include "exterior.hpp"

#include <memory>
#include <vector>

namespace qmflow {

struct TorusModel {
  int n = 0;
  SmallRMatrix j_table;  // J dz^j = sum_k T_jk dzbar^k
  JRealTwoForm omega;    // standard Omega

  int holomorphic_dim() const { return 2 * n; }
  int real_dim() const { return 4 * n; }

  // J on (1,0)-covectors, written as coefficients on dzbar.
  Eigen::VectorXcd apply_j_to_covector(const Eigen::VectorXcd& dz_coeffs) const;
  // J on (0,1)-vectors, written as coefficients on d/dz.
  Eigen::VectorXcd apply_j_to_antiholomorphic_vector(
      const Eigen::VectorXcd& dbar_coeffs) const;
};

// 2 <= n <= 4. n = 1 is rejected because the 1/(n-1) factor in Omega-tilde
// is undefined.
TorusModel build_model(int n);

class TorusGrid {
 public:
  TorusGrid(int n, std::vector<int> active_dims, std::vector<int> sizes);

  // Every real coordinate active with `size` points (full-dimension mode).
  static std::shared_ptr<const TorusGrid> full(int n, int size);
  static std::shared_ptr<const TorusGrid> make(int n,
                                               std::vector<int> active_dims,
                                               std::vector<int> sizes);

  int n() const { return n_; }
  const std::vector<int>& active_dims() const { return active_; }
  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t num_active() const { return active_.size(); }
  std::size_t num_points() const { return points_; }

  double spacing(std::size_t axis) const;
  double min_spacing() const;

  // Position of real coordinate `dim` in active_dims, or -1.
  int axis_of(int dim) const;

  // Row-major multi-index over the active axes (last axis fastest).
  std::vector<int> multi_index(std::size_t flat) const;
  // Full 4n-vector of coordinates for a grid point; inactive coordinates 0.
  std::vector<double> coordinates(std::size_t flat) const;

  bool same_shape(const TorusGrid& other) const;

 private:
  int n_;
  std::vector<int> active_;
  std::vector<int> sizes_;
  std::size_t points_ = 1;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double value = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double mean() const;
  double max() const;
  double min() const;
  double max_abs() const;
  double oscillation() const { return max() - min(); }
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double c);

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
double max_abs_diff(const ScalarField& a, const ScalarField& b);

struct ComplexField {
  GridPtr grid;
  std::vector<cplx> values;
};

// Term amplitude * cos(<k, x> + phase); k has one entry per active axis.
struct TrigTerm {
  std::vector<int> k;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct TrigPolySpec {
  std::vector<TrigTerm> terms;

  static TrigPolySpec constant(double c);
  TrigPolySpec& add(std::vector<int> k, double amplitude, double phase = 0.0);

  double evaluate(const std::vector<double>& active_coords) const;
  // Analytic derivatives in active-axis coordinates.
  double derivative(const std::vector<double>& active_coords, int axis) const;
  double second_derivative(const std::vector<double>& active_coords, int a,
                           int b) const;
  double max_wavenumber(std::size_t axis) const;
};

class BandLimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws BandLimitError when some |k| >= size/2 on an axis or the wavevector
// length does not match the grid.
void check_band_limit(const TrigPolySpec& spec, const TorusGrid& grid);
ScalarField sample(const TrigPolySpec& spec, const GridPtr& grid);

// Active-axis coordinates of a grid point.
std::vector<double> active_coordinates(const TorusGrid& grid, std::size_t flat);

}  // namespace qmflow
