#include "hk_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace qmflow {

TorusModel build_model(int n) {
  if (n == 1)
    throw DimensionError(
        "n = 1 is not supported: Omega-tilde carries a factor 1/(n-1)");
  if (n < 2 || n > kMaxQuaternionicDim)
    throw DimensionError("quaternionic dimension must be in [2, 4], got " +
                         std::to_string(n));
  TorusModel m;
  m.n = n;
  m.j_table = j_covector_table(n);
  m.omega = JRealTwoForm::standard(n);
  return m;
}

Eigen::VectorXcd TorusModel::apply_j_to_covector(
    const Eigen::VectorXcd& dz_coeffs) const {
  // J(sum c_j dz^j) = sum_k (sum_j c_j T_jk) dzbar^k
  return j_table.cast<cplx>().transpose() * dz_coeffs;
}

Eigen::VectorXcd TorusModel::apply_j_to_antiholomorphic_vector(
    const Eigen::VectorXcd& dbar_coeffs) const {
  // J(sum c_k dbar_k) = sum_j (sum_k T_jk c_k) d_j
  return j_table.cast<cplx>() * dbar_coeffs;
}

// ---------------------------------------------------------------------------

TorusGrid::TorusGrid(int n, std::vector<int> active_dims, std::vector<int> sizes)
    : n_(n), active_(std::move(active_dims)), sizes_(std::move(sizes)) {
  if (n < 1 || n > kMaxQuaternionicDim)
    throw DimensionError("grid: quaternionic dimension out of range");
  if (active_.size() != sizes_.size())
    throw std::invalid_argument("grid: active_dims and sizes differ in length");
  if (active_.empty())
    throw std::invalid_argument("grid: at least one active dimension required");
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i] < 0 || active_[i] >= 4 * n)
      throw std::invalid_argument("grid: active dimension " +
                                  std::to_string(active_[i]) + " outside [0, " +
                                  std::to_string(4 * n - 1) + "]");
    if (i > 0 && active_[i] <= active_[i - 1])
      throw std::invalid_argument("grid: active_dims must be strictly increasing");
    if (sizes_[i] < 2)
      throw std::invalid_argument("grid: at least two points per active dimension");
    points_ *= static_cast<std::size_t>(sizes_[i]);
  }
}

GridPtr TorusGrid::full(int n, int size) {
  std::vector<int> dims(4 * n);
  std::iota(dims.begin(), dims.end(), 0);
  return std::make_shared<const TorusGrid>(n, dims, std::vector<int>(4 * n, size));
}

GridPtr TorusGrid::make(int n, std::vector<int> active_dims,
                        std::vector<int> sizes) {
  return std::make_shared<const TorusGrid>(n, std::move(active_dims),
                                           std::move(sizes));
}

double TorusGrid::spacing(std::size_t axis) const {
  return 2.0 * std::numbers::pi / sizes_.at(axis);
}

double TorusGrid::min_spacing() const {
  return 2.0 * std::numbers::pi / *std::max_element(sizes_.begin(), sizes_.end());
}

int TorusGrid::axis_of(int dim) const {
  const auto it = std::find(active_.begin(), active_.end(), dim);
  return it == active_.end() ? -1 : static_cast<int>(it - active_.begin());
}

std::vector<int> TorusGrid::multi_index(std::size_t flat) const {
  std::vector<int> idx(sizes_.size());
  for (std::size_t a = sizes_.size(); a-- > 0;) {
    idx[a] = static_cast<int>(flat % sizes_[a]);
    flat /= sizes_[a];
  }
  return idx;
}

std::vector<double> TorusGrid::coordinates(std::size_t flat) const {
  std::vector<double> x(4 * n_, 0.0);
  const auto idx = multi_index(flat);
  for (std::size_t a = 0; a < idx.size(); ++a) x[active_[a]] = idx[a] * spacing(a);
  return x;
}

bool TorusGrid::same_shape(const TorusGrid& other) const {
  return n_ == other.n_ && active_ == other.active_ && sizes_ == other.sizes_;
}

std::vector<double> active_coordinates(const TorusGrid& grid, std::size_t flat) {
  const auto idx = grid.multi_index(flat);
  std::vector<double> x(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) x[a] = idx[a] * grid.spacing(a);
  return x;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridPtr grid, double value)
    : grid_(std::move(grid)), values_(grid_->num_points(), value) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->num_points())
    throw std::invalid_argument("field size does not match grid");
}

double ScalarField::mean() const {
  // Serial summation keeps the result independent of the worker count.
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double ScalarField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}
double ScalarField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}
double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}
bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (o.values_.size() != values_.size())
    throw std::invalid_argument("field size mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}
ScalarField& ScalarField::operator-=(const ScalarField& o) {
  if (o.values_.size() != values_.size())
    throw std::invalid_argument("field size mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}
ScalarField& ScalarField::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}
ScalarField& ScalarField::operator+=(double c) {
  for (auto& v : values_) v += c;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) {
  a += b;
  return a;
}
ScalarField operator-(ScalarField a, const ScalarField& b) {
  a -= b;
  return a;
}
ScalarField operator*(double s, ScalarField a) {
  a *= s;
  return a;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("field size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

TrigPolySpec TrigPolySpec::constant(double c) {
  TrigPolySpec s;
  s.terms.push_back({{}, c, 0.0});
  return s;
}

TrigPolySpec& TrigPolySpec::add(std::vector<int> k, double amplitude,
                                double phase) {
  terms.push_back({std::move(k), amplitude, phase});
  return *this;
}

namespace {
double phase_of(const TrigTerm& t, const std::vector<double>& x) {
  double p = t.phase;
  for (std::size_t a = 0; a < t.k.size(); ++a) p += t.k[a] * x[a];
  return p;
}
int k_at(const TrigTerm& t, int axis) {
  return axis < static_cast<int>(t.k.size()) ? t.k[axis] : 0;
}
}  // namespace

double TrigPolySpec::evaluate(const std::vector<double>& x) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.amplitude * std::cos(phase_of(t, x));
  return s;
}

double TrigPolySpec::derivative(const std::vector<double>& x, int axis) const {
  double s = 0.0;
  for (const auto& t : terms)
    s -= t.amplitude * k_at(t, axis) * std::sin(phase_of(t, x));
  return s;
}

double TrigPolySpec::second_derivative(const std::vector<double>& x, int a,
                                       int b) const {
  double s = 0.0;
  for (const auto& t : terms)
    s -= t.amplitude * k_at(t, a) * k_at(t, b) * std::cos(phase_of(t, x));
  return s;
}

double TrigPolySpec::max_wavenumber(std::size_t axis) const {
  int m = 0;
  for (const auto& t : terms)
    if (axis < t.k.size()) m = std::max(m, std::abs(t.k[axis]));
  return m;
}

void check_band_limit(const TrigPolySpec& spec, const TorusGrid& grid) {
  for (const auto& t : spec.terms) {
    if (!t.k.empty() && t.k.size() != grid.num_active())
      throw BandLimitError("wavevector has " + std::to_string(t.k.size()) +
                           " entries but the grid has " +
                           std::to_string(grid.num_active()) + " active dimensions");
    for (std::size_t a = 0; a < t.k.size(); ++a)
      if (2 * std::abs(t.k[a]) >= grid.sizes()[a])
        throw BandLimitError("wavenumber " + std::to_string(t.k[a]) + " on axis " +
                             std::to_string(a) + " is not resolvable with " +
                             std::to_string(grid.sizes()[a]) + " points");
    if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase))
      throw BandLimitError("non-finite trigonometric term");
  }
}

ScalarField sample(const TrigPolySpec& spec, const GridPtr& grid) {
  check_band_limit(spec, *grid);
  ScalarField out(grid);
  const auto npts = static_cast<std::ptrdiff_t>(grid->num_points());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < npts; ++p)
    out[p] = spec.evaluate(active_coordinates(*grid, static_cast<std::size_t>(p)));
  return out;
}

}  // namespace qmflow
