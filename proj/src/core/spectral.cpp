#include "spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace qmflow {

namespace {

// FFT plans and wavenumber tables for one grid shape. Plans are created
// under a lock; execution through the new-array interface is thread safe.
class SpectralPlan {
 public:
  explicit SpectralPlan(const std::vector<int>& sizes) : sizes_(sizes) {
    points_ = 1;
    for (int s : sizes_) points_ *= static_cast<std::size_t>(s);
    std::vector<cplx> a(points_), b(points_);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(static_cast<int>(sizes_.size()), sizes_.data(), in,
                             out, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(static_cast<int>(sizes_.size()), sizes_.data(), in,
                              out, FFTW_BACKWARD, flags);

    const std::size_t naxes = sizes_.size();
    k_.assign(points_ * naxes, 0.0);
    nyquist_.assign(points_ * naxes, 0);
    high_.assign(points_, 0);
    for (std::size_t p = 0; p < points_; ++p) {
      std::size_t flat = p;
      double normalized = 0.0;
      for (std::size_t a = naxes; a-- > 0;) {
        const int n = sizes_[a];
        const int i = static_cast<int>(flat % n);
        flat /= n;
        const bool nyq = (n % 2 == 0) && (2 * i == n);
        const int k = (2 * i <= n) ? i : i - n;
        k_[p * naxes + a] = k;
        nyquist_[p * naxes + a] = nyq ? 1 : 0;
        normalized = std::max(normalized, std::abs(k) / (0.5 * n));
      }
      high_[p] = normalized > 2.0 / 3.0 ? 1 : 0;
    }
  }
  ~SpectralPlan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  SpectralPlan(const SpectralPlan&) = delete;
  SpectralPlan& operator=(const SpectralPlan&) = delete;

  std::size_t points() const { return points_; }
  std::size_t axes() const { return sizes_.size(); }
  double k(std::size_t p, std::size_t a) const { return k_[p * axes() + a]; }
  bool nyquist(std::size_t p, std::size_t a) const {
    return nyquist_[p * axes() + a] != 0;
  }
  bool high(std::size_t p) const { return high_[p] != 0; }

  void forward(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    fftw_execute_dft(forward_,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }
  void backward(const std::vector<cplx>& in, std::vector<cplx>& out) const {
    fftw_execute_dft(backward_,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  std::vector<int> sizes_;
  std::size_t points_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<double> k_;
  std::vector<char> nyquist_;
  std::vector<char> high_;
};

const SpectralPlan& plan_for(const TorusGrid& grid) {
  static std::mutex mu;
  static std::map<std::vector<int>, std::unique_ptr<SpectralPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[grid.sizes()];
  if (!slot) slot = std::make_unique<SpectralPlan>(grid.sizes());
  return *slot;
}

std::vector<cplx> forward_transform(const ScalarField& u, const SpectralPlan& plan) {
  std::vector<cplx> in(u.values().begin(), u.values().end());
  std::vector<cplx> out(plan.points());
  plan.forward(in, out);
  return out;
}

// Multiplier of one derivative: axes a (and b, or -1 for a first derivative).
cplx multiplier(const SpectralPlan& plan, std::size_t p, int a, int b) {
  if (b < 0) {
    if (plan.nyquist(p, a)) return 0.0;
    return cplx(0.0, plan.k(p, a));
  }
  if (a == b) {
    const double k = plan.k(p, a);
    return -k * k;
  }
  if (plan.nyquist(p, a) || plan.nyquist(p, b)) return 0.0;
  return -plan.k(p, a) * plan.k(p, b);
}

struct DerivativeRequest {
  int a;
  int b;  // -1 for first derivatives
  ScalarField* out;
};

// Evaluates the requested derivatives, two real results per inverse FFT.
void evaluate(const SpectralPlan& plan, const std::vector<cplx>& spectrum,
              std::vector<DerivativeRequest>& requests) {
  const std::size_t np = plan.points();
  const double scale = 1.0 / static_cast<double>(np);
  std::vector<cplx> work(np), out(np);
  for (std::size_t r = 0; r < requests.size(); r += 2) {
    const DerivativeRequest& first = requests[r];
    const DerivativeRequest* second = r + 1 < requests.size() ? &requests[r + 1] : nullptr;
    for (std::size_t p = 0; p < np; ++p) {
      cplx m = multiplier(plan, p, first.a, first.b);
      if (second) m += cplx(0.0, 1.0) * multiplier(plan, p, second->a, second->b);
      work[p] = m * spectrum[p];
    }
    plan.backward(work, out);
    auto& v1 = first.out->values();
    for (std::size_t p = 0; p < np; ++p) v1[p] = out[p].real() * scale;
    if (second) {
      auto& v2 = second->out->values();
      for (std::size_t p = 0; p < np; ++p) v2[p] = out[p].imag() * scale;
    }
  }
}

double tail_fraction(const SpectralPlan& plan, const std::vector<cplx>& spectrum) {
  double total = 0.0, high = 0.0;
  for (std::size_t p = 1; p < plan.points(); ++p) {
    const double e = std::norm(spectrum[p]);
    total += e;
    if (plan.high(p)) high += e;
  }
  return total > 0.0 ? high / total : 0.0;
}

}  // namespace

std::size_t RealDerivatives::pair_index(std::size_t a, std::size_t b,
                                        std::size_t naxes) {
  if (a > b) std::swap(a, b);
  return a * naxes - a * (a - 1) / 2 + (b - a);
}

double RealDerivatives::d(int dim, std::size_t p) const {
  const int a = grid->axis_of(dim);
  return a < 0 ? 0.0 : first[a][p];
}

double RealDerivatives::dd(int dim_a, int dim_b, std::size_t p) const {
  const int a = grid->axis_of(dim_a);
  const int b = grid->axis_of(dim_b);
  if (a < 0 || b < 0 || second.empty()) return 0.0;
  return second[pair_index(a, b, grid->num_active())][p];
}

RealDerivatives differentiate(const ScalarField& u, bool with_second) {
  const GridPtr& grid = u.grid();
  const SpectralPlan& plan = plan_for(*grid);
  const auto spectrum = forward_transform(u, plan);
  const std::size_t naxes = grid->num_active();

  RealDerivatives d;
  d.grid = grid;
  d.first.assign(naxes, ScalarField(grid));
  std::vector<DerivativeRequest> req;
  for (std::size_t a = 0; a < naxes; ++a)
    req.push_back({static_cast<int>(a), -1, &d.first[a]});
  if (with_second) {
    d.second.assign(naxes * (naxes + 1) / 2, ScalarField(grid));
    for (std::size_t a = 0; a < naxes; ++a)
      for (std::size_t b = a; b < naxes; ++b)
        req.push_back({static_cast<int>(a), static_cast<int>(b),
                       &d.second[RealDerivatives::pair_index(a, b, naxes)]});
  }
  evaluate(plan, spectrum, req);
  d.spectral_tail = tail_fraction(plan, spectrum);
  return d;
}

namespace {
ComplexField partial(const ScalarField& u, int k, double sign) {
  const int n = u.grid()->n();
  if (k < 0 || k >= 2 * n)
    throw std::invalid_argument("holomorphic index out of range");
  const RealDerivatives d = differentiate(u, false);
  ComplexField out{u.grid(), std::vector<cplx>(u.size())};
  for (std::size_t p = 0; p < u.size(); ++p)
    out.values[p] = 0.5 * cplx(d.d(k, p), sign * d.d(2 * n + k, p));
  return out;
}
}  // namespace

ComplexField partial_z(const ScalarField& u, int k) { return partial(u, k, -1.0); }
ComplexField partial_zbar(const ScalarField& u, int k) { return partial(u, k, 1.0); }

Eigen::VectorXcd holomorphic_gradient(const RealDerivatives& d, std::size_t p) {
  const int n = d.grid->n();
  Eigen::VectorXcd g(2 * n);
  for (int j = 0; j < 2 * n; ++j) g(j) = 0.5 * cplx(d.d(j, p), -d.d(2 * n + j, p));
  return g;
}

SmallCMatrix complex_hessian(const RealDerivatives& d, std::size_t p) {
  // u_{j kbar} = (u_{xj xk} + u_{yj yk} + i (u_{xj yk} - u_{yj xk})) / 4
  const int n = d.grid->n();
  const int h = 2 * n;
  SmallCMatrix m(h, h);
  for (int j = 0; j < h; ++j)
    for (int k = j; k < h; ++k) {
      const double re = d.dd(j, k, p) + d.dd(h + j, h + k, p);
      const double im = d.dd(j, h + k, p) - d.dd(h + j, k, p);
      m(j, k) = 0.25 * cplx(re, im);
      m(k, j) = std::conj(m(j, k));
    }
  return m;
}

SmallCMatrix holomorphic_hessian(const RealDerivatives& d, std::size_t p) {
  // u_{jk} = (u_{xj xk} - u_{yj yk} - i (u_{xj yk} + u_{yj xk})) / 4
  const int n = d.grid->n();
  const int h = 2 * n;
  SmallCMatrix m(h, h);
  for (int j = 0; j < h; ++j)
    for (int k = j; k < h; ++k) {
      const double re = d.dd(j, k, p) - d.dd(h + j, h + k, p);
      const double im = -(d.dd(j, h + k, p) + d.dd(h + j, k, p));
      m(j, k) = 0.25 * cplx(re, im);
      m(k, j) = m(j, k);
    }
  return m;
}

double spectral_tail(const ScalarField& u) {
  const SpectralPlan& plan = plan_for(*u.grid());
  return tail_fraction(plan, forward_transform(u, plan));
}

}  // namespace qmflow
