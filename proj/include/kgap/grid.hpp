#pragma once

// Periodic grid on the complex torus C^n / (Z^n + i Z^n) with Fourier
// calculus.
//
// Coordinates are z^k = x^k + i y^k with x^k, y^k in [0,1). The real axes are
// ordered (x^1, y^1, ..., x^n, y^n) and stored row-major, so the last axis
// varies fastest. Derivatives act on the trigonometric interpolant with the
// Nyquist rows removed, which keeps every derivative operator real-symmetric
// and mutually commuting.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kgap/error.hpp"
#include "kgap/linalg.hpp"

namespace kgap {

using ScalarField = std::vector<double>;
using ComplexField = std::vector<cd>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// One n x n Hermitian matrix per grid point, point-major and row-major within
/// a point.
class HermitianField {
 public:
  HermitianField() = default;
  HermitianField(int n, std::size_t points) : n_(n), points_(points), data_(points * n * n) {}

  int dim() const { return n_; }
  std::size_t size() const { return points_; }

  cd& operator()(std::size_t p, int i, int j) { return data_[(p * n_ + i) * n_ + j]; }
  const cd& operator()(std::size_t p, int i, int j) const { return data_[(p * n_ + i) * n_ + j]; }

  Mat at(std::size_t p) const {
    Mat m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = (*this)(p, i, j);
    return m;
  }
  void set(std::size_t p, const Mat& m) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(p, i, j) = m(i, j);
  }

  std::span<cd> data() { return data_; }
  std::span<const cd> data() const { return data_; }

  /// Largest |A - A^*| entry over the field.
  double hermitian_defect() const {
    double d = 0.0;
    for (std::size_t p = 0; p < points_; ++p)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          d = std::max(d, std::abs((*this)(p, i, j) - std::conj((*this)(p, j, i))));
    return d;
  }

  HermitianField& operator+=(const HermitianField& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  HermitianField& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }
  friend HermitianField operator+(HermitianField a, const HermitianField& b) { return a += b; }
  friend HermitianField operator*(double s, HermitianField a) { return a *= s; }
  friend HermitianField operator-(const HermitianField& a) { return -1.0 * a; }
  friend HermitianField operator-(const HermitianField& a, const HermitianField& b) {
    return a + (-b);
  }

 private:
  int n_ = 0;
  std::size_t points_ = 0;
  std::vector<cd> data_;
};

/// n^4 complex components R_{i jbar k lbar} per grid point.
class TensorField {
 public:
  TensorField() = default;
  TensorField(int n, std::size_t points) : n_(n), points_(points), data_(points * n * n * n * n) {}

  int dim() const { return n_; }
  std::size_t size() const { return points_; }

  std::size_t offset(std::size_t p, int i, int j, int k, int l) const {
    return (((p * n_ + i) * n_ + j) * n_ + k) * n_ + l;
  }
  cd& operator()(std::size_t p, int i, int j, int k, int l) { return data_[offset(p, i, j, k, l)]; }
  const cd& operator()(std::size_t p, int i, int j, int k, int l) const {
    return data_[offset(p, i, j, k, l)];
  }
  std::span<cd> data() { return data_; }
  std::span<const cd> data() const { return data_; }

  /// max |R_{i jbar k lbar} - conj(R_{j ibar l kbar})|.
  double conjugate_symmetry_defect() const {
    double d = 0.0;
    for (std::size_t p = 0; p < points_; ++p)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l)
              d = std::max(d, std::abs((*this)(p, i, j, k, l) - std::conj((*this)(p, j, i, l, k))));
    return d;
  }

 private:
  int n_ = 0;
  std::size_t points_ = 0;
  std::vector<cd> data_;
};

class Grid {
 public:
  Grid(int n, int resolution) {
    if (n < 1 || n > 3) {
      throw Error(ErrorCode::Config,
                  "grid: complex dimension n must be 1, 2 or 3 (got " + std::to_string(n) + ")");
    }
    if (resolution < 8 || (resolution & (resolution - 1)) != 0) {
      throw Error(ErrorCode::Config, "grid: resolution N must be a power of two >= 8 (got " +
                                         std::to_string(resolution) + ")");
    }
    impl_ = std::make_shared<Impl>(n, resolution);
  }

  int dim() const { return impl_->n; }
  int resolution() const { return impl_->N; }
  int axes() const { return 2 * impl_->n; }
  std::size_t size() const { return impl_->points; }

  std::size_t stride(int axis) const { return impl_->strides[axis]; }
  int index(std::size_t p, int axis) const {
    return static_cast<int>((p / impl_->strides[axis]) % impl_->N);
  }
  double coord(std::size_t p, int axis) const {
    return static_cast<double>(index(p, axis)) / impl_->N;
  }
  std::vector<double> coords(std::size_t p) const {
    std::vector<double> x(axes());
    for (int a = 0; a < axes(); ++a) x[a] = coord(p, a);
    return x;
  }
  std::string describe_point(std::size_t p) const {
    std::ostringstream os;
    os << "point " << p << " (";
    for (int a = 0; a < axes(); ++a) os << (a ? ", " : "") << coord(p, a);
    os << ")";
    return os.str();
  }

  /// Signed wavenumber of grid index j along an axis, Nyquist mapped to zero.
  int derivative_wavenumber(int j) const {
    const int N = impl_->N;
    if (j == N / 2) return 0;
    return j < N / 2 ? j : j - N;
  }

  /// Fourier symbol of d/dz^k (conjugate=false) or d/dzbar^k at mode m.
  cd symbol(std::size_t m, int k, bool conjugate) const {
    return conjugate ? impl_->dzbar[k][m] : impl_->dz[k][m];
  }
  std::span<const cd> symbol_table(int k, bool conjugate) const {
    return conjugate ? std::span<const cd>(impl_->dzbar[k]) : std::span<const cd>(impl_->dz[k]);
  }

  /// Unnormalized forward DFT of a field, in place.
  void forward(ComplexField& f) const { execute(impl_->forward_plan, f); }
  /// Normalized inverse DFT, in place.
  void backward(ComplexField& f) const {
    execute(impl_->backward_plan, f);
    const double s = 1.0 / static_cast<double>(size());
    for (auto& x : f) x *= s;
  }

  ComplexField spectrum(std::span<const double> f) const {
    check_size(f.size());
    ComplexField s(f.begin(), f.end());
    forward(s);
    return s;
  }
  ComplexField spectrum(std::span<const cd> f) const {
    check_size(f.size());
    ComplexField s(f.begin(), f.end());
    forward(s);
    return s;
  }

  void check_size(std::size_t s) const {
    if (s != size()) {
      throw Error(ErrorCode::Parameter, "field has " + std::to_string(s) +
                                            " values but the grid has " + std::to_string(size()));
    }
  }

 private:
  struct Impl {
    int n;
    int N;
    std::size_t points;
    std::vector<std::size_t> strides;
    std::vector<std::vector<cd>> dz, dzbar;
    fftw_plan forward_plan = nullptr;
    fftw_plan backward_plan = nullptr;

    Impl(int n_, int N_) : n(n_), N(N_) {
      points = 1;
      for (int a = 0; a < 2 * n; ++a) points *= static_cast<std::size_t>(N);
      strides.resize(2 * n);
      std::size_t s = 1;
      for (int a = 2 * n - 1; a >= 0; --a) {
        strides[a] = s;
        s *= static_cast<std::size_t>(N);
      }
      auto wn = [&](int j) { return j == N / 2 ? 0 : (j < N / 2 ? j : j - N); };
      dz.assign(n, std::vector<cd>(points));
      dzbar.assign(n, std::vector<cd>(points));
      const double pi = std::numbers::pi;
      for (std::size_t m = 0; m < points; ++m) {
        for (int k = 0; k < n; ++k) {
          const double kx = wn(static_cast<int>((m / strides[2 * k]) % N));
          const double ky = wn(static_cast<int>((m / strides[2 * k + 1]) % N));
          // d/dz = (d/dx - i d/dy)/2 and d/dx -> 2 pi i kx on exp(2 pi i k.x)
          dz[k][m] = pi * cd(ky, kx);
          dzbar[k][m] = pi * cd(-ky, kx);
        }
      }
      std::vector<int> dims(2 * n, N);
      std::vector<cd> scratch(points);
      auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      forward_plan = fftw_plan_dft(2 * n, dims.data(), buf, buf, FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
      backward_plan = fftw_plan_dft(2 * n, dims.data(), buf, buf, FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~Impl() {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      if (forward_plan) fftw_destroy_plan(forward_plan);
      if (backward_plan) fftw_destroy_plan(backward_plan);
    }
    Impl(const Impl&) = delete;
    Impl& operator=(const Impl&) = delete;
  };

  void execute(fftw_plan plan, ComplexField& f) const {
    check_size(f.size());
    auto* buf = reinterpret_cast<fftw_complex*>(f.data());
    fftw_execute_dft(plan, buf, buf);
  }

  std::shared_ptr<const Impl> impl_;
};

inline Grid make_grid(int n, int resolution) { return Grid(n, resolution); }

// ---------------------------------------------------------------------------
// Spectral calculus

/// Multiplies a spectrum by the symbol of d/dz^k or d/dzbar^k.
inline void apply_derivative(const Grid& grid, ComplexField& spec, int k, bool conjugate) {
  const auto sym = grid.symbol_table(k, conjugate);
  for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= sym[m];
}

inline void check_direction(const Grid& grid, int k) {
  if (k < 0 || k >= grid.dim()) {
    throw Error(ErrorCode::Index, "derivative index " + std::to_string(k) +
                                      " out of range for n = " + std::to_string(grid.dim()));
  }
}

/// d/dz^k f (conjugate=false) or d/dzbar^k f of a periodic field.
inline ComplexField holo_deriv(const Grid& grid, std::span<const cd> f, int k, bool conjugate) {
  check_direction(grid, k);
  ComplexField s = grid.spectrum(f);
  apply_derivative(grid, s, k, conjugate);
  grid.backward(s);
  return s;
}
inline ComplexField holo_deriv(const Grid& grid, std::span<const double> f, int k, bool conjugate) {
  check_direction(grid, k);
  ComplexField s = grid.spectrum(f);
  apply_derivative(grid, s, k, conjugate);
  grid.backward(s);
  return s;
}

/// d/dz^k d/dzbar^l applied to a spectrum, returned in physical space.
inline ComplexField mixed_from_spectrum(const Grid& grid, const ComplexField& spec, int k, int l) {
  ComplexField s = spec;
  const auto a = grid.symbol_table(k, false);
  const auto b = grid.symbol_table(l, true);
  for (std::size_t m = 0; m < s.size(); ++m) s[m] *= a[m] * b[m];
  grid.backward(s);
  return s;
}

/// (dd^c f)_{i jbar} = d_i d_jbar f for a real field. The result is Hermitian
/// by construction.
inline HermitianField ddc_from_spectrum(const Grid& grid, const ComplexField& spec) {
  const int n = grid.dim();
  HermitianField out(n, grid.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const ComplexField d = mixed_from_spectrum(grid, spec, i, j);
      for (std::size_t p = 0; p < grid.size(); ++p) {
        if (i == j) {
          out(p, i, i) = d[p].real();
        } else {
          out(p, i, j) = d[p];
          out(p, j, i) = std::conj(d[p]);
        }
      }
    }
  }
  return out;
}

inline HermitianField ddc(const Grid& grid, std::span<const double> f) {
  return ddc_from_spectrum(grid, grid.spectrum(f));
}

/// Complex (flat) Laplacian sum_k d_k d_kbar f, i.e. a quarter of the real
/// Laplacian.
inline ScalarField flat_complex_laplacian(const Grid& grid, std::span<const double> f) {
  ComplexField s = grid.spectrum(f);
  for (std::size_t m = 0; m < s.size(); ++m) {
    cd sym = 0.0;
    for (int k = 0; k < grid.dim(); ++k) sym += grid.symbol(m, k, false) * grid.symbol(m, k, true);
    s[m] *= sym;
  }
  grid.backward(s);
  ScalarField out(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) out[p] = s[p].real();
  return out;
}

/// Mean over the grid, i.e. the integral against the flat volume form
/// normalized to unit total volume.
inline double integrate(const Grid& grid, std::span<const double> rho) {
  grid.check_size(rho.size());
  long double s = 0.0L;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    if (!std::isfinite(rho[p])) {
      throw Error(ErrorCode::NonFinite,
                  "integrate: non-finite density value at " + grid.describe_point(p));
    }
    s += rho[p];
  }
  return static_cast<double>(s / static_cast<long double>(rho.size()));
}

/// Integral over the points selected by a mask.
inline double integrate_masked(const Grid& grid, std::span<const double> rho,
                               std::span<const char> mask) {
  grid.check_size(rho.size());
  grid.check_size(mask.size());
  long double s = 0.0L;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    if (!mask[p]) continue;
    if (!std::isfinite(rho[p])) {
      throw Error(ErrorCode::NonFinite,
                  "integrate: non-finite density value at " + grid.describe_point(p));
    }
    s += rho[p];
  }
  return static_cast<double>(s / static_cast<long double>(rho.size()));
}

inline ScalarField real_part(std::span<const cd> f) {
  ScalarField r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
  return r;
}

/// Pointwise tr_A B = tr(A^{-1} B).
inline ScalarField trace_field(const HermitianField& b, const HermitianField& a) {
  ScalarField out(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) out[p] = trace_against(b.at(p), a.at(p));
  return out;
}

}  // namespace kgap
