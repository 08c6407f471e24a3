#pragma once

// Reference computations used by the tests. Nothing here calls into the
// spectral machinery: metrics are evaluated in closed form and differentiated
// by finite differences, forms are evaluated by explicit index sums.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
constexpr double kPi = std::numbers::pi;

struct Mode {
  std::vector<int> k;  // wave vector over (x1, y1, ..., xn, yn)
  double c = 0.0;      // cos coefficient
  double s = 0.0;      // sin coefficient
};

inline double theta(const Mode& m, const std::vector<double>& x) {
  double th = 0.0;
  for (std::size_t a = 0; a < m.k.size(); ++a) th += m.k[a] * x[a];
  return 2.0 * kPi * th;
}

inline double series(const std::vector<Mode>& f, const std::vector<double>& x) {
  double v = 0.0;
  for (const auto& m : f) v += m.c * std::cos(theta(m, x)) + m.s * std::sin(theta(m, x));
  return v;
}

/// d theta / dz^i and d theta / dzbar^j for theta = 2 pi k.x, with
/// d/dz = (d/dx - i d/dy) / 2.
inline cd dtheta(const Mode& m, int i, bool bar) {
  const double kx = m.k[2 * i], ky = m.k[2 * i + 1];
  return kPi * cd(kx, bar ? ky : -ky);
}

/// g = I + d_i d_jbar phi for a trigonometric potential.
inline CMat kahler_metric(const std::vector<Mode>& phi, int n, const std::vector<double>& x) {
  CMat g = CMat::Identity(n, n);
  for (const auto& m : phi) {
    const double th = theta(m, x);
    const double f = m.c * std::cos(th) + m.s * std::sin(th);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) -= f * dtheta(m, i, false) * dtheta(m, j, true);
  }
  return g;
}

using MatFn = std::function<CMat(const std::vector<double>&)>;
using RealFn = std::function<double(const std::vector<double>&)>;

// sixth-order central first-derivative stencil
inline const std::vector<std::pair<int, double>>& stencil() {
  static const std::vector<std::pair<int, double>> s = {
      {-3, -1.0 / 60}, {-2, 3.0 / 20}, {-1, -3.0 / 4}, {1, 3.0 / 4}, {2, -3.0 / 20}, {3, 1.0 / 60}};
  return s;
}

/// Partial derivative along real axis a.
template <class F>
auto partial(const F& f, const std::vector<double>& x, int a, double h) {
  using T = std::decay_t<decltype(f(x))>;
  std::vector<double> y = x;
  T acc = f(x) * 0.0;
  for (const auto& [o, w] : stencil()) {
    y[a] = x[a] + o * h;
    acc = acc + w * f(y);
  }
  return T(acc * (1.0 / h));
}

/// d/dz^k (bar=false) or d/dzbar^k (bar=true) of a matrix-valued function.
inline CMat dz(const MatFn& f, const std::vector<double>& x, int k, bool bar, double h = 1e-3) {
  const CMat dx = partial(f, x, 2 * k, h);
  const CMat dy = partial(f, x, 2 * k + 1, h);
  return 0.5 * (dx + cd(0.0, bar ? 1.0 : -1.0) * dy);
}

/// d_k d_lbar of a matrix-valued function by nested stencils.
inline CMat dzdzbar(const MatFn& f, const std::vector<double>& x, int k, int l, double h = 1e-3) {
  auto dlbar = [&](const std::vector<double>& y) -> CMat { return dz(f, y, l, true, h); };
  const CMat dx = partial(dlbar, x, 2 * k, h);
  const CMat dy = partial(dlbar, x, 2 * k + 1, h);
  return 0.5 * (dx - cd(0.0, 1.0) * dy);
}

inline double dzdzbar(const RealFn& f, const std::vector<double>& x, int k, int l, double h = 1e-3) {
  MatFn m = [&](const std::vector<double>& y) {
    CMat r(1, 1);
    r(0, 0) = f(y);
    return r;
  };
  return dzdzbar(m, x, k, l, h)(0, 0).real();
}

/// Chern curvature R[i][j][k][l] = -d_k d_lbar G + d_k G G^{-1} d_lbar G, entries (i, j).
struct PointTensor {
  int n = 0;
  std::vector<cd> R;
  CMat g;
  cd operator()(int i, int j, int k, int l) const { return R[((i * n + j) * n + k) * n + l]; }
  cd& operator()(int i, int j, int k, int l) { return R[((i * n + j) * n + k) * n + l]; }
};

inline PointTensor chern_fd(const MatFn& g, int n, const std::vector<double>& x, double h = 1e-3) {
  PointTensor t;
  t.n = n;
  t.R.assign(n * n * n * n, 0.0);
  t.g = g(x);
  const CMat gi = t.g.inverse();
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const CMat second = dzdzbar(g, x, k, l, h);
      const CMat quad = dz(g, x, k, false, h) * gi * dz(g, x, l, true, h);
      const CMat r = -second + quad;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j, k, l) = r(i, j);
    }
  return t;
}

/// R(u, vbar, w, xbar) = sum R_abcd u^a conj(v^b) w^c conj(x^d).
inline cd form(const PointTensor& t, const CVec& u, const CVec& v, const CVec& w, const CVec& x) {
  cd s = 0.0;
  const int n = t.n;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) s += t(a, b, c, d) * u(a) * std::conj(v(b)) * w(c) * std::conj(x(d));
  return s;
}

/// g(v, vbar) = sum g_{i jbar} v^i conj(v^j).
inline double gnorm2(const CMat& g, const CVec& v) { return (v.transpose() * g * v.conjugate())(0, 0).real(); }

inline double hsc(const PointTensor& t, const CVec& v) {
  const double q = gnorm2(t.g, v);
  return form(t, v, v, v, v).real() / (q * q);
}

/// Ricci form by tracing the last pair against g^{-1}: Ric_ij = sum g^{lk} R_ijkl.
inline CMat ricci_trace_last(const PointTensor& t) {
  const CMat gi = t.g.inverse();
  CMat r = CMat::Zero(t.n, t.n);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      for (int k = 0; k < t.n; ++k)
        for (int l = 0; l < t.n; ++l) r(i, j) += gi(l, k) * t(i, j, k, l);
  return r;
}
inline CMat ricci_trace_first(const PointTensor& t) {
  const CMat gi = t.g.inverse();
  CMat r = CMat::Zero(t.n, t.n);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      for (int k = 0; k < t.n; ++k)
        for (int l = 0; l < t.n; ++l) r(k, l) += gi(j, i) * t(i, j, k, l);
  return r;
}

/// Columns orthonormal for the form g(u, vbar) = u^T G conj(v), i.e. E^T G conj(E) = I.
inline CMat g_orthonormal(const CMat& g) {
  Eigen::LLT<CMat> llt(g.conjugate());
  const CMat L = llt.matrixL();
  return L.adjoint().inverse();
}

inline CMat haar(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMat z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = cd(nd(rng), nd(rng));
  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ() * CMat::Identity(n, n);
  const CMat r = qr.matrixQR();
  for (int j = 0; j < n; ++j) q.col(j) *= std::polar(1.0, -std::arg(r(j, j)));
  return q;
}

/// RBC in a g-orthonormal frame with weights a >= 0.
inline double rbc(const PointTensor& t, const CMat& frame, const Eigen::VectorXd& a) {
  double s = 0.0;
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      s += form(t, frame.col(i), frame.col(i), frame.col(j), frame.col(j)).real() * a(i) * a(j);
  return s / a.squaredNorm();
}

/// Largest RBC over `samples` random (frame, a) pairs.
inline double rbc_sample_max(const PointTensor& t, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const CMat e = g_orthonormal(t.g);
  double best = -1e300;
  for (int s = 0; s < samples; ++s) {
    const CMat f = e * haar(t.n, rng);
    Eigen::VectorXd a(t.n);
    // mix interior weights with faces so low-rank maximizers are hit too
    for (int i = 0; i < t.n; ++i) a(i) = (s % 3 == 0 && ud(rng) < 0.5) ? 0.0 : ud(rng);
    if (a.squaredNorm() == 0.0) a(s % t.n) = 1.0;
    best = std::max(best, rbc(t, f, a));
  }
  return best;
}

inline double hsc_sample_max(const PointTensor& t, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double best = -1e300;
  for (int s = 0; s < samples; ++s) {
    CVec v(t.n);
    for (int i = 0; i < t.n; ++i) v(i) = cd(nd(rng), nd(rng));
    best = std::max(best, hsc(t, v));
  }
  return best;
}

/// Space-form tensor -c (d_ij d_kl + d_il d_kj) / 2 with the identity metric.
inline PointTensor space_form(int n, double c) {
  PointTensor t;
  t.n = n;
  t.R.assign(n * n * n * n, 0.0);
  t.g = CMat::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          t(i, j, k, l) = -c * ((i == j && k == l ? 1.0 : 0.0) + (i == l && k == j ? 1.0 : 0.0)) / 2.0;
  return t;
}

/// Random trigonometric Kahler potential with small amplitude.
inline std::vector<Mode> random_potential(int n, int modes, double amp, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(-1, 1);
  std::uniform_real_distribution<double> ad(-1.0, 1.0);
  std::vector<Mode> out;
  while (static_cast<int>(out.size()) < modes) {
    Mode m;
    m.k.resize(2 * n);
    bool nz = false;
    for (auto& k : m.k) {
      k = kd(rng);
      nz = nz || k != 0;
    }
    if (!nz) continue;
    m.c = amp * ad(rng);
    m.s = amp * ad(rng);
    out.push_back(m);
  }
  return out;
}

/// Multiplicative weights for det(sA + B) by brute polynomial fitting at s = 0..n.
inline std::vector<double> det_poly(const CMat& a, const CMat& b) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd V(n + 1, n + 1);
  Eigen::VectorXd y(n + 1);
  for (int r = 0; r <= n; ++r) {
    const double s = r;
    for (int c = 0; c <= n; ++c) V(r, c) = std::pow(s, c);
    y(r) = (s * a + b).determinant().real();
  }
  const Eigen::VectorXd coef = V.colPivHouseholderQr().solve(y);
  return std::vector<double>(coef.data(), coef.data() + n + 1);
}

}  // namespace oracle
