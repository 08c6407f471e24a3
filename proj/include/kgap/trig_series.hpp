#pragma once

// Real trigonometric series on the torus,
//   f(x) = c + sum_m [ a_m cos(2 pi k_m . x) + b_m sin(2 pi k_m . x) ],
// with integer wave vectors k_m over the real axes (x^1, y^1, ..., x^n, y^n).
// Values and holomorphic derivatives are evaluated in closed form.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "kgap/grid.hpp"

namespace kgap {

struct TrigMode {
  std::vector<int> k;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

struct TrigSeries {
  double constant = 0.0;
  std::vector<TrigMode> modes;

  bool empty() const { return constant == 0.0 && modes.empty(); }

  static TrigSeries cosine(std::vector<int> k, double amplitude) {
    TrigSeries s;
    s.modes.push_back({std::move(k), amplitude, 0.0});
    return s;
  }
  static TrigSeries sine(std::vector<int> k, double amplitude) {
    TrigSeries s;
    s.modes.push_back({std::move(k), 0.0, amplitude});
    return s;
  }
  TrigSeries& add(std::vector<int> k, double c, double s) {
    modes.push_back({std::move(k), c, s});
    return *this;
  }

  /// Highest |k_a| over all modes and axes.
  int bandwidth() const {
    int b = 0;
    for (const auto& m : modes)
      for (int ka : m.k) b = std::max(b, std::abs(ka));
    return b;
  }

  double phase(const TrigMode& m, std::span<const double> x) const {
    double th = 0.0;
    for (std::size_t a = 0; a < m.k.size(); ++a) th += m.k[a] * x[a];
    return 2.0 * std::numbers::pi * th;
  }

  double value(std::span<const double> x) const {
    double f = constant;
    for (const auto& m : modes) {
      const double th = phase(m, x);
      f += m.cos_coef * std::cos(th) + m.sin_coef * std::sin(th);
    }
    return f;
  }

  /// Complex wave number of d/dz^k (kx - i ky)/2 times 2 pi, so that
  /// d_k e^{i th} = i * holo_weight * e^{i th}.
  static cd holo_weight(const TrigMode& m, int k, bool conjugate) {
    const double kx = m.k[2 * k];
    const double ky = m.k[2 * k + 1];
    return std::numbers::pi * (conjugate ? cd(kx, ky) : cd(kx, -ky));
  }

  /// d/dz^k f or d/dzbar^k f.
  cd dz(std::span<const double> x, int k, bool conjugate = false) const {
    cd d = 0.0;
    for (const auto& m : modes) {
      const double th = phase(m, x);
      const cd w = holo_weight(m, k, conjugate);
      // d cos = -sin * (2 pi k.dx), d sin = cos * (2 pi k.dx)
      d += w * (-m.cos_coef * std::sin(th) + m.sin_coef * std::cos(th));
    }
    return d;
  }

  /// d_i d_jbar f.
  cd ddbar(std::span<const double> x, int i, int j) const {
    cd d = 0.0;
    for (const auto& m : modes) {
      const double th = phase(m, x);
      const cd w = holo_weight(m, i, false) * holo_weight(m, j, true);
      d -= w * (m.cos_coef * std::cos(th) + m.sin_coef * std::sin(th));
    }
    return d;
  }

  Mat ddc(std::span<const double> x, int n) const {
    Mat h(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h(i, j) = ddbar(x, i, j);
    return hermitian_part(h);
  }

  ScalarField sample(const Grid& grid) const {
    ScalarField f(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) f[p] = value(grid.coords(p));
    return f;
  }
};

}  // namespace kgap
