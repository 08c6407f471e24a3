#pragma once

// Hermitian metric fields, their Ricci forms and Chern curvature tensors.
//
// Curvature convention (used by every functional and audit):
//   R_{i jbar k lbar} = -d_k d_lbar g_{i jbar} + g^{p qbar} (d_k g_{i qbar}) (d_lbar g_{p jbar}).
// The flat metric has R = 0, and for n = 1 with g = e^u one gets
// R_{1 1bar 1 1bar} = -e^u d d-bar u, so holomorphic sectional curvature is
// negative where u is strictly subharmonic. The Ricci form is
//   Ric_{i jbar} = -d_i d_jbar log det g = g^{k lbar} R_{k lbar i jbar}.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kgap/grid.hpp"
#include "kgap/trig_series.hpp"

namespace kgap {

enum class MetricFamily { flat, kahler_potential, conformal, direct };

inline const char* family_name(MetricFamily f) {
  switch (f) {
    case MetricFamily::flat: return "flat";
    case MetricFamily::kahler_potential: return "kahler_potential";
    case MetricFamily::conformal: return "conformal";
    case MetricFamily::direct: return "direct";
  }
  return "?";
}

/// One upper-triangular component g_{i jbar} (i <= j) of a direct metric.
struct DirectComponent {
  int i = 0;
  int j = 0;
  TrigSeries re;
  TrigSeries im;
};

/// Synthetic curvature used in place of the computed Chern tensor. The metric
/// itself stays flat; these exist to exercise the functionals on tensors with
/// known extremal values.
struct CurvatureOverride {
  enum class Kind { none, space_form, diagonal } kind = Kind::none;
  /// space_form: R_{i jbar k lbar} = -c (d_ij d_kl + d_il d_kj) / 2.
  double c = 0.0;
  /// diagonal: R_{i ibar i ibar} = values[i], all other components zero.
  std::vector<double> values;
};

struct MetricSpec {
  MetricFamily family = MetricFamily::flat;
  TrigSeries potential;  // kahler_potential: g = I + dd^c potential
  TrigSeries factor;     // conformal: g = e^factor I
  std::vector<DirectComponent> components;
  CurvatureOverride curvature;

  static MetricSpec flat() { return {}; }
  static MetricSpec kahler(TrigSeries phi) {
    MetricSpec s;
    s.family = MetricFamily::kahler_potential;
    s.potential = std::move(phi);
    return s;
  }
  static MetricSpec conformal(TrigSeries lambda) {
    MetricSpec s;
    s.family = MetricFamily::conformal;
    s.factor = std::move(lambda);
    return s;
  }
  /// Constant diagonal metric diag(d_0, ..., d_{n-1}) expressed as a direct metric.
  static MetricSpec constant_diagonal(const std::vector<double>& d) {
    MetricSpec s;
    s.family = MetricFamily::direct;
    for (int i = 0; i < static_cast<int>(d.size()); ++i) {
      DirectComponent c;
      c.i = c.j = i;
      c.re.constant = d[i];
      s.components.push_back(c);
    }
    return s;
  }
};

/// Closed-form metric matrix at a point.
inline Mat metric_at(const MetricSpec& spec, int n, std::span<const double> x) {
  Mat g = Mat::Identity(n, n);
  switch (spec.family) {
    case MetricFamily::flat: break;
    case MetricFamily::kahler_potential: g += spec.potential.ddc(x, n); break;
    case MetricFamily::conformal: g *= std::exp(spec.factor.value(x)); break;
    case MetricFamily::direct: {
      g.setZero();
      for (const auto& c : spec.components) {
        const cd v(c.re.value(x), c.im.value(x));
        if (c.i == c.j) {
          g(c.i, c.i) = v.real();
        } else {
          g(c.i, c.j) = v;
          g(c.j, c.i) = std::conj(v);
        }
      }
      break;
    }
  }
  return g;
}

inline void validate_spec(const MetricSpec& spec, int n) {
  auto check_series = [n](const TrigSeries& s, const std::string& what) {
    for (const auto& m : s.modes) {
      if (static_cast<int>(m.k.size()) != 2 * n) {
        throw Error(ErrorCode::Config, what + ": wave vector must have " + std::to_string(2 * n) +
                                           " entries");
      }
    }
  };
  check_series(spec.potential, "potential");
  check_series(spec.factor, "conformal factor");
  if (spec.family == MetricFamily::direct) {
    std::vector<int> seen(n * n, 0);
    for (const auto& c : spec.components) {
      if (c.i < 0 || c.j < 0 || c.i >= n || c.j >= n || c.i > c.j) {
        throw Error(ErrorCode::Config, "direct metric: component indices must satisfy 0 <= i <= j < n");
      }
      if (c.i == c.j && !c.im.empty()) {
        throw Error(ErrorCode::Config, "direct metric: diagonal components must be real");
      }
      if (seen[c.i * n + c.j]++) {
        throw Error(ErrorCode::Config, "direct metric: duplicate component");
      }
      check_series(c.re, "direct component");
      check_series(c.im, "direct component");
    }
    for (int i = 0; i < n; ++i) {
      if (!seen[i * n + i]) {
        throw Error(ErrorCode::Config, "direct metric: missing diagonal component " + std::to_string(i));
      }
    }
  }
  if (spec.curvature.kind == CurvatureOverride::Kind::diagonal &&
      static_cast<int>(spec.curvature.values.size()) != n) {
    throw Error(ErrorCode::Config, "diagonal curvature override needs n values");
  }
  if (spec.curvature.kind != CurvatureOverride::Kind::none && spec.family != MetricFamily::flat) {
    throw Error(ErrorCode::Config, "curvature overrides are only defined over the flat metric");
  }
}

/// Metric sampled on a grid plus validity metadata.
struct MetricField {
  HermitianField g;
  double min_eigenvalue = 0.0;
  std::size_t worst_point = 0;
  /// max over the grid of |d_k g_{i jbar} - d_i g_{k jbar}|.
  double kahler_defect = 0.0;
  CurvatureOverride curvature;

  int dim() const { return g.dim(); }
  std::size_t size() const { return g.size(); }
  bool is_kahler(double tol = 1e-9) const { return kahler_defect <= tol; }
};

/// Pointwise first derivatives d_k g_{i jbar}; entry [(i*n + j)*n + k].
inline std::vector<ComplexField> metric_first_derivatives(const Grid& grid, const HermitianField& g) {
  const int n = grid.dim();
  std::vector<ComplexField> out(n * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      ComplexField comp(grid.size());
      for (std::size_t p = 0; p < grid.size(); ++p) comp[p] = g(p, i, j);
      const ComplexField spec = grid.spectrum(comp);
      for (int k = 0; k < n; ++k) {
        ComplexField d = spec;
        apply_derivative(grid, d, k, false);
        grid.backward(d);
        out[(i * n + j) * n + k] = std::move(d);
      }
    }
  }
  return out;
}

inline double kahler_defect(const Grid& grid, const HermitianField& g) {
  const int n = grid.dim();
  if (n == 1) return 0.0;
  const auto d = metric_first_derivatives(grid, g);
  double defect = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (std::size_t p = 0; p < grid.size(); ++p)
          defect = std::max(defect, std::abs(d[(i * n + j) * n + k][p] - d[(k * n + j) * n + i][p]));
  return defect;
}

/// Fills validity metadata for an already sampled metric.
inline MetricField make_metric_field(const Grid& grid, HermitianField g,
                                     CurvatureOverride curvature = {}) {
  MetricField mf;
  mf.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double e = hermitian_eigenvalues(g.at(p))(0);
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw NotPositiveDefinite(p, e,
                                "metric is not positive definite at " + grid.describe_point(p) +
                                    ": smallest eigenvalue " + std::to_string(e));
    }
    if (e < mf.min_eigenvalue) {
      mf.min_eigenvalue = e;
      mf.worst_point = p;
    }
  }
  mf.kahler_defect = kahler_defect(grid, g);
  mf.g = std::move(g);
  mf.curvature = std::move(curvature);
  return mf;
}

inline MetricField build_metric(const MetricSpec& spec, const Grid& grid) {
  const int n = grid.dim();
  validate_spec(spec, n);
  HermitianField g(n, grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) g.set(p, metric_at(spec, n, grid.coords(p)));
  return make_metric_field(grid, std::move(g), spec.curvature);
}

inline ScalarField log_det_field(const Grid& grid, const HermitianField& g) {
  ScalarField out(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto ld = log_det_pd(g.at(p));
    if (!ld) {
      throw Error(ErrorCode::SingularMetric,
                  "singular or indefinite metric at " + grid.describe_point(p));
    }
    out[p] = *ld;
  }
  return out;
}

/// Ric = -dd^c log det g.
inline HermitianField ricci_form(const Grid& grid, const HermitianField& g) {
  HermitianField r = ddc(grid, log_det_field(grid, g));
  r *= -1.0;
  return r;
}
inline HermitianField ricci_form(const Grid& grid, const MetricField& g) {
  if (g.curvature.kind != CurvatureOverride::Kind::none) {
    throw Error(ErrorCode::Parameter, "ricci_form: metric carries a synthetic curvature override");
  }
  return ricci_form(grid, g.g);
}

struct CurvatureTensorField {
  TensorField R;
  HermitianField ric;
  /// Smallest b0 >= 0 with Ric >= -b0 g on the grid.
  double b0 = 0.0;
};

inline double compute_b0(const HermitianField& ric, const HermitianField& g) {
  double b0 = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p)
    b0 = std::max(b0, max_relative_eigenvalue(-ric.at(p), g.at(p)));
  return b0;
}

inline CurvatureTensorField synthetic_curvature(const Grid& grid, const CurvatureOverride& ov) {
  const int n = grid.dim();
  CurvatureTensorField c;
  c.R = TensorField(n, grid.size());
  c.ric = HermitianField(n, grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = 0.0;
            if (ov.kind == CurvatureOverride::Kind::space_form) {
              v = -ov.c * ((i == j && k == l ? 1.0 : 0.0) + (i == l && k == j ? 1.0 : 0.0)) / 2.0;
            } else if (ov.kind == CurvatureOverride::Kind::diagonal) {
              v = (i == j && j == k && k == l) ? ov.values[i] : 0.0;
            }
            c.R(p, i, j, k, l) = v;
          }
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        cd s = 0.0;
        for (int i = 0; i < n; ++i) s += c.R(p, i, i, k, l);
        c.ric(p, k, l) = s;
      }
  }
  HermitianField id(n, grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) id.set(p, Mat::Identity(n, n));
  c.b0 = compute_b0(c.ric, id);
  return c;
}

/// Chern curvature of a Hermitian metric field, with its Ricci form and b0.
inline CurvatureTensorField chern_curvature(const Grid& grid, const MetricField& metric) {
  if (metric.curvature.kind != CurvatureOverride::Kind::none) {
    return synthetic_curvature(grid, metric.curvature);
  }
  const int n = grid.dim();
  const HermitianField& g = metric.g;
  const std::size_t P = grid.size();
  CurvatureTensorField c;
  c.R = TensorField(n, P);

  // d_k g_{i jbar}; d_lbar g_{p jbar} = conj(d_l g_{j pbar}).
  const auto d1 = metric_first_derivatives(grid, g);
  auto dk = [&](int i, int j, int k, std::size_t p) { return d1[(i * n + j) * n + k][p]; };

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      ComplexField comp(P);
      for (std::size_t p = 0; p < P; ++p) comp[p] = g(p, i, j);
      const ComplexField spec = grid.spectrum(comp);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const ComplexField d2 = mixed_from_spectrum(grid, spec, k, l);
          for (std::size_t p = 0; p < P; ++p) c.R(p, i, j, k, l) = -d2[p];
        }
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    const Mat h = g.at(p).inverse();  // h(a, b) = (G^{-1})_{ab}; g^{p qbar} = h(q, p)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            cd s = 0.0;
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b) s += h(b, a) * dk(i, b, k, p) * std::conj(dk(j, a, l, p));
            c.R(p, i, j, k, l) += s;
          }
  }
  c.ric = ricci_form(grid, g);
  c.b0 = compute_b0(c.ric, g);
  return c;
}

/// Pointwise coefficients of det(s A + B) as a polynomial in s, by column
/// multilinearity: coefficient k collects every determinant that takes k
/// columns from A and the rest from B.
inline std::vector<double> mixed_det_coefficients(const Mat& a, const Mat& b) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> coef(n + 1, 0.0);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Mat m(n, n);
    for (int col = 0; col < n; ++col) m.col(col) = (mask >> col) & 1u ? a.col(col) : b.col(col);
    coef[std::popcount(mask)] += m.determinant().real();
  }
  return coef;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Integral of A^k ^ B^(n-k) relative to the flat volume form normalized to
/// unit volume. Mixed density = coef_k / binom(n, k).
inline double mixed_top_integral(const Grid& grid, const HermitianField& a, const HermitianField& b,
                                 int k) {
  const int n = grid.dim();
  if (k < 0 || k > n) {
    throw Error(ErrorCode::Parameter, "mixed_top_integral: k must lie in [0, n]");
  }
  ScalarField density(grid.size());
  const double norm = binomial(n, k);
  for (std::size_t p = 0; p < grid.size(); ++p)
    density[p] = mixed_det_coefficients(a.at(p), b.at(p))[k] / norm;
  return integrate(grid, density);
}

inline HermitianField constant_field(const Grid& grid, const Mat& m) {
  HermitianField f(grid.dim(), grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) f.set(p, m);
  return f;
}

inline MetricField flat_metric(const Grid& grid) {
  return build_metric(MetricSpec::flat(), grid);
}

}  // namespace kgap
