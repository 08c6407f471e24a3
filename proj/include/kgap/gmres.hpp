#pragma once

// Restarted GMRES with right preconditioning for real linear operators that
// act on grid fields.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace kgap {

struct GmresOptions {
  int restart = 40;
  int max_iter = 400;
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
};

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // final true residual 2-norm
  double rhs_norm = 0.0;
};

using FieldOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

namespace detail {
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}
inline double nrm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }
}  // namespace detail

/// Solves A x = b with x = M y, starting from the given x.
inline GmresResult gmres(const FieldOp& apply_a, const FieldOp& apply_m, const std::vector<double>& b,
                         std::vector<double>& x, const GmresOptions& opt) {
  const std::size_t n = b.size();
  GmresResult res;
  res.rhs_norm = detail::nrm(b);
  const double target = std::max(opt.abs_tol, opt.rel_tol * res.rhs_norm);
  if (x.size() != n) x.assign(n, 0.0);

  std::vector<double> r(n), w(n), z(n);
  auto true_residual = [&]() {
    apply_a(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    return detail::nrm(r);
  };
  double beta = true_residual();
  res.residual = beta;
  if (beta <= target) {
    res.converged = true;
    return res;
  }
  const int m = std::max(1, opt.restart);
  std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  std::vector<double> cs(m), sn(m), g(m + 1);

  while (res.iterations < opt.max_iter) {
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    h.setZero();
    int k = 0;
    for (; k < m && res.iterations < opt.max_iter; ++k) {
      ++res.iterations;
      apply_m(v[k], z);
      apply_a(z, w);
      // modified Gram-Schmidt with one reorthogonalization pass
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j <= k; ++j) {
          const double hij = detail::dot(w, v[j]);
          h(j, k) += hij;
          for (std::size_t i = 0; i < n; ++i) w[i] -= hij * v[j][i];
        }
      }
      const double hn = detail::nrm(w);
      h(k + 1, k) = hn;
      if (hn > 0.0)
        for (std::size_t i = 0; i < n; ++i) v[k + 1][i] = w[i] / hn;
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * h(j, k) + sn[j] * h(j + 1, k);
        h(j + 1, k) = -sn[j] * h(j, k) + cs[j] * h(j + 1, k);
        h(j, k) = t;
      }
      const double den = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = den > 0.0 ? h(k, k) / den : 1.0;
      sn[k] = den > 0.0 ? h(k + 1, k) / den : 0.0;
      h(k, k) = den;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::fabs(g[k + 1]) <= target || hn == 0.0) {
        ++k;
        break;
      }
    }
    // back substitution and update x += M (V y)
    Eigen::VectorXd y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h(i, j) * y(j);
      y(i) = h(i, i) != 0.0 ? s / h(i, i) : 0.0;
    }
    std::vector<double> upd(n, 0.0);
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) upd[i] += y(j) * v[j][i];
    apply_m(upd, z);
    for (std::size_t i = 0; i < n; ++i) x[i] += z[i];
    beta = true_residual();
    res.residual = beta;
    if (beta <= target * 1.0000001 + 1e-300) {
      res.converged = true;
      return res;
    }
  }
  res.converged = res.residual <= target;
  return res;
}

}  // namespace kgap
