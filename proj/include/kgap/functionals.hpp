#pragma once

// Curvature functionals at a point and their extremal fields.
//
// With Q(x, y) = R(x, xbar, y, ybar) = sum R_{i jbar k lbar} x^i conj(x^j) y^k conj(y^l):
//   HSC(v)          = Q(v, v) / |v|^4
//   RBC(frame, a)   = sum_ij a_i a_j Q(e_i, e_j) / |a|^2      (a >= 0)
//   Ric_perp(v)     = alpha Ric(v, vbar)/|v|^2 + beta HSC(v)
//   kRic(plane, v)  = sum_{i<=k} Q(v, e_i) / |v|^2
// Maximizations run in g-orthonormal coordinates, where frames are unitary.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kgap/metric.hpp"

namespace kgap {

/// Curvature data at one point: R_{i jbar k lbar}, the metric and the Ricci form.
struct PointCurvature {
  int n = 0;
  std::vector<cd> R;
  Mat g;
  Mat ric;

  cd operator()(int i, int j, int k, int l) const { return R[((i * n + j) * n + k) * n + l]; }
  cd& operator()(int i, int j, int k, int l) { return R[((i * n + j) * n + k) * n + l]; }
};

inline PointCurvature point_curvature(const CurvatureTensorField& c, const HermitianField& g,
                                      std::size_t p) {
  PointCurvature pc;
  pc.n = c.R.dim();
  const std::size_t m = static_cast<std::size_t>(pc.n) * pc.n * pc.n * pc.n;
  pc.R.assign(c.R.data().begin() + p * m, c.R.data().begin() + (p + 1) * m);
  pc.g = g.at(p);
  pc.ric = c.ric.at(p);
  return pc;
}

/// Components in the basis given by the columns of `e`:
/// R'(p,q,r,s) = sum R_abcd e_ap conj(e_bq) e_cr conj(e_ds).
inline PointCurvature change_basis(const PointCurvature& pc, const Mat& e) {
  const int n = pc.n;
  PointCurvature out;
  out.n = n;
  out.R.assign(pc.R.size(), 0.0);
  // contract one index at a time
  std::vector<cd> t1(pc.R.size()), t2(pc.R.size()), t3(pc.R.size());
  auto idx = [n](int a, int b, int c, int d) { return ((a * n + b) * n + c) * n + d; };
  for (int p = 0; p < n; ++p)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          cd s = 0.0;
          for (int a = 0; a < n; ++a) s += pc.R[idx(a, b, c, d)] * e(a, p);
          t1[idx(p, b, c, d)] = s;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          cd s = 0.0;
          for (int b = 0; b < n; ++b) s += t1[idx(p, b, c, d)] * std::conj(e(b, q));
          t2[idx(p, q, c, d)] = s;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int d = 0; d < n; ++d) {
          cd s = 0.0;
          for (int c = 0; c < n; ++c) s += t2[idx(p, q, c, d)] * e(c, r);
          t3[idx(p, q, r, d)] = s;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s_ = 0; s_ < n; ++s_) {
          cd s = 0.0;
          for (int d = 0; d < n; ++d) s += t3[idx(p, q, r, d)] * std::conj(e(d, s_));
          out.R[idx(p, q, r, s_)] = s;
        }
  out.g = gram(pc.g, e);
  out.ric = e.transpose() * pc.ric * e.conjugate();
  return out;
}

inline PointCurvature to_orthonormal(const PointCurvature& pc) {
  return change_basis(pc, orthonormal_frame(pc.g));
}

/// Q(x, y) = R(x, xbar, y, ybar); real by conjugate symmetry.
inline double quad(const PointCurvature& pc, const Vec& x, const Vec& y) {
  const int n = pc.n;
  cd s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cd t = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) t += pc(i, j, k, l) * y(k) * std::conj(y(l));
      s += t * x(i) * std::conj(x(j));
    }
  return s.real();
}

/// Partial derivatives of Q in its holomorphic slots:
/// dQ = 2 Re( dx . d1(x,y) + dy . d2(x,y) ).
inline Vec quad_d1(const PointCurvature& pc, const Vec& x, const Vec& y) {
  const int n = pc.n;
  Vec out = Vec::Zero(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) out(p) += pc(p, q, r, s) * std::conj(x(q)) * y(r) * std::conj(y(s));
  return out;
}
inline Vec quad_d2(const PointCurvature& pc, const Vec& x, const Vec& y) {
  const int n = pc.n;
  Vec out = Vec::Zero(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) out(r) += pc(p, q, r, s) * x(p) * std::conj(x(q)) * std::conj(y(s));
  return out;
}

inline void require_nonzero(const Mat& g, const Vec& v, const char* what) {
  if (!(norm2(g, v) > 0.0)) {
    throw Error(ErrorCode::Parameter, std::string(what) + ": zero vector");
  }
}

inline double hsc(const PointCurvature& pc, const Vec& v) {
  require_nonzero(pc.g, v, "hsc");
  const double nv = norm2(pc.g, v);
  return quad(pc, v, v) / (nv * nv);
}

/// Largest |<e_p, e_q>_g - delta_pq| over the columns of a frame.
inline double frame_defect(const Mat& g, const Mat& frame) {
  const Mat gr = gram(g, frame);
  return (gr - Mat::Identity(gr.rows(), gr.cols())).cwiseAbs().maxCoeff();
}

inline double rbc(const PointCurvature& pc, const Mat& frame, const RVec& a) {
  const int n = pc.n;
  if (frame.rows() != n || frame.cols() != n || a.size() != n) {
    throw Error(ErrorCode::Parameter, "rbc: frame and weights must have dimension n");
  }
  if (frame_defect(pc.g, frame) > 1e-8) {
    throw Error(ErrorCode::Parameter, "rbc: frame is not unitary for the metric (Gram defect " +
                                          std::to_string(frame_defect(pc.g, frame)) + ")");
  }
  if (a.minCoeff() < 0.0 || !(a.squaredNorm() > 0.0)) {
    throw Error(ErrorCode::Parameter, "rbc: weights must be nonnegative and not all zero");
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (a(i) == 0.0 || a(j) == 0.0) continue;
      s += a(i) * a(j) * quad(pc, frame.col(i), frame.col(j));
    }
  return s / a.squaredNorm();
}

inline double ric_perp(const PointCurvature& pc, const Vec& v, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0 || !(alpha > 0.0 || beta > 0.0)) {
    throw Error(ErrorCode::Parameter, "ric_perp: need alpha, beta >= 0 with at least one positive");
  }
  require_nonzero(pc.g, v, "ric_perp");
  const double nv = norm2(pc.g, v);
  double out = 0.0;
  if (alpha != 0.0) out += alpha * form_value(pc.ric, v) / nv;
  if (beta != 0.0) out += beta * quad(pc, v, v) / (nv * nv);
  return out;
}

/// sum_{i<=k} Q(v, e_i) / |v|^2 for a g-orthonormal basis (columns) of a k-plane containing v.
inline double k_ricci(const PointCurvature& pc, const Mat& basis, const Vec& v) {
  const int k = static_cast<int>(basis.cols());
  if (k < 1 || k > pc.n || basis.rows() != pc.n) {
    throw Error(ErrorCode::Parameter, "k_ricci: basis must have 1 <= k <= n columns");
  }
  if (frame_defect(pc.g, basis) > 1e-8) {
    throw Error(ErrorCode::Parameter, "k_ricci: degenerate or non-orthonormal basis");
  }
  require_nonzero(pc.g, v, "k_ricci");
  const double nv = norm2(pc.g, v);
  // projection onto the plane: sum <v, e_i> e_i
  Vec proj = Vec::Zero(pc.n);
  for (int i = 0; i < k; ++i) proj += inner(pc.g, v, basis.col(i)) * basis.col(i);
  if (std::sqrt(std::max(0.0, norm2(pc.g, v - proj))) > 1e-8 * std::sqrt(nv)) {
    throw Error(ErrorCode::Parameter, "k_ricci: vector does not lie in the k-plane");
  }
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += quad(pc, v, basis.col(i));
  return s / nv;
}

// ---------------------------------------------------------------------------
// Weightings

inline double rho_kappa(double t, int n) { return t <= 0.0 ? 1.0 / n : 1.0; }
inline double rho_tau(double s, int n) { return s <= 0.0 ? n + 1.0 : 2.0 * n; }

// ---------------------------------------------------------------------------
// Maximization

struct AscentOptions {
  int restarts = 2;          // ascents on the unitary group for RBC and k-Ricci
  int sphere_restarts = 2;   // ascents on the unit sphere for Ric_perp / HSC
  int screen = 32;           // random starts scored before picking the ascent starts
  int max_iter = 300;
  double grad_tol = 1e-10;
  int stall_iter = 10;       // stop when the value gained over this many steps is below stall_tol
  double stall_tol = 1e-14;
  std::uint64_t seed = 0;
};

struct CurvatureExtremum {
  double value = -std::numeric_limits<double>::infinity();
  Mat frame;        // g-orthonormal columns (RBC frame or k-plane basis in its first k columns)
  RVec weights;     // RBC eigenvalue vector, unit norm, >= 0
  Vec vector;       // maximizing vector (HSC / Ric_perp / k-Ricci)
  std::size_t point = 0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
};

struct OrthantMax {
  double value = -std::numeric_limits<double>::infinity();
  RVec a;
};

/// max of a^T A a over a >= 0, |a| = 1, for symmetric A (n <= 3), by
/// enumerating supports and the top eigenpair on each.
inline OrthantMax max_on_orthant(const RMat& A) {
  const int n = static_cast<int>(A.rows());
  OrthantMax best;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int m = std::popcount(mask);
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if ((mask >> i) & 1u) idx.push_back(i);
    RVec a = RVec::Zero(n);
    if (m == 1) {
      a(idx[0]) = 1.0;
    } else {
      RMat sub(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sub(i, j) = A(idx[i], idx[j]);
      Eigen::SelfAdjointEigenSolver<RMat> es(sub);
      RVec top = es.eigenvectors().col(m - 1);
      if (top.sum() < 0.0) top = -top;
      if (top.minCoeff() < -1e-13) continue;
      for (int i = 0; i < m; ++i) a(idx[i]) = std::max(0.0, top(i));
      a /= a.norm();
    }
    const double v = a.dot(A * a);
    if (v > best.value) {
      best.value = v;
      best.a = a;
    }
  }
  return best;
}

namespace detail {

/// A(U)_ij = Q(u_i, u_j), symmetrized. `pc` must be in orthonormal coordinates.
inline RMat pair_matrix(const PointCurvature& pc, const Mat& u) {
  const int n = pc.n;
  RMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = quad(pc, u.col(i), u.col(j));
  return 0.5 * (a + a.transpose());
}

/// Riemannian gradient on U(n) of F(U) = sum_ij W_ij Q(u_i, u_j) for the
/// right-invariant parametrization U exp(X).
inline Mat unitary_gradient(const PointCurvature& pc, const Mat& u, const RMat& w) {
  const int n = pc.n;
  Mat k = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (w(i, j) == 0.0) continue;
      k.col(i) += w(i, j) * quad_d1(pc, u.col(i), u.col(j));
      k.col(j) += w(i, j) * quad_d2(pc, u.col(i), u.col(j));
    }
  const Mat m = u.transpose() * k;
  return m.conjugate() - m.transpose();
}

/// Records the current value; true once the gain over the last
/// opt.stall_iter steps falls below opt.stall_tol (relative).
inline bool stalled(std::vector<double>& hist, double v, const AscentOptions& opt) {
  hist.push_back(v);
  const std::size_t k = static_cast<std::size_t>(std::max(1, opt.stall_iter));
  if (hist.size() <= k) return false;
  return v - hist[hist.size() - 1 - k] <= opt.stall_tol * (1.0 + std::fabs(v));
}

/// Indices of the `keep` best scores, ties broken by index; index 0 always kept.
inline std::vector<int> best_starts(const std::vector<double>& score, int keep) {
  std::vector<int> idx(score.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin() + 1, idx.end(), [&](int a, int b) { return score[a] > score[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(1, keep))));
  return idx;
}

struct UnitaryObjective {
  double value;
  RMat weights;
};

/// Backtracking ascent on U(n). `eval` returns the exact objective and the
/// weight matrix of its active quadratic piece.
template <class Eval>
CurvatureExtremum ascend_unitary(const PointCurvature& pc, Mat u, Eval&& eval, const AscentOptions& opt) {
  UnitaryObjective cur = eval(u);
  double step = 1.0;
  CurvatureExtremum ex;
  int it = 0;
  double gnorm = 0.0;
  std::vector<double> hist;
  for (; it < opt.max_iter; ++it) {
    const Mat grad = unitary_gradient(pc, u, cur.weights);
    gnorm = grad.norm();
    if (gnorm < opt.grad_tol || stalled(hist, cur.value, opt)) {
      ex.converged = true;
      break;
    }
    bool accepted = false;
    step = std::min(1.0, step * 2.0);
    while (step > 1e-12) {
      const Mat trial = cayley_step(u, grad, step);
      const UnitaryObjective next = eval(trial);
      if (next.value >= cur.value + 1e-4 * step * gnorm * gnorm) {
        u = trial;
        cur = next;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      ex.converged = true;  // no ascent direction left at working precision
      break;
    }
  }
  ex.value = cur.value;
  ex.frame = u;
  ex.iterations = it;
  ex.grad_norm = gnorm;
  return ex;
}

/// Projected ascent of f(w) = alpha w^T Ric w-bar + beta Q(w, w) on the unit sphere.
inline CurvatureExtremum ascend_sphere(const PointCurvature& pc, Vec w, double alpha, double beta,
                                       const AscentOptions& opt) {
  auto f = [&](const Vec& x) {
    double v = 0.0;
    if (alpha != 0.0) v += alpha * form_value(pc.ric, x);
    if (beta != 0.0) v += beta * quad(pc, x, x);
    return v;
  };
  w /= w.norm();
  double cur = f(w);
  double step = 1.0;
  CurvatureExtremum ex;
  int it = 0;
  double gnorm = 0.0;
  std::vector<double> hist;
  for (; it < opt.max_iter; ++it) {
    Vec a = Vec::Zero(pc.n);
    if (alpha != 0.0) a += alpha * (pc.ric * w.conjugate());
    if (beta != 0.0) a += beta * (quad_d1(pc, w, w) + quad_d2(pc, w, w));
    Vec grad = 2.0 * a.conjugate();
    grad -= w * (w.adjoint() * grad)(0, 0);
    gnorm = grad.norm();
    if (gnorm < opt.grad_tol || stalled(hist, cur, opt)) {
      ex.converged = true;
      break;
    }
    bool accepted = false;
    step = std::min(1.0, step * 2.0);
    while (step > 1e-12) {
      Vec trial = w + step * grad;
      trial /= trial.norm();
      const double v = f(trial);
      if (v >= cur + 1e-4 * step * gnorm * gnorm) {
        w = trial;
        cur = v;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      ex.converged = true;
      break;
    }
  }
  ex.value = cur;
  ex.vector = w;
  ex.iterations = it;
  ex.grad_norm = gnorm;
  return ex;
}

}  // namespace detail

inline Rng point_rng(const AscentOptions& opt, std::uint64_t stream, std::size_t point) {
  return Rng(stream_seed(opt.seed, stream, point));
}

/// max over unitary frames and a >= 0 of RBC at a point.
inline CurvatureExtremum max_rbc_at_point(const PointCurvature& pc, std::size_t point,
                                          const AscentOptions& opt = {}) {
  const int n = pc.n;
  const Mat e = orthonormal_frame(pc.g);
  const PointCurvature on = change_basis(pc, e);
  CurvatureExtremum best;
  if (n == 1) {
    best.frame = e;
    best.weights = RVec::Ones(1);
    best.value = rbc(pc, best.frame, best.weights);
    best.converged = true;
    best.point = point;
    return best;
  }
  auto eval = [&](const Mat& u) {
    const OrthantMax om = max_on_orthant(detail::pair_matrix(on, u));
    return detail::UnitaryObjective{om.value, om.a * om.a.transpose()};
  };
  Rng rng = point_rng(opt, 1, point);
  std::vector<Mat> starts{Mat::Identity(n, n)};
  for (int r = 0; r < opt.screen; ++r) starts.push_back(haar_unitary(n, rng));
  std::vector<double> score;
  for (const auto& u0 : starts) score.push_back(eval(u0).value);
  for (int r : detail::best_starts(score, opt.restarts)) {
    CurvatureExtremum ex = detail::ascend_unitary(on, starts[r], eval, opt);
    if (ex.value > best.value) best = ex;
  }
  const OrthantMax om = max_on_orthant(detail::pair_matrix(on, best.frame));
  best.weights = om.a;
  best.frame = e * best.frame;
  best.value = rbc(pc, best.frame, best.weights);
  best.point = point;
  return best;
}

/// max over unit vectors of alpha Ric(v)/|v|^2 + beta HSC(v).
inline CurvatureExtremum max_ric_perp_at_point(const PointCurvature& pc, std::size_t point,
                                               double alpha, double beta,
                                               const AscentOptions& opt = {}) {
  const int n = pc.n;
  if (alpha < 0.0 || beta < 0.0 || !(alpha > 0.0 || beta > 0.0)) {
    throw Error(ErrorCode::Parameter, "ric_perp: need alpha, beta >= 0 with at least one positive");
  }
  const Mat e = orthonormal_frame(pc.g);
  const PointCurvature on = change_basis(pc, e);
  CurvatureExtremum best;
  // w^T A w-bar = y^* A y with y = w-bar
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(on.ric));
  const Vec top = es.eigenvectors().col(n - 1).conjugate();
  if (n == 1 || beta == 0.0) {
    best.vector = top;
    best.converged = true;
  } else {
    Rng rng = point_rng(opt, 2, point);
    std::vector<Vec> starts{top};
    for (int r = 0; r < opt.screen; ++r) starts.push_back(random_unit_vector(n, rng));
    std::vector<double> score;
    for (const auto& w0 : starts) score.push_back(alpha * form_value(on.ric, w0) + beta * quad(on, w0, w0));
    for (int r : detail::best_starts(score, opt.sphere_restarts)) {
      CurvatureExtremum ex = detail::ascend_sphere(on, starts[r], alpha, beta, opt);
      if (ex.value > best.value) best = ex;
    }
  }
  best.vector = e * best.vector;
  best.frame = e;
  best.value = ric_perp(pc, best.vector, alpha, beta);
  best.point = point;
  return best;
}

inline CurvatureExtremum max_hsc_at_point(const PointCurvature& pc, std::size_t point,
                                          const AscentOptions& opt = {}) {
  const int n = pc.n;
  const Mat e = orthonormal_frame(pc.g);
  const PointCurvature on = change_basis(pc, e);
  CurvatureExtremum best;
  if (n == 1) {
    best.vector = Vec::Ones(1);
    best.converged = true;
  } else {
    Rng rng = point_rng(opt, 3, point);
    std::vector<Vec> starts{Vec::Unit(n, 0)};
    for (int r = 0; r < opt.screen; ++r) starts.push_back(random_unit_vector(n, rng));
    std::vector<double> score;
    for (const auto& w0 : starts) score.push_back(quad(on, w0, w0));
    for (int r : detail::best_starts(score, opt.sphere_restarts)) {
      CurvatureExtremum ex = detail::ascend_sphere(on, starts[r], 0.0, 1.0, opt);
      if (ex.value > best.value) best = ex;
    }
  }
  best.vector = e * best.vector;
  best.frame = e;
  best.value = hsc(pc, best.vector);
  best.point = point;
  return best;
}

/// Second-slot Ricci contraction S(a, b) = sum_i R(a, b, e_i, e_i-bar) as a form matrix.
inline Mat second_ricci(const PointCurvature& pc) {
  const int n = pc.n;
  const Mat ginv = pc.g.inverse();
  Mat s = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s(a, b) += pc(a, b, k, l) * ginv(l, k);
  return hermitian_part(s);
}

/// max over k-planes P and unit v in P of the k-Ricci curvature.
inline CurvatureExtremum max_k_ricci_at_point(const PointCurvature& pc, std::size_t point, int k,
                                              const AscentOptions& opt = {}) {
  const int n = pc.n;
  if (k < 1 || k > n) {
    throw Error(ErrorCode::Parameter, "k_ricci: k must satisfy 1 <= k <= n");
  }
  const Mat e = orthonormal_frame(pc.g);
  CurvatureExtremum best;
  if (k == 1) {
    best = max_hsc_at_point(pc, point, opt);
    best.frame = best.vector / std::sqrt(norm2(pc.g, best.vector));
  } else if (k == n) {
    // Rayleigh quotient of the second-slot trace
    const PointCurvature on = change_basis(pc, e);
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(second_ricci(on)));
    best.vector = e * es.eigenvectors().col(n - 1).conjugate();
    best.frame = e;
    best.converged = true;
  } else {
    const PointCurvature on = change_basis(pc, e);
    RMat w = RMat::Zero(n, n);
    for (int i = 0; i < k; ++i) w(0, i) = 1.0;
    auto eval = [&](const Mat& u) {
      double v = 0.0;
      for (int i = 0; i < k; ++i) v += quad(on, u.col(0), u.col(i));
      return detail::UnitaryObjective{v, w};
    };
    Rng rng = point_rng(opt, 4, point);
    std::vector<Mat> starts{Mat::Identity(n, n)};
    for (int r = 0; r < opt.screen; ++r) starts.push_back(haar_unitary(n, rng));
    std::vector<double> score;
    for (const auto& u0 : starts) score.push_back(eval(u0).value);
    for (int r : detail::best_starts(score, opt.restarts)) {
      CurvatureExtremum ex = detail::ascend_unitary(on, starts[r], eval, opt);
      if (ex.value > best.value) best = ex;
    }
    const Mat frame = e * best.frame;
    best.frame = frame.leftCols(k);
    best.vector = frame.col(0);
  }
  if (k == n) {
    // any orthonormal basis spans the whole space; put v first for reproducibility
    best.frame = e;
  }
  best.value = k_ricci(pc, best.frame.leftCols(k), best.vector);
  best.point = point;
  return best;
}

// ---------------------------------------------------------------------------
// Extremal fields

struct FunctionalSpec {
  enum class Kind { rbc, ric_perp, k_ricci } kind = Kind::rbc;
  double alpha = 1.0;
  double beta = 1.0;
  int k = 1;
};

inline const char* functional_name(FunctionalSpec::Kind k) {
  switch (k) {
    case FunctionalSpec::Kind::rbc: return "rbc";
    case FunctionalSpec::Kind::ric_perp: return "ric_perp";
    case FunctionalSpec::Kind::k_ricci: return "k_ricci";
  }
  return "?";
}

struct ExtremalField {
  ScalarField values;    // pointwise maximum of the functional
  ScalarField weighted;  // rho(max) * max: kappa for RBC, tau for Ric_perp / k-Ricci
  double global_max = -std::numeric_limits<double>::infinity();
  std::size_t argmax = 0;
  CurvatureExtremum best;
  int unconverged = 0;
  FunctionalSpec functional;
};

inline CurvatureExtremum max_functional_at_point(const PointCurvature& pc, std::size_t p,
                                                 const FunctionalSpec& f, const AscentOptions& opt) {
  switch (f.kind) {
    case FunctionalSpec::Kind::rbc: return max_rbc_at_point(pc, p, opt);
    case FunctionalSpec::Kind::ric_perp: return max_ric_perp_at_point(pc, p, f.alpha, f.beta, opt);
    case FunctionalSpec::Kind::k_ricci: return max_k_ricci_at_point(pc, p, f.k, opt);
  }
  return {};
}

/// Applies the weighting of the functional: RBC uses {1/n, 1}, the others {n+1, 2n}.
inline void apply_weighting(ExtremalField& ef, int n) {
  ef.weighted.resize(ef.values.size());
  const bool kappa = ef.functional.kind == FunctionalSpec::Kind::rbc;
  for (std::size_t p = 0; p < ef.values.size(); ++p) {
    const double m = ef.values[p];
    ef.weighted[p] = (kappa ? rho_kappa(m, n) : rho_tau(m, n)) * m;
  }
}

inline ExtremalField extremal_field(const Grid& grid, const CurvatureTensorField& curv,
                                    const HermitianField& g, const FunctionalSpec& f,
                                    const AscentOptions& opt = {}) {
  const std::size_t P = grid.size();
  ExtremalField ef;
  ef.functional = f;
  ef.values.assign(P, 0.0);
  std::vector<char> conv(P, 1);
  std::vector<CurvatureExtremum> keep(1);
  const long long PP = static_cast<long long>(P);
#pragma omp parallel for schedule(dynamic, 64)
  for (long long ip = 0; ip < PP; ++ip) {
    const std::size_t p = static_cast<std::size_t>(ip);
    const PointCurvature pc = point_curvature(curv, g, p);
    const CurvatureExtremum ex = max_functional_at_point(pc, p, f, opt);
    ef.values[p] = ex.value;
    conv[p] = ex.converged ? 1 : 0;
  }
  for (std::size_t p = 0; p < P; ++p) {
    if (ef.values[p] > ef.global_max) {
      ef.global_max = ef.values[p];
      ef.argmax = p;
    }
    if (!conv[p]) ++ef.unconverged;
  }
  ef.best = max_functional_at_point(point_curvature(curv, g, ef.argmax), ef.argmax, f, opt);
  apply_weighting(ef, grid.dim());
  return ef;
}

/// Extremal field from precomputed pointwise maxima (for mock data and tests).
inline ExtremalField extremal_from_values(ScalarField values, const FunctionalSpec& f, int n) {
  ExtremalField ef;
  ef.functional = f;
  ef.values = std::move(values);
  for (std::size_t p = 0; p < ef.values.size(); ++p) {
    if (ef.values[p] > ef.global_max) {
      ef.global_max = ef.values[p];
      ef.argmax = p;
    }
  }
  apply_weighting(ef, n);
  return ef;
}

/// Pointwise max-HSC field.
inline ScalarField max_hsc_field(const Grid& grid, const CurvatureTensorField& curv,
                                 const HermitianField& g, const AscentOptions& opt = {}) {
  ScalarField out(grid.size());
  const long long PP = static_cast<long long>(grid.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long long ip = 0; ip < PP; ++ip) {
    const std::size_t p = static_cast<std::size_t>(ip);
    out[p] = max_hsc_at_point(point_curvature(curv, g, p), p, opt).value;
  }
  return out;
}

/// mu_eta = max of the unweighted field; lambda for the Ric_perp functional.
inline double mu_eta(const ExtremalField& ef) { return ef.global_max; }
inline double lambda_max(const ExtremalField& ef) { return ef.global_max; }

}  // namespace kgap
