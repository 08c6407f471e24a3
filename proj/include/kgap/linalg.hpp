#pragma once

// Small dense Hermitian linear algebra at a single grid point (n <= 3).
//
// Index convention: a Hermitian matrix A stores the form components
// A(i, j) = A_{i jbar}. The form evaluated on a (1,0)-vector v is
//   A(v, vbar) = sum_ij A_{i jbar} v^i conj(v^j) = v^T A conj(v),
// and the trace against a metric g is tr_g A = g^{i jbar} A_{i jbar} = tr(G^{-1} A).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>

#include "kgap/rng.hpp"

namespace kgap {

using cd = std::complex<double>;
using Mat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using Vec = Eigen::Matrix<cd, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

/// Form value A(v, vbar).
inline double form_value(const Mat& a, const Vec& v) {
  return (v.transpose() * a * v.conjugate())(0, 0).real();
}

/// |v|_g^2 for the metric g.
inline double norm2(const Mat& g, const Vec& v) { return form_value(g, v); }

inline cd inner(const Mat& g, const Vec& v, const Vec& w) {
  return (v.transpose() * g * w.conjugate())(0, 0);
}

/// tr(G^{-1} A).
inline double trace_against(const Mat& a, const Mat& g) {
  return (g.llt().solve(a)).trace().real();
}

/// Eigenvalues (ascending) of the pencil A relative to B, B positive definite.
/// These are the extremal values of A(v,vbar)/B(v,vbar).
inline RVec relative_eigenvalues(const Mat& a, const Mat& b) {
  Eigen::LLT<Mat> llt(b);
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(b.rows(), b.cols()));
  const Mat c = hermitian_part(l_inv * a * l_inv.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(c, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_relative_eigenvalue(const Mat& a, const Mat& b) {
  return relative_eigenvalues(a, b)(0);
}
inline double max_relative_eigenvalue(const Mat& a, const Mat& b) {
  const RVec ev = relative_eigenvalues(a, b);
  return ev(ev.size() - 1);
}

inline RVec hermitian_eigenvalues(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// log det of a positive-definite Hermitian matrix; empty when a Cholesky
/// factorization does not exist.
inline std::optional<double> log_det_pd(const Mat& a) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  double s = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double d = l(i, i).real();
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    s += 2.0 * std::log(d);
  }
  return s;
}

inline double det_real(const Mat& a) { return a.determinant().real(); }

/// Columns form a g-orthonormal frame: <e_p, e_q>_g = delta_pq.
/// With G = L L^*, this is E = (L^{-1})^T.
inline Mat orthonormal_frame(const Mat& g) {
  Eigen::LLT<Mat> llt(g);
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(g.rows(), g.cols()));
  return l_inv.transpose();
}

/// Gram matrix <e_p, e_q>_g of the columns of `frame`.
inline Mat gram(const Mat& g, const Mat& frame) {
  return frame.transpose() * g * frame.conjugate();
}

/// Haar-distributed unitary matrix (QR of a complex Gaussian matrix with the
/// phases of R's diagonal folded back into Q).
inline Mat haar_unitary(int n, Rng& rng) {
  Mat z(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const cd d = r(j, j);
    const double ad = std::abs(d);
    if (ad > 0.0) q.col(j) *= d / ad;
  }
  return q;
}

inline Vec random_unit_vector(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.complex_normal();
  return v / v.norm();
}

/// Cayley retraction U (I - s/2 X)^{-1} (I + s/2 X) for skew-Hermitian X.
inline Mat cayley_step(const Mat& u, const Mat& x, double s) {
  const Eigen::Index n = u.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat lhs = id - 0.5 * s * x;
  const Mat rhs = id + 0.5 * s * x;
  return u * lhs.partialPivLu().solve(rhs);
}

}  // namespace kgap
