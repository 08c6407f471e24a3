#include <gtest/gtest.h>

#include <cmath>

#include "kgap/functionals.hpp"
#include "oracles.hpp"

using namespace kgap;

namespace {

PointCurvature to_point(const oracle::PointTensor& t) {
  PointCurvature pc;
  pc.n = t.n;
  pc.R = t.R;
  pc.g = t.g;
  pc.ric = oracle::ricci_trace_first(t);
  return pc;
}

// Curvature of I + dd^c phi at a random point, by finite differences.
oracle::PointTensor random_kahler_tensor(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (;;) {
    const auto modes = oracle::random_potential(n, 4, 0.015, rng);
    std::vector<double> x(2 * n);
    for (auto& v : x) v = ud(rng);
    oracle::MatFn gf = [&](const std::vector<double>& y) { return oracle::kahler_metric(modes, n, y); };
    const auto g = gf(x);
    if (Eigen::SelfAdjointEigenSolver<oracle::CMat>(g).eigenvalues().minCoeff() < 0.3) continue;
    return oracle::chern_fd(gf, n, x);
  }
}

// Generic Hermitian metric with a non-Kahler curvature tensor.
oracle::PointTensor random_conformal_tensor(int n, std::mt19937_64& rng) {
  const auto lam = oracle::random_potential(n, 3, 0.2, rng);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<double> x(2 * n);
  for (auto& v : x) v = ud(rng);
  oracle::MatFn gf = [&](const std::vector<double>& y) {
    return oracle::CMat(std::exp(oracle::series(lam, y)) * oracle::CMat::Identity(n, n));
  };
  return oracle::chern_fd(gf, n, x);
}

// frame^T G conj(frame) - I
double gram_defect(const oracle::CMat& g, const Mat& f) {
  const oracle::CMat F = f;
  return (F.transpose() * g * F.conjugate() - oracle::CMat::Identity(F.cols(), F.cols())).cwiseAbs().maxCoeff();
}

double oracle_ric_perp(const oracle::PointTensor& t, const oracle::CVec& v, double a, double b) {
  const oracle::CMat ric = oracle::ricci_trace_first(t);
  const double q = oracle::gnorm2(t.g, v);
  const double r = (v.transpose() * ric * v.conjugate())(0, 0).real();
  return a * r / q + b * oracle::hsc(t, v);
}

double ric_perp_sample_max(const oracle::PointTensor& t, double a, double b, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double best = -1e300;
  for (int s = 0; s < samples; ++s) {
    oracle::CVec v(t.n);
    for (int i = 0; i < t.n; ++i) v(i) = cd(nd(rng), nd(rng));
    best = std::max(best, oracle_ric_perp(t, v, a, b));
  }
  return best;
}

// sum_i Q(v, e_i) over an orthonormal basis of a random k-plane containing v
double k_ricci_sample_max(const oracle::PointTensor& t, int k, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const oracle::CMat e = oracle::g_orthonormal(t.g);
  double best = -1e300;
  for (int s = 0; s < samples; ++s) {
    const oracle::CMat f = e * oracle::haar(t.n, rng);
    double v = 0.0;
    for (int i = 0; i < k; ++i) v += oracle::form(t, f.col(0), f.col(0), f.col(i), f.col(i)).real();
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

TEST(Hsc, MatchesOracleOnRandomVectors) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int n : {1, 2, 3}) {
    const auto t = random_kahler_tensor(n, rng);
    const auto pc = to_point(t);
    for (int s = 0; s < 5; ++s) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = cd(nd(rng), nd(rng));
      EXPECT_NEAR(hsc(pc, v), oracle::hsc(t, oracle::CVec(v)), 1e-12);
    }
  }
}

TEST(Hsc, ZeroVectorRejected) {
  const auto pc = to_point(oracle::space_form(2, 1.0));
  try {
    hsc(pc, Vec::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parameter);
  }
}

TEST(SpaceForm, ExtremaAreClosedForm) {
  for (int n : {1, 2, 3}) {
    const double c = 1.5;
    const auto pc = to_point(oracle::space_form(n, c));
    EXPECT_NEAR(max_rbc_at_point(pc, 0).value, -c, 1e-10) << n;
    EXPECT_NEAR(max_hsc_at_point(pc, 0).value, -c, 1e-10) << n;
    EXPECT_NEAR(max_ric_perp_at_point(pc, 0, 1.0, 2.0).value, -c * (n + 1) / 2.0 - 2.0 * c, 1e-10) << n;
    for (int k = 1; k <= n; ++k)
      EXPECT_NEAR(max_k_ricci_at_point(pc, 0, k).value, -c * (k + 1) / 2.0, 1e-9) << n << " k=" << k;
  }
}

TEST(Rbc, DiagonalTensorMaximumIsLargestEntry) {
  PointCurvature pc;
  pc.n = 2;
  pc.R.assign(16, 0.0);
  pc(0, 0, 0, 0) = -1.0;
  pc(1, 1, 1, 1) = 0.5;
  pc.g = Mat::Identity(2, 2);
  pc.ric = Mat::Zero(2, 2);
  const auto ex = max_rbc_at_point(pc, 0);
  EXPECT_NEAR(ex.value, 0.5, 1e-10);
  EXPECT_GE(ex.weights.minCoeff(), 0.0);
  EXPECT_NEAR(ex.weights.norm(), 1.0, 1e-12);
}

TEST(Rbc, RankOneEqualsHsc) {
  std::mt19937_64 rng(2);
  for (int n : {2, 3}) {
    const auto t = random_kahler_tensor(n, rng);
    const auto pc = to_point(t);
    const Mat e = orthonormal_frame(pc.g) * Mat(oracle::haar(n, rng));
    RVec a = RVec::Zero(n);
    a(0) = 1.0;
    EXPECT_NEAR(rbc(pc, e, a), hsc(pc, e.col(0)), 1e-10);
  }
}

TEST(Rbc, MaximumDominatesSampledFramesAndHsc) {
  std::mt19937_64 rng(3);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto t = trial == 2 ? random_conformal_tensor(n, rng) : random_kahler_tensor(n, rng);
      const auto pc = to_point(t);
      const auto ex = max_rbc_at_point(pc, 0);
      EXPECT_GE(ex.value, oracle::rbc_sample_max(t, 4000, 100 + trial) - 1e-10) << "n=" << n;
      EXPECT_GE(ex.value, oracle::hsc_sample_max(t, 2000, 200 + trial) - 1e-10);
      // the certificate reproduces the value under the oracle
      EXPECT_LE(gram_defect(t.g, ex.frame), 1e-10);
      EXPECT_NEAR(oracle::rbc(t, ex.frame, ex.weights), ex.value, 1e-10);
    }
  }
}

TEST(Rbc, RejectsBadFramesAndWeights) {
  const auto pc = to_point(oracle::space_form(2, 1.0));
  auto expect_parameter = [](auto&& f) {
    try {
      f();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parameter);
    }
  };
  expect_parameter([&] { rbc(pc, 2.0 * Mat::Identity(2, 2), RVec::Ones(2)); });
  expect_parameter([&] { rbc(pc, Mat::Identity(2, 2), RVec::Zero(2)); });
  RVec neg(2);
  neg << 1.0, -0.1;
  expect_parameter([&] { rbc(pc, Mat::Identity(2, 2), neg); });
}

TEST(RicPerp, MaximumDominatesSampledVectors) {
  std::mt19937_64 rng(4);
  for (int n : {1, 2, 3})
    for (auto [a, b] : {std::pair{1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}, {0.3, 2.0}}) {
      const auto t = random_kahler_tensor(n, rng);
      const auto ex = max_ric_perp_at_point(to_point(t), 0, a, b);
      EXPECT_GE(ex.value, ric_perp_sample_max(t, a, b, 3000, 9) - 1e-10) << n << " " << a << " " << b;
      EXPECT_NEAR(oracle_ric_perp(t, oracle::CVec(ex.vector), a, b), ex.value, 1e-10);
    }
}

TEST(RicPerp, RejectsNonPositiveCoefficients) {
  const auto pc = to_point(oracle::space_form(2, 1.0));
  for (auto [a, b] : {std::pair{0.0, 0.0}, {-1.0, 1.0}, {1.0, -0.5}}) {
    try {
      max_ric_perp_at_point(pc, 0, a, b);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parameter);
    }
  }
}

TEST(KRicci, ExtremesReduceToHscAndRicci) {
  std::mt19937_64 rng(5);
  for (int n : {2, 3}) {
    const auto t = random_kahler_tensor(n, rng);
    const auto pc = to_point(t);
    EXPECT_NEAR(max_k_ricci_at_point(pc, 0, 1).value, max_hsc_at_point(pc, 0).value, 1e-12);
    // k = n: top eigenvalue of the last-pair trace relative to g
    const oracle::CMat s = oracle::ricci_trace_last(t);
    Eigen::GeneralizedSelfAdjointEigenSolver<oracle::CMat> es(s.conjugate(), t.g.conjugate());
    EXPECT_NEAR(max_k_ricci_at_point(pc, 0, n).value, es.eigenvalues().maxCoeff(), 1e-10);
  }
}

TEST(KRicci, IntermediateMaximumDominatesSampledPlanes) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const auto t = random_kahler_tensor(3, rng);
    const auto ex = max_k_ricci_at_point(to_point(t), 0, 2);
    EXPECT_GE(ex.value, k_ricci_sample_max(t, 2, 4000, 50 + trial) - 1e-10);
    EXPECT_EQ(ex.frame.cols(), 2);
    EXPECT_LE(gram_defect(t.g, ex.frame), 1e-10);
  }
}

TEST(KRicci, RejectsBadArguments) {
  const auto pc = to_point(oracle::space_form(2, 1.0));
  for (int k : {0, 3}) {
    try {
      max_k_ricci_at_point(pc, 0, k);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parameter);
    }
  }
  // vector outside the plane
  Mat basis = Mat::Identity(2, 1);
  try {
    k_ricci(pc, basis, Vec::Unit(2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parameter);
  }
}

TEST(Orthant, MatchesDenseSearch) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    RMat A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);
    const auto om = max_on_orthant(A);
    double best = -1e300;
    const int m = 60;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m - i; ++j) {
        Eigen::Vector3d a(i, j, m - i - j);
        a.normalize();
        best = std::max(best, a.dot(A * a));
      }
    EXPECT_GE(om.value, best - 1e-12);
    EXPECT_LE(om.value, best + 0.05);
    EXPECT_NEAR(om.a.dot(A * om.a), om.value, 1e-12);
    EXPECT_GE(om.a.minCoeff(), 0.0);
  }
}

TEST(Weighting, PiecewiseFactors) {
  EXPECT_DOUBLE_EQ(rho_kappa(-2.0, 2), 0.5);
  EXPECT_DOUBLE_EQ(rho_kappa(0.0, 3), 1.0 / 3);
  EXPECT_DOUBLE_EQ(rho_kappa(0.1, 3), 1.0);
  EXPECT_DOUBLE_EQ(rho_tau(-1.0, 2), 3.0);
  EXPECT_DOUBLE_EQ(rho_tau(1.0, 2), 4.0);
  const auto ef = extremal_from_values({-2.0, 0.5, -0.1}, {FunctionalSpec::Kind::rbc}, 2);
  EXPECT_DOUBLE_EQ(ef.weighted[0], -1.0);
  EXPECT_DOUBLE_EQ(ef.weighted[1], 0.5);
  EXPECT_EQ(ef.argmax, 1u);
  const auto et = extremal_from_values({-2.0, 0.5}, {FunctionalSpec::Kind::ric_perp}, 2);
  EXPECT_DOUBLE_EQ(et.weighted[0], -6.0);
  EXPECT_DOUBLE_EQ(et.weighted[1], 2.0);
}

TEST(ExtremalField, SpaceFormIsConstant) {
  const Grid g = make_grid(2, 8);
  const auto curv = synthetic_curvature(g, {CurvatureOverride::Kind::space_form, 1.0, {}});
  const auto metric = flat_metric(g);
  const auto ef = extremal_field(g, curv, metric.g, {FunctionalSpec::Kind::rbc});
  for (double v : ef.values) EXPECT_NEAR(v, -1.0, 1e-10);
  for (double v : ef.weighted) EXPECT_NEAR(v, -0.5, 1e-10);
  EXPECT_EQ(ef.unconverged, 0);
}

TEST(ExtremalField, DeterministicForFixedSeed) {
  std::mt19937_64 rng(11);
  const auto t = random_kahler_tensor(3, rng);
  AscentOptions opt;
  opt.seed = 42;
  const auto a = max_rbc_at_point(to_point(t), 17, opt);
  const auto b = max_rbc_at_point(to_point(t), 17, opt);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.iterations, b.iterations);
}
