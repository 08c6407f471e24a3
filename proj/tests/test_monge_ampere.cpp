#include <gtest/gtest.h>

#include <cmath>

#include "kgap/monge_ampere.hpp"
#include "support.hpp"

using namespace kgap;
using support::manufactured;
using support::max_error;
using support::to_series;

namespace {

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

MABackground flat_background(int n, int N) {
  const Grid g = make_grid(n, N);
  const auto g0 = flat_metric(g).g;
  return make_background(g, g0, 0.0 * g0);
}

}  // namespace

TEST(Solver, RecoversManufacturedSolutionOnCurve) {
  auto m = manufactured(1, 64, 0.01, 2.0, 3);
  ASSERT_GT(m.pr.chi_min_eig, 0.0);
  const auto r = solve_ma(m.bg, m.pr, {});
  EXPECT_LE(max_error(r.phi, m.exact), 1e-8);
  EXPECT_LE(r.stats.residual, 1e-10);
  EXPECT_GT(r.stats.min_eig, 0.0);
}

TEST(Solver, RecoversManufacturedSolutionOnSurface) {
  auto m = manufactured(2, 16, 0.003, 6.0, 3);
  ASSERT_GT(m.pr.chi_min_eig, 0.0);
  const auto r = solve_ma(m.bg, m.pr, {});
  EXPECT_LE(max_error(r.phi, m.exact), 1e-5);
}

TEST(Solver, NewtonConvergesQuadratically) {
  auto m = manufactured(1, 64, 0.01, 2.0, 5);
  const auto h = solve_ma(m.bg, m.pr, {}).stats.residual_history;
  ASSERT_GE(h.size(), 4u);
  // once in the asymptotic regime r_{k+1} <= C r_k^2 with a modest C
  int checked = 0;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    if (h[k] > 1e-2 || h[k + 1] < 1e-13) continue;
    EXPECT_LE(h[k + 1], 10.0 * h[k] * h[k]) << "step " << k;
    ++checked;
  }
  EXPECT_GE(checked, 1);
}

TEST(Solver, SolutionIsIndependentOfInitialGuess) {
  auto m = manufactured(1, 32, 0.01, 2.0, 7);
  const auto a = solve_ma(m.bg, m.pr, {});
  ScalarField guess(m.bg.grid.size());
  for (std::size_t p = 0; p < guess.size(); ++p) guess[p] = 0.3 + 0.01 * std::sin(2 * oracle::kPi * m.bg.grid.coord(p, 0));
  const auto b = solve_ma(m.bg, m.pr, guess);
  EXPECT_LE(max_error(a.phi, b.phi), 1e-9);
}

TEST(Solver, FlatClosedForms) {
  // (t omega0 + dd^c phi)^n = e^{c phi} omega0^n has the constant solution phi = n log t / c
  for (int n : {1, 2}) {
    const auto bg = flat_background(n, 8);
    for (double t : {0.7, 1.3}) {
      const auto p1 = assemble_problem(bg, Mode::thm1, t, 0.0, 1.0, 1.0);
      const auto r1 = solve_ma(bg, p1, {});
      for (double v : r1.phi) EXPECT_NEAR(v, n * std::log(t), 1e-10);
      const auto p2 = assemble_problem(bg, Mode::thm2, t, 1.0, 1.0, 1.0);
      EXPECT_DOUBLE_EQ(p2.c, 1.5);
      const auto r2 = solve_ma(bg, p2, {});
      for (double v : r2.phi) EXPECT_NEAR(v, n * std::log(t) / 1.5, 1e-10);
    }
  }
}

TEST(Solver, RejectsNonAdmissibleStart) {
  const auto bg = flat_background(1, 16);
  const auto pr = assemble_problem(bg, Mode::thm1, 0.5, 0.0, 1.0, 1.0);
  const auto bump = TrigSeries::cosine({1, 0}, 0.2).sample(bg.grid);  // dd^c bump dips to -2
  try {
    solve_ma(bg, pr, bump);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(e.code(), ErrorCode::Precondition);
    EXPECT_LT(e.min_eigenvalue(), 0.0);
  }
}

TEST(Solver, IterationCapIsReported) {
  auto m = manufactured(1, 32, 0.01, 2.0, 3);
  SolverOptions opt;
  opt.max_iter = 1;
  try {
    solve_ma(m.bg, m.pr, {}, opt);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MaxIterExceeded);
    EXPECT_GT(e.residual(), opt.tol);
    EXPECT_DOUBLE_EQ(e.t(), m.pr.t);
  }
}

TEST(Problem, ParameterValidation) {
  const auto bg = flat_background(1, 8);
  expect_code(ErrorCode::Parameter, [&] { assemble_problem(bg, Mode::thm2, 1.0, 1.0, 0.0, 1.0); });
  expect_code(ErrorCode::Parameter, [&] { assemble_problem(bg, Mode::thm1, 1.0, 0.0, 1.0, 0.0); });
  EXPECT_DOUBLE_EQ(exponent_c(Mode::thm2, 2.0, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(exponent_c(Mode::thm1, 2.0, 0.5), 1.0);
}

TEST(Problem, PotentialUAddsScaledPsi) {
  const Grid g = make_grid(1, 8);
  const auto g0 = flat_metric(g).g;
  ScalarField psi = TrigSeries::cosine({0, 1}, 0.01).sample(g);
  const auto bg = make_background(g, g0, 0.0 * g0, psi);
  EXPECT_NEAR(*std::max_element(bg.psi.begin(), bg.psi.end()), 0.0, 1e-16);
  const auto pr = assemble_problem(bg, Mode::thm1, 0.5, 0.0, 1.0, 2.0);
  const ScalarField phi(g.size(), 1.0);
  const auto u = potential_u(bg, pr, phi);
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_NEAR(u[p], 1.0 + 0.25 * bg.psi[p], 1e-15);
  const auto pr2 = assemble_problem(bg, Mode::thm2, 0.5, 1.0, 1.0, 2.0);
  EXPECT_EQ(potential_u(bg, pr2, phi), phi);
}

TEST(Schedule, Points) {
  Schedule lin;
  lin.t_start = 1.0;
  lin.t_end = 0.2;
  lin.steps = 4;
  const auto a = schedule_points(lin);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_NEAR(a[1], 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(a.back(), 0.2);
  Schedule geo = lin;
  geo.rule = Schedule::Rule::geometric;
  geo.ratio = 0.5;
  EXPECT_EQ(schedule_points(geo), (std::vector<double>{1.0, 0.5, 0.25, 0.2}));
  Schedule bad;
  bad.rule = Schedule::Rule::list;
  bad.values = {1.0, 0.5, 0.5};
  expect_code(ErrorCode::Config, [&] { schedule_points(bad); });
  geo.ratio = 1.0;
  expect_code(ErrorCode::Config, [&] { schedule_points(geo); });
}

TEST(Continuation, FlatPathFollowsClosedForm) {
  const auto bg = flat_background(1, 16);
  Schedule s;
  s.rule = Schedule::Rule::list;
  s.values = {1.0, 0.8, 0.5, 0.3};
  ContinuationParams cp;
  int seen = 0;
  const auto path = run_continuation(bg, bg.g0, s, cp, [&](const PathSample&, const ContinuityPath&) { ++seen; });
  EXPECT_TRUE(path.completed);
  EXPECT_EQ(path.termination, "reached t_end");
  ASSERT_EQ(path.samples.size(), 4u);
  EXPECT_EQ(seen, 4);
  for (const auto& smp : path.samples) {
    EXPECT_NEAR(smp.diag.sup_u, std::log(smp.t), 1e-10);
    EXPECT_NEAR(smp.diag.int_exp_u, smp.t, 1e-10);
    EXPECT_NEAR(smp.diag.sup_tr_eta, 1.0 / smp.t, 1e-10);  // tr_{t omega0} omega0
    EXPECT_NEAR(smp.diag.min_eig, smp.t, 1e-10);
  }
  // int e^u = t is linear in t, so the tail fit is exact
  const auto c3 = estimate_c3(path, 0.0);
  EXPECT_NEAR(c3.extrapolated, 0.0, 1e-10);
  EXPECT_NEAR(c3.minimum, 0.3, 1e-10);
  EXPECT_EQ(c3.tail, 3u);
  expect_code(ErrorCode::InsufficientSamples, [&] { estimate_c3(path, 0.6); });
}

TEST(Continuation, StopsAtThreshold) {
  const auto bg = flat_background(1, 8);
  Schedule s;
  s.rule = Schedule::Rule::list;
  s.values = {1.0, 0.8, 0.6, 0.4, 0.2};
  ContinuationParams cp;
  cp.threshold = 0.5;
  const auto path = run_continuation(bg, bg.g0, s, cp);
  EXPECT_FALSE(path.completed);
  EXPECT_EQ(path.samples.size(), 3u);
  EXPECT_EQ(path.termination, "reached the existence threshold");
  cp.threshold = 1.0;
  expect_code(ErrorCode::Precondition, [&] { run_continuation(bg, bg.g0, s, cp); });
}

TEST(Continuation, ThresholdFormulas) {
  EXPECT_DOUBLE_EQ(path_threshold(Mode::thm1, 2, 0.25, 0.0, 3.0), 1.5);
  EXPECT_DOUBLE_EQ(path_threshold(Mode::thm2, 2, 0.3, 1.0, 1.0), 2.0 * 2 * 0.3 / 3.0);
  EXPECT_DOUBLE_EQ(path_threshold(Mode::thm2, 2, -0.3, 1.0, 1.0), 0.0);
  EXPECT_TRUE(std::isnan(path_threshold(Mode::thm2, 2, 0.3, 0.0, 1.0)));
}
