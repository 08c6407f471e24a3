#pragma once

// Complex Monge-Ampere equations of continuity-method type,
//   (chi + dd^c phi)^n = F e^{c phi} omega0^n,
// solved in log form by inexact Newton-Krylov, plus decreasing-t continuation.
//
//   thm1: chi = t (omega0 + dd^c psi / delta1) - Ric,  c = 1,               u = phi + t psi / delta1
//   thm2: chi = t omega0 - Ric,                        c = 1 + alpha/(2 beta), u = phi

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kgap/gmres.hpp"
#include "kgap/metric.hpp"

namespace kgap {

enum class Mode { thm1, thm2 };

inline const char* mode_name(Mode m) { return m == Mode::thm1 ? "thm1" : "thm2"; }

/// Geometry data shared by every solve along a path.
struct MABackground {
  Grid grid;
  HermitianField g0;
  HermitianField ric;
  ScalarField psi;  // normalized to sup psi = 0
  HermitianField ddc_psi;
  ScalarField log_det_g0;
  ScalarField det_g0;
};

inline MABackground make_background(const Grid& grid, const HermitianField& g0,
                                    const HermitianField& ric, ScalarField psi = {}) {
  MABackground bg{grid, g0, ric, {}, {}, {}, {}};
  if (psi.empty()) psi.assign(grid.size(), 0.0);
  grid.check_size(psi.size());
  const double m = *std::max_element(psi.begin(), psi.end());
  for (auto& x : psi) x -= m;
  bg.psi = std::move(psi);
  bg.ddc_psi = ddc(grid, bg.psi);
  bg.log_det_g0 = log_det_field(grid, g0);
  bg.det_g0.resize(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) bg.det_g0[p] = std::exp(bg.log_det_g0[p]);
  return bg;
}

struct MAProblem {
  Mode mode = Mode::thm1;
  double t = 1.0;
  double c = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
  double delta1 = 1.0;
  HermitianField chi;
  ScalarField log_f;  // extra density factor (manufactured solutions); empty means F = 1
  double chi_min_eig = 0.0;
};

inline double exponent_c(Mode mode, double alpha, double beta) {
  if (mode == Mode::thm1) return 1.0;
  if (!(beta > 0.0)) {
    throw Error(ErrorCode::Parameter, "thm2 equation needs beta > 0 (exponent 1 + alpha/(2 beta))");
  }
  return 1.0 + alpha / (2.0 * beta);
}

inline MAProblem assemble_problem(const MABackground& bg, Mode mode, double t, double alpha,
                                  double beta, double delta1) {
  MAProblem pr;
  pr.mode = mode;
  pr.t = t;
  pr.alpha = alpha;
  pr.beta = beta;
  pr.delta1 = delta1;
  pr.c = exponent_c(mode, alpha, beta);
  if (mode == Mode::thm1 && !(delta1 > 0.0)) {
    throw Error(ErrorCode::Parameter, "thm1 equation needs delta1 > 0");
  }
  const std::size_t P = bg.grid.size();
  const int n = bg.grid.dim();
  pr.chi = HermitianField(n, P);
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < P; ++p) {
    Mat x = t * bg.g0.at(p) - bg.ric.at(p);
    if (mode == Mode::thm1) x += (t / delta1) * bg.ddc_psi.at(p);
    pr.chi.set(p, x);
    mn = std::min(mn, min_relative_eigenvalue(x, bg.g0.at(p)));
  }
  pr.chi_min_eig = mn;
  return pr;
}

/// u = phi + t psi / delta1 (thm1) or phi (thm2).
inline ScalarField potential_u(const MABackground& bg, const MAProblem& pr, const ScalarField& phi) {
  ScalarField u = phi;
  if (pr.mode == Mode::thm1)
    for (std::size_t p = 0; p < u.size(); ++p) u[p] += pr.t / pr.delta1 * bg.psi[p];
  return u;
}

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double positivity_floor = 1e-6;
  GmresOptions gmres{30, 600, 1e-10, 0.0};
  double forcing_max = 1e-2;
  double forcing_floor = 1e-12;
};

struct SolveStats {
  int newton_iterations = 0;
  int gmres_iterations = 0;
  double residual = 0.0;  // sup norm of the final residual
  double min_eig = 0.0;   // min eigenvalue of omega_phi relative to omega0
  std::vector<double> residual_history;
};

struct SolveResult {
  ScalarField phi;
  SolveStats stats;
};

/// omega_phi = chi + dd^c phi.
inline HermitianField omega_phi(const Grid& grid, const MAProblem& pr, const ScalarField& phi) {
  HermitianField w = ddc(grid, phi);
  w += pr.chi;
  return w;
}

namespace detail {

struct NewtonState {
  HermitianField omega;
  ScalarField residual;
  double sup_residual = 0.0;
  double min_eig = 0.0;
  bool admissible = false;
};

inline NewtonState evaluate_state(const MABackground& bg, const MAProblem& pr, const ScalarField& phi,
                                  double floor) {
  NewtonState s;
  s.omega = omega_phi(bg.grid, pr, phi);
  const std::size_t P = bg.grid.size();
  s.residual.resize(P);
  s.min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < P; ++p) {
    const Mat w = s.omega.at(p);
    s.min_eig = std::min(s.min_eig, min_relative_eigenvalue(w, bg.g0.at(p)));
  }
  s.admissible = s.min_eig >= floor && std::isfinite(s.min_eig);
  if (!s.admissible) return s;
  double sup = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const auto ld = log_det_pd(s.omega.at(p));
    if (!ld) {
      s.admissible = false;
      return s;
    }
    double r = *ld - bg.log_det_g0[p] - pr.c * phi[p];
    if (!pr.log_f.empty()) r -= pr.log_f[p];
    s.residual[p] = r;
    sup = std::max(sup, std::fabs(r));
  }
  s.sup_residual = sup;
  return s;
}

}  // namespace detail

/// Linearized operator J d = tr_omega(dd^c d) - c d and its flat preconditioner.
class MALinearization {
 public:
  MALinearization(const Grid& grid, const HermitianField& omega, double c) : grid_(grid), c_(c) {
    const int n = grid.dim();
    const std::size_t P = grid.size();
    inv_ = HermitianField(n, P);
    double a = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const Mat hi = omega.at(p).inverse();
      inv_.set(p, hi);
      a += hi.trace().real();
    }
    a /= static_cast<double>(P) * n;
    precond_.resize(P);
    for (std::size_t m = 0; m < P; ++m) {
      cd sym = 0.0;
      for (int k = 0; k < n; ++k) sym += grid.symbol(m, k, false) * grid.symbol(m, k, true);
      precond_[m] = 1.0 / (a * sym.real() - c);
    }
  }

  void apply(const std::vector<double>& d, std::vector<double>& out) const {
    const int n = grid_.dim();
    const std::size_t P = grid_.size();
    const ComplexField spec = grid_.spectrum(std::span<const double>(d));
    out.assign(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) out[p] = -c_ * d[p];
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const ComplexField h = mixed_from_spectrum(grid_, spec, i, j);
        // tr(G^{-1} A) = sum_ij (G^{-1})_{ji} A_{ij}; Hermitian pair folded together
        for (std::size_t p = 0; p < P; ++p) {
          if (i == j) {
            out[p] += (inv_(p, i, i) * h[p].real()).real();
          } else {
            out[p] += 2.0 * (inv_(p, j, i) * h[p]).real();
          }
        }
      }
  }

  void precondition(const std::vector<double>& x, std::vector<double>& out) const {
    ComplexField s(x.begin(), x.end());
    grid_.forward(s);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= precond_[m];
    grid_.backward(s);
    out.resize(x.size());
    for (std::size_t p = 0; p < x.size(); ++p) out[p] = s[p].real();
  }

 private:
  Grid grid_;
  double c_;
  HermitianField inv_;
  std::vector<double> precond_;
};

inline SolveResult solve_ma(const MABackground& bg, const MAProblem& pr, ScalarField phi,
                            const SolverOptions& opt = {}) {
  const Grid& grid = bg.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (phi.empty()) phi.assign(grid.size(), 0.0);
  grid.check_size(phi.size());
  SolveResult out;
  detail::NewtonState st = detail::evaluate_state(bg, pr, phi, opt.positivity_floor);
  if (!st.admissible) {
    throw SolverError(ErrorCode::Precondition, pr.t, nan, st.min_eig,
                      "initial potential does not give a positive definite omega_t (min eigenvalue " +
                          std::to_string(st.min_eig) + ")");
  }
  out.stats.residual_history.push_back(st.sup_residual);
  int it = 0;
  while (st.sup_residual > opt.tol) {
    if (it >= opt.max_iter) {
      throw SolverError(ErrorCode::MaxIterExceeded, pr.t, st.sup_residual, st.min_eig,
                        "Newton iteration did not reach tolerance in " + std::to_string(opt.max_iter) +
                            " steps (residual " + std::to_string(st.sup_residual) + ")");
    }
    ++it;
    MALinearization lin(grid, st.omega, pr.c);
    std::vector<double> rhs(st.residual.size());
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] = -st.residual[p];
    GmresOptions go = opt.gmres;
    go.rel_tol = std::max(opt.forcing_floor, std::min(opt.forcing_max, st.sup_residual));
    std::vector<double> delta(rhs.size(), 0.0);
    const GmresResult gr = gmres([&](const std::vector<double>& x, std::vector<double>& y) { lin.apply(x, y); },
                                 [&](const std::vector<double>& x, std::vector<double>& y) { lin.precondition(x, y); },
                                 rhs, delta, go);
    out.stats.gmres_iterations += gr.iterations;
    if (!gr.converged && !(gr.residual < 0.5 * gr.rhs_norm)) {
      throw SolverError(ErrorCode::LinearSolveFailure, pr.t, st.sup_residual, st.min_eig,
                        "Krylov solve of the linearized equation failed (relative residual " +
                            std::to_string(gr.residual / std::max(gr.rhs_norm, 1e-300)) + ")");
    }
    double step = 1.0;
    bool accepted = false;
    bool positivity_blocked = false;
    ScalarField trial(phi.size());
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      for (std::size_t p = 0; p < phi.size(); ++p) trial[p] = phi[p] + step * delta[p];
      detail::NewtonState ns = detail::evaluate_state(bg, pr, trial, opt.positivity_floor);
      if (!ns.admissible) {
        positivity_blocked = true;
        continue;
      }
      if (ns.sup_residual < st.sup_residual || ns.sup_residual <= opt.tol) {
        phi.swap(trial);
        st = std::move(ns);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (positivity_blocked) {
        throw SolverError(ErrorCode::PositivityLoss, pr.t, st.sup_residual, st.min_eig,
                          "no step length keeps omega_t above the positivity floor");
      }
      throw SolverError(ErrorCode::MaxIterExceeded, pr.t, st.sup_residual, st.min_eig,
                        "line search stalled at residual " + std::to_string(st.sup_residual));
    }
    out.stats.residual_history.push_back(st.sup_residual);
  }
  out.stats.newton_iterations = it;
  out.stats.residual = st.sup_residual;
  out.stats.min_eig = st.min_eig;
  out.phi = std::move(phi);
  return out;
}

// ---------------------------------------------------------------------------
// Continuation

struct Schedule {
  enum class Rule { linear, geometric, list } rule = Rule::linear;
  double t_start = 1.0;
  double t_end = 0.1;
  int steps = 10;
  double ratio = 0.8;
  std::vector<double> values;
  double min_step = 1e-4;
};

inline const char* rule_name(Schedule::Rule r) {
  switch (r) {
    case Schedule::Rule::linear: return "linear";
    case Schedule::Rule::geometric: return "geometric";
    case Schedule::Rule::list: return "list";
  }
  return "?";
}

/// Target t values, strictly decreasing.
inline std::vector<double> schedule_points(const Schedule& s) {
  std::vector<double> ts;
  switch (s.rule) {
    case Schedule::Rule::linear: {
      if (s.steps < 1) throw Error(ErrorCode::Config, "schedule.steps must be >= 1");
      for (int i = 0; i <= s.steps; ++i) ts.push_back(s.t_start + (s.t_end - s.t_start) * i / s.steps);
      break;
    }
    case Schedule::Rule::geometric: {
      if (!(s.ratio > 0.0 && s.ratio < 1.0)) throw Error(ErrorCode::Config, "schedule.ratio must lie in (0, 1)");
      for (double t = s.t_start; t > s.t_end * (1.0 + 1e-12); t *= s.ratio) ts.push_back(t);
      ts.push_back(s.t_end);
      break;
    }
    case Schedule::Rule::list: ts = s.values; break;
  }
  if (ts.empty()) throw Error(ErrorCode::Config, "schedule produces no t values");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (!(ts[i] < ts[i - 1])) throw Error(ErrorCode::Config, "schedule t values must be strictly decreasing");
  }
  return ts;
}

struct SampleDiagnostics {
  double sup_u = 0.0;
  double min_eig = 0.0;
  double sup_tr_eta = 0.0;
  double int_exp_u = 0.0;
  double int_c3 = 0.0;  // integral of e^{c u} omega0^n, the quantity whose liminf is c3
  int newton_iters = 0;
  double residual = 0.0;
};

struct PathSample {
  double t = 0.0;
  ScalarField phi;
  ScalarField u;
  SampleDiagnostics diag;
};

struct ContinuityPath {
  Mode mode = Mode::thm1;
  double alpha = 0.0;
  double beta = 1.0;
  double delta1 = 1.0;
  double c = 1.0;
  double threshold = 0.0;
  Schedule schedule;
  std::vector<PathSample> samples;
  std::string termination;
  bool completed = false;
};

/// thm1: n delta1 mu; thm2: 2 n lambda / ((n+1) alpha) for lambda >= 0, else 0.
/// NaN when alpha = 0 and lambda >= 0 (no threshold available).
inline double path_threshold(Mode mode, int n, double mu_or_lambda, double alpha, double delta1) {
  if (mode == Mode::thm1) return n * delta1 * mu_or_lambda;
  if (mu_or_lambda < 0.0) return 0.0;
  if (!(alpha > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * n * mu_or_lambda / ((n + 1) * alpha);
}

inline SampleDiagnostics sample_diagnostics(const MABackground& bg, const MAProblem& pr,
                                            const ScalarField& phi, const ScalarField& u,
                                            const HermitianField& eta, const SolveStats& st) {
  SampleDiagnostics d;
  const HermitianField w = omega_phi(bg.grid, pr, phi);
  d.sup_u = *std::max_element(u.begin(), u.end());
  d.min_eig = std::numeric_limits<double>::infinity();
  d.sup_tr_eta = -std::numeric_limits<double>::infinity();
  ScalarField dens(u.size()), dens_c(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const Mat wp = w.at(p);
    d.min_eig = std::min(d.min_eig, min_relative_eigenvalue(wp, bg.g0.at(p)));
    d.sup_tr_eta = std::max(d.sup_tr_eta, trace_against(eta.at(p), wp));
    dens[p] = std::exp(u[p]) * bg.det_g0[p];
    dens_c[p] = std::exp(pr.c * u[p]) * bg.det_g0[p];
  }
  d.int_exp_u = integrate(bg.grid, dens);
  d.int_c3 = integrate(bg.grid, dens_c);
  d.newton_iters = st.newton_iterations;
  d.residual = st.residual;
  return d;
}

struct ContinuationParams {
  Mode mode = Mode::thm1;
  double alpha = 0.0;
  double beta = 1.0;
  double delta1 = 1.0;
  double threshold = 0.0;  // NaN disables the start check
  SolverOptions solver;
};

using SampleCallback = std::function<void(const PathSample&, const ContinuityPath&)>;

/// Constant initial guess: chi is kept and the constant balances the mean residual.
inline ScalarField constant_guess(const MABackground& bg, const MAProblem& pr) {
  double s = 0.0;
  for (std::size_t p = 0; p < bg.grid.size(); ++p) {
    const auto ld = log_det_pd(pr.chi.at(p));
    if (!ld) return ScalarField(bg.grid.size(), 0.0);
    s += *ld - bg.log_det_g0[p] - (pr.log_f.empty() ? 0.0 : pr.log_f[p]);
  }
  return ScalarField(bg.grid.size(), s / bg.grid.size() / pr.c);
}

inline ContinuityPath run_continuation(const MABackground& bg, const HermitianField& eta,
                                       const Schedule& schedule, const ContinuationParams& cp,
                                       const SampleCallback& on_sample = {}) {
  ContinuityPath path;
  path.mode = cp.mode;
  path.alpha = cp.alpha;
  path.beta = cp.beta;
  path.delta1 = cp.delta1;
  path.c = exponent_c(cp.mode, cp.alpha, cp.beta);
  path.threshold = cp.threshold;
  path.schedule = schedule;
  const std::vector<double> targets = schedule_points(schedule);
  if (std::isfinite(cp.threshold) && !(targets.front() > cp.threshold)) {
    std::ostringstream os;
    os << "schedule starts at t = " << targets.front() << ", not above the existence threshold "
       << cp.threshold;
    throw Error(ErrorCode::Precondition, os.str());
  }
  ScalarField phi;
  double t_prev = std::numeric_limits<double>::quiet_NaN();
  std::size_t next = 0;
  double t = targets.front();
  while (next < targets.size()) {
    if (std::isfinite(cp.threshold) && !(t > cp.threshold)) {
      path.termination = "reached the existence threshold";
      return path;
    }
    const MAProblem pr = assemble_problem(bg, cp.mode, t, cp.alpha, cp.beta, cp.delta1);
    ScalarField init = phi;
    if (init.empty()) init = pr.chi_min_eig > cp.solver.positivity_floor ? constant_guess(bg, pr)
                                                                         : ScalarField(bg.grid.size(), 0.0);
    try {
      SolveResult sr = solve_ma(bg, pr, std::move(init), cp.solver);
      PathSample s;
      s.t = t;
      s.u = potential_u(bg, pr, sr.phi);
      s.diag = sample_diagnostics(bg, pr, sr.phi, s.u, eta, sr.stats);
      s.phi = std::move(sr.phi);
      phi = s.phi;
      path.samples.push_back(std::move(s));
      if (on_sample) on_sample(path.samples.back(), path);
      t_prev = t;
      if (t == targets[next]) ++next;
      if (next < targets.size()) t = targets[next];
    } catch (const SolverError& e) {
      if (!std::isfinite(t_prev)) {
        std::ostringstream os;
        os << "solve failed at the first t = " << t << ": " << e.what();
        throw SolverError(e.code(), t, e.residual(), e.min_eigenvalue(), os.str());
      }
      const double dt = 0.5 * (t_prev - t);
      if (dt < schedule.min_step) {
        std::ostringstream os;
        os << error_token(e.code()) << " at t = " << t << (e.near_degeneracy() ? " (path degenerating)" : "")
           << ": " << e.what();
        path.termination = os.str();
        return path;
      }
      t = t_prev - dt;
    }
  }
  path.termination = "reached t_end";
  path.completed = true;
  return path;
}

struct C3Estimate {
  double minimum = 0.0;       // conservative value used downstream
  double extrapolated = 0.0;  // linear fit of the tail evaluated at t_limit
  std::size_t tail = 0;
};

inline C3Estimate estimate_c3(const ContinuityPath& path, double t_limit, std::size_t tail = 3) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : path.samples)
    if (s.t > t_limit) pts.emplace_back(s.t, s.diag.int_c3);
  if (pts.size() < 3) {
    throw Error(ErrorCode::InsufficientSamples,
                "c3 estimate needs at least 3 path samples above t = " + std::to_string(t_limit) +
                    " (have " + std::to_string(pts.size()) + ")");
  }
  std::sort(pts.begin(), pts.end());
  pts.resize(std::min(tail, pts.size()));
  C3Estimate c;
  c.tail = pts.size();
  c.minimum = std::numeric_limits<double>::infinity();
  double st = 0.0, sv = 0.0;
  for (const auto& [t, v] : pts) {
    c.minimum = std::min(c.minimum, v);
    st += t;
    sv += v;
  }
  const double mt = st / pts.size();
  const double mv = sv / pts.size();
  double num = 0.0, den = 0.0;
  for (const auto& [t, v] : pts) {
    num += (t - mt) * (v - mv);
    den += (t - mt) * (t - mt);
  }
  const double slope = den > 0.0 ? num / den : 0.0;
  c.extrapolated = mv + slope * (t_limit - mt);
  return c;
}

}  // namespace kgap
