#pragma once

// Numerical audit of the a-priori estimates along a solved continuity path:
// pointwise differential inequalities, maximum-principle bounds, the
// integral chain for the lower bound of sup u, the constants c0..c4 and the
// final volume-gap summary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgap/hypothesis.hpp"
#include "kgap/metric.hpp"
#include "kgap/monge_ampere.hpp"
#include "kgap/probes.hpp"

namespace kgap {

using ojson = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct AuditRecord {
  std::string name;
  std::string anchor;  // the estimate being checked, in words
  double margin = kInf;
  double tol = 1e-8;
  bool applicable = true;
  bool conditional = false;  // consumes an empirically probed constant
  bool pass = true;
  std::string status = "pass";  // pass | fail | vacuous
  double worst_t = kNaN;
  long long worst_point = -1;
  ojson details = ojson::object();
  std::vector<AuditRecord> sub;

  AuditRecord& finish() {
    pass = !(margin < -tol) && !std::isnan(margin);
    status = !applicable ? "vacuous" : (pass ? "pass" : "fail");
    return *this;
  }
};

inline AuditRecord make_record(std::string name, std::string anchor, double margin, double tol,
                               bool applicable = true) {
  AuditRecord r;
  r.name = std::move(name);
  r.anchor = std::move(anchor);
  r.margin = margin;
  r.tol = tol;
  r.applicable = applicable;
  return r.finish();
}

inline ojson to_json(const AuditRecord& r) {
  ojson j;
  j["name"] = r.name;
  j["anchor"] = r.anchor;
  j["margin"] = std::isfinite(r.margin) ? ojson(r.margin) : ojson(nullptr);
  j["tol"] = r.tol;
  j["pass"] = r.pass;
  j["status"] = r.status;
  j["conditional"] = r.conditional;
  if (std::isfinite(r.worst_t)) j["worst_t"] = r.worst_t;
  if (r.worst_point >= 0) j["worst_point"] = r.worst_point;
  j["details"] = r.details;
  if (!r.sub.empty()) {
    ojson s = ojson::array();
    for (const auto& x : r.sub) s.push_back(to_json(x));
    j["subchecks"] = s;
  }
  return j;
}

namespace detail {

struct PointMin {
  double value = kInf;
  std::size_t point = 0;
};

template <class F>
PointMin point_min(std::size_t points, F&& f, const Mask* mask = nullptr, bool inside = true) {
  PointMin m;
  for (std::size_t p = 0; p < points; ++p) {
    if (mask && ((*mask)[p] != 0) != inside) continue;
    const double v = f(p);
    if (v < m.value || std::isnan(v)) {
      m.value = v;
      m.point = p;
      if (std::isnan(v)) break;
    }
  }
  return m;
}

inline double sup_of(const ScalarField& f) { return *std::max_element(f.begin(), f.end()); }

inline double sup_on(const ScalarField& f, const Mask& m) {
  double s = -kInf;
  for (std::size_t p = 0; p < f.size(); ++p)
    if (m[p]) s = std::max(s, f[p]);
  return s;
}

/// Folds per-sample records into one: min margin, worst t, sample table.
inline AuditRecord fold_samples(std::string name, std::string anchor, std::vector<AuditRecord> per,
                                double tol, bool conditional = false) {
  AuditRecord r;
  r.name = std::move(name);
  r.anchor = std::move(anchor);
  r.tol = tol;
  r.conditional = conditional;
  r.applicable = false;
  ojson table = ojson::array();
  for (const auto& s : per) {
    ojson row;
    row["t"] = s.worst_t;
    row["margin"] = std::isfinite(s.margin) ? ojson(s.margin) : ojson(nullptr);
    row["status"] = s.status;
    table.push_back(row);
    if (!s.applicable) continue;
    if (!r.applicable || s.margin < r.margin || std::isnan(s.margin)) {
      r.margin = s.margin;
      r.worst_t = s.worst_t;
      r.worst_point = s.worst_point;
    }
    r.applicable = true;
  }
  r.details["samples"] = table;
  return r.finish();
}

}  // namespace detail

/// Complex Laplacian tr_omega dd^c f.
inline ScalarField laplacian(const Grid& grid, const HermitianField& omega, const ScalarField& f) {
  return trace_field(ddc(grid, f), omega);
}

// ----------------------------------------------------------------------------
// Pointwise differential inequality for log tr_{omega_g} eta.

/// Delta_g log tr_g eta >= -C1 + (-rho(mu) mu + C2/n) tr_g eta, checked after
/// the Ricci lower bound Ric_g >= -C1 omega_g + C2 eta.
inline AuditRecord check_schwarz(const Grid& grid, const HermitianField& omega_g, const HermitianField& eta,
                                 double c1, double c2, double mu, double tol) {
  const int n = grid.dim();
  const std::size_t P = grid.size();
  const HermitianField ric = ricci_form(grid, omega_g);
  const auto hyp = detail::point_min(P, [&](std::size_t p) {
    const Mat w = omega_g.at(p);
    return min_relative_eigenvalue(ric.at(p) + c1 * w - c2 * eta.at(p), w);
  });
  const ScalarField tr = trace_field(eta, omega_g);
  ScalarField logtr(P);
  for (std::size_t p = 0; p < P; ++p) logtr[p] = std::log(tr[p]);
  const ScalarField lhs = laplacian(grid, omega_g, logtr);
  const double mu_w = rho_kappa(mu, n) * mu;
  const auto m = detail::point_min(P, [&](std::size_t p) { return lhs[p] - (-c1 + (-mu_w + c2 / n) * tr[p]); });
  const bool hyp_ok = hyp.value >= -tol;
  AuditRecord r = make_record("schwarz_inequality", "Laplacian lower bound for log tr(eta) (Schwarz lemma)",
                              m.value, tol, hyp_ok);
  r.worst_point = static_cast<long long>(m.point);
  r.details["ricci_hypothesis_margin"] = hyp.value;
  r.details["ricci_hypothesis_point"] = hyp.point;
  r.details["C1"] = c1;
  r.details["C2"] = c2;
  r.details["mu"] = mu;
  r.details["mu_weighted"] = mu_w;
  r.details["kahler_defect"] = kahler_defect(grid, omega_g);
  return r;
}

// ----------------------------------------------------------------------------
// Path samples.

struct SampleState {
  double t = 0.0;
  MAProblem pr;
  HermitianField omega;
  ScalarField det_omega;
  ScalarField phi;
  ScalarField u;
  double residual = 0.0;  // sup |log det omega - log det g0 - c phi|
};

inline SampleState make_sample_state(const MABackground& bg, const ContinuityPath& path, const PathSample& s) {
  SampleState st;
  st.t = s.t;
  st.pr = assemble_problem(bg, path.mode, s.t, path.alpha, path.beta, path.delta1);
  st.phi = s.phi;
  st.u = s.u.empty() ? potential_u(bg, st.pr, s.phi) : s.u;
  st.omega = omega_phi(bg.grid, st.pr, s.phi);
  st.det_omega.resize(bg.grid.size());
  for (std::size_t p = 0; p < bg.grid.size(); ++p) {
    const double d = det_real(st.omega.at(p));
    st.det_omega[p] = d;
    const double r = d > 0.0 ? std::log(d) - bg.log_det_g0[p] - st.pr.c * s.phi[p] : kInf;
    st.residual = std::max(st.residual, std::fabs(r));
  }
  return st;
}

inline std::vector<SampleState> sample_states(const MABackground& bg, const ContinuityPath& path) {
  std::vector<SampleState> out;
  out.reserve(path.samples.size());
  for (const auto& s : path.samples) out.push_back(make_sample_state(bg, path, s));
  return out;
}

/// Schwarz inequality on each thm1 sample: omega_g = omega_t, C1 = 1, C2 = t / delta1.
inline AuditRecord check_schwarz_path(const MABackground& bg, const HermitianField& eta,
                                      const std::vector<SampleState>& states, double delta1, double mu,
                                      double tol) {
  std::vector<AuditRecord> per;
  for (const auto& st : states) {
    AuditRecord r = check_schwarz(bg.grid, st.omega, eta, 1.0, st.t / delta1, mu, tol);
    r.worst_t = st.t;
    per.push_back(std::move(r));
  }
  return detail::fold_samples("schwarz_inequality", "Laplacian lower bound for log tr(eta) along the path",
                              std::move(per), tol);
}

/// sup tr_{omega_t} eta <= n delta1 / (t - n delta1 mu'), mu' the weighted maximum.
/// The unweighted form is reported as a subcheck.
inline AuditRecord check_trace_bound(const MABackground& bg, const HermitianField& eta,
                                     const std::vector<SampleState>& states, double delta1, double mu, double tol) {
  const int n = bg.grid.dim();
  const double mu_w = rho_kappa(mu, n) * mu;
  std::vector<AuditRecord> per_w, per_u;
  int out_of_range = 0;
  for (const auto& st : states) {
    const ScalarField tr = trace_field(eta, st.omega);
    const auto it = std::max_element(tr.begin(), tr.end());
    const double sup = *it;
    const auto pt = static_cast<long long>(it - tr.begin());
    auto one = [&](double m) {
      const bool in_range = st.t > n * delta1 * m;
      const double bound = in_range ? n * delta1 / (st.t - n * delta1 * m) : kInf;
      AuditRecord r = make_record("trace_bound", "", in_range ? bound - sup : kInf, tol, in_range);
      r.worst_t = st.t;
      r.worst_point = pt;
      return r;
    };
    per_w.push_back(one(mu_w));
    per_u.push_back(one(mu));
    if (!per_w.back().applicable) ++out_of_range;
  }
  AuditRecord r = detail::fold_samples("trace_bound", "maximum-principle bound on sup tr(eta)", std::move(per_w), tol);
  r.details["mu"] = mu;
  r.details["mu_weighted"] = mu_w;
  r.details["out_of_range_samples"] = out_of_range;
  r.sub.push_back(detail::fold_samples("trace_bound_unweighted_mu",
                                       "same bound with the unweighted curvature maximum", std::move(per_u), tol));
  return r;
}

struct SupBoundParams {
  Mode mode = Mode::thm1;
  double delta1 = 1.0;
  double eps = 0.0;
  double b0 = 0.0;
  double c0 = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
  double lambda = 0.0;  // thm2: max of the Ricci-type functional
};

/// Upper bounds on sup u_t from the maximum principle:
///   c sup u <= n log(t + b0) for every sample,
///   and the epsilon and c0 forms on samples with t in the small-t range.
inline AuditRecord check_sup_ut(const ContinuityPath& path, int n, const SupBoundParams& sp, double tol) {
  const double c = exponent_c(sp.mode, sp.alpha, sp.beta);
  // t-range cap and the scale whose logarithm bounds c sup u
  double cap = 0.0;
  bool pre = true;
  std::string pre_note;
  if (sp.mode == Mode::thm1) {
    cap = 2.0 * n * sp.delta1 * sp.eps;
  } else {
    cap = sp.alpha > 0.0 ? 4.0 * n * sp.eps / ((n + 1) * sp.alpha) : kNaN;
    if (!(sp.alpha > 0.0)) {
      pre = false;
      pre_note = "alpha = 0: the epsilon range is undefined";
    } else if (!(sp.lambda <= sp.eps)) {
      pre = false;
      pre_note = "lambda exceeds epsilon";
    }
  }
  const bool c0_ok = pre && std::isfinite(cap) && cap <= sp.c0;
  std::vector<AuditRecord> inter, disp, cz;
  for (const auto& s : path.samples) {
    const auto it = std::max_element(s.u.begin(), s.u.end());
    const double sup = *it;
    const auto pt = static_cast<long long>(it - s.u.begin());
    auto rec = [&](double scale, bool applicable) {
      const double bound = scale > 0.0 ? n * std::log(scale) / c : -kInf;
      AuditRecord r = make_record("sup_u", "", applicable ? bound - sup : kInf, tol, applicable);
      r.worst_t = s.t;
      r.worst_point = pt;
      return r;
    };
    const bool small_t = std::isfinite(cap) && s.t <= cap * (1.0 + 1e-12);
    inter.push_back(rec(s.t + sp.b0, true));
    disp.push_back(rec(cap + sp.b0, pre && small_t));
    cz.push_back(rec(sp.c0 + sp.b0, c0_ok && small_t));
  }
  AuditRecord a = detail::fold_samples("sup_u_intermediate", "c sup u_t <= n log(t + b0) at the maximum point",
                                       std::move(inter), tol);
  AuditRecord b = detail::fold_samples("sup_u_epsilon_bound", "c sup u_t <= n log(epsilon scale + b0) for small t",
                                       std::move(disp), tol);
  if (!pre_note.empty()) b.details["precondition"] = pre_note;
  b.details["t_cap"] = std::isfinite(cap) ? ojson(cap) : ojson(nullptr);
  AuditRecord d = detail::fold_samples("sup_u_c0_bound", "c sup u_t <= n log(c0 + b0)", std::move(cz), tol);
  d.details["epsilon_within_c0_range"] = c0_ok;

  AuditRecord r;
  r.name = "sup_u_bound";
  r.anchor = "upper bound on sup u_t from the maximum principle";
  r.tol = tol;
  r.applicable = false;
  for (const auto* x : {&a, &b, &d}) {
    if (!x->applicable) continue;
    if (!r.applicable || x->margin < r.margin) {
      r.margin = x->margin;
      r.worst_t = x->worst_t;
      r.worst_point = x->worst_point;
    }
    r.applicable = true;
  }
  r.details["exponent_c"] = c;
  r.details["b0"] = sp.b0;
  r.sub = {std::move(a), std::move(b), std::move(d)};
  return r.finish();
}

// ----------------------------------------------------------------------------
// Integral chain for the lower bound of sup_U u (thm1).

namespace detail {

/// Builds a chain record: links in order, first failing or vacuous link reported.
inline AuditRecord chain_record(std::string name, std::string anchor, std::vector<AuditRecord> links, double tol) {
  AuditRecord r;
  r.name = std::move(name);
  r.anchor = std::move(anchor);
  r.tol = tol;
  r.margin = kInf;
  std::string broken, vacuous;
  for (const auto& l : links) {
    if (!l.applicable && vacuous.empty() && broken.empty()) vacuous = l.name;
    if (l.applicable && !l.pass && broken.empty()) {
      broken = l.name;
      r.margin = l.margin;
      r.worst_t = l.worst_t;
      r.worst_point = l.worst_point;
    }
  }
  if (broken.empty()) {
    for (const auto& l : links)
      if (l.applicable && l.margin < r.margin) {
        r.margin = l.margin;
        r.worst_t = l.worst_t;
        r.worst_point = l.worst_point;
      }
  }
  r.applicable = vacuous.empty() || !broken.empty();
  r.details["first_broken_link"] = broken.empty() ? ojson(nullptr) : ojson(broken);
  r.details["first_vacuous_link"] = vacuous.empty() ? ojson(nullptr) : ojson(vacuous);
  r.sub = std::move(links);
  r.finish();
  if (!broken.empty()) {
    r.pass = false;
    r.status = "fail";
  }
  return r;
}

/// sum(lambda) - n prod(lambda)^{1/n} for the eigenvalues of a relative to b.
inline double am_gm_gap(const Mat& a, const Mat& b) {
  const RVec l = relative_eigenvalues(a, b);
  const int n = static_cast<int>(l.size());
  double s = 0.0, logp = 0.0;
  for (int i = 0; i < n; ++i) {
    s += l(i);
    logp += std::log(std::max(l(i), 1e-300));
  }
  return s - n * std::exp(logp / n);
}

}  // namespace detail

struct IntegralChainInputs {
  const ScalarField* kappa = nullptr;  // weighted RBC maximum field
  const HermitianField* eta = nullptr;
  const Mask* region = nullptr;
  double delta1 = 1.0;
};

/// Evaluates every line of the integral argument bounding sup_U u_t from
/// below on one sample. Links are ordered as the argument uses them.
inline AuditRecord check_integral_lemma(const MABackground& bg, const SampleState& st,
                                        const IntegralChainInputs& in, double tol) {
  const Grid& grid = bg.grid;
  const int n = grid.dim();
  const std::size_t P = grid.size();
  const ScalarField& kappa = *in.kappa;
  const Mask& U = *in.region;
  const double t = st.t;
  const double a_t = t / (n * in.delta1);
  const ScalarField& vol = st.det_omega;

  const ScalarField tr = trace_field(*in.eta, st.omega);
  ScalarField logtr(P);
  for (std::size_t p = 0; p < P; ++p) logtr[p] = std::log(tr[p]);
  const ScalarField lap = laplacian(grid, st.omega, logtr);

  bool kappa_neg_somewhere = false, kappa_nonpos_on_u = true;
  for (std::size_t p = 0; p < P; ++p)
    if (U[p]) {
      kappa_neg_somewhere = kappa_neg_somewhere || kappa[p] < 0.0;
      kappa_nonpos_on_u = kappa_nonpos_on_u && kappa[p] <= 0.0;
    }

  auto integral = [&](auto&& f, const Mask* m = nullptr, bool inside = true) {
    ScalarField d(P, 0.0);
    for (std::size_t p = 0; p < P; ++p)
      if (!m || ((*m)[p] != 0) == inside) d[p] = f(p);
    return integrate(grid, d);
  };
  auto link = [&](const char* name, const char* anchor, double margin, bool applicable = true,
                  long long point = -1) {
    AuditRecord r = make_record(name, anchor, margin, tol, applicable);
    r.worst_t = t;
    r.worst_point = point;
    return r;
  };

  std::vector<AuditRecord> links;
  const auto cl = detail::point_min(P, [&](std::size_t p) { return lap[p] - ((-kappa[p] + a_t) * tr[p] - 1.0); });
  links.push_back(link("pointwise_cl_estimate", "Delta log tr >= (-kappa + t/(n delta1)) tr - 1", cl.value, true,
                       static_cast<long long>(cl.point)));

  const double div = integral([&](std::size_t p) { return lap[p] * vol[p]; });
  AuditRecord dv = link("divergence_identity", "integral of Delta_t(log tr) omega_t^n vanishes", -std::fabs(div));
  dv.details["integral"] = div;
  links.push_back(std::move(dv));

  const double V = integral([&](std::size_t p) { return vol[p]; });
  const double rhs_x = integral([&](std::size_t p) { return (-kappa[p] + a_t) * tr[p] * vol[p]; });
  links.push_back(link("integrated_inequality", "vol >= integral of (-kappa + t/(n delta1)) tr over X", V - rhs_x));

  const auto pos = detail::point_min(P, [&](std::size_t p) { return (-kappa[p] + a_t) * tr[p]; }, &U, false);
  links.push_back(link("positivity_off_region", "(-kappa + t/(n delta1)) tr >= 0 outside U", pos.value, true,
                       static_cast<long long>(pos.point)));

  const double off_u = integral([&](std::size_t p) { return (-kappa[p] + a_t) * tr[p] * vol[p]; }, &U, false);
  links.push_back(link("restriction_to_region", "integral over X >= integral over U", off_u));

  const double drop = integral([&](std::size_t p) { return a_t * tr[p] * vol[p]; }, &U);
  links.push_back(link("drop_positive_term", "drop the t/(n delta1) tr term on U", drop));

  const auto amgm = detail::point_min(P, [&](std::size_t p) { return detail::am_gm_gap(in.eta->at(p), st.omega.at(p)); });
  links.push_back(link("am_gm_pointwise", "tr(eta) >= n (eta^n / omega_t^n)^{1/n}", amgm.value, true,
                       static_cast<long long>(amgm.point)));

  ScalarField r_t(P), r_0(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double de = det_real(in.eta->at(p));
    r_t[p] = std::pow(de / vol[p], 1.0 / n);
    r_0[p] = std::pow(de / bg.det_g0[p], 1.0 / n);
  }
  const double lhs_tr = -integral([&](std::size_t p) { return kappa[p] * tr[p] * vol[p]; }, &U);
  const double amgm_int = -n * integral([&](std::size_t p) { return kappa[p] * r_t[p] * vol[p]; }, &U);
  links.push_back(link("am_gm_integrated", "-int_U kappa tr >= -n int_U kappa (eta^n/omega_t^n)^{1/n}",
                       lhs_tr - amgm_int, kappa_nonpos_on_u));

  const auto subst = detail::point_min(P, [&](std::size_t p) {
    const double lhs = std::log(vol[p] / bg.det_g0[p]);
    return -std::fabs(lhs - (st.u[p] - t / in.delta1 * bg.psi[p]));
  });
  AuditRecord sb = link("substitution_identity", "omega_t^n / omega0^n = exp(u - t psi / delta1)", subst.value, true,
                        static_cast<long long>(subst.point));
  sb.tol = std::max(tol, 10.0 * st.residual);
  sb.finish();
  links.push_back(std::move(sb));

  const double sup_u_region = detail::sup_on(st.u, U);
  const double lin = -n * integral(
                              [&](std::size_t p) {
                                return kappa[p] * std::exp(-(st.u[p] - t / in.delta1 * bg.psi[p]) / n) * r_0[p] *
                                       vol[p];
                              },
                              &U);
  const double I = integral([&](std::size_t p) { return kappa[p] * std::exp(a_t * bg.psi[p]) * r_0[p] * vol[p]; }, &U);
  const double sup_side = -n * std::exp(-sup_u_region / n) * I;
  links.push_back(link("sup_step", "replace u by sup_U u inside the region integral", lin - sup_side,
                       kappa_nonpos_on_u));
  links.push_back(link("volume_lower_bound", "vol >= -n e^{-sup_U u / n} I", V - sup_side, kappa_nonpos_on_u));

  const bool log_ok = -I > 0.0;
  const double implied = log_ok ? n * std::log(n) + n * std::log(-I / V) : kNaN;
  AuditRecord fin = link("chain_implied_bound", "sup_U u >= n log n + n log(-I / vol)",
                         log_ok ? sup_u_region - implied : kInf, log_ok);
  links.push_back(std::move(fin));

  AuditRecord r = detail::chain_record("integral_lower_bound_chain", "integral argument bounding sup_U u from below",
                                       std::move(links), tol);
  r.worst_t = t;
  r.applicable = r.applicable && kappa_neg_somewhere;
  r.finish();
  if (r.details["first_broken_link"].is_string()) {
    r.pass = false;
    r.status = "fail";
  }
  const double displayed = log_ok ? n * std::log(n) + std::log(-I / V) : kNaN;
  r.details["sup_U_u"] = sup_u_region;
  r.details["region_integral_I"] = I;
  r.details["volume"] = V;
  r.details["displayed_bound"] = std::isfinite(displayed) ? ojson(displayed) : ojson(nullptr);
  r.details["displayed_margin"] = std::isfinite(displayed) ? ojson(sup_u_region - displayed) : ojson(nullptr);
  r.details["kappa_negative_on_region"] = kappa_neg_somewhere;
  return r;
}

// ----------------------------------------------------------------------------
// Numerator and denominator estimates for the ratio (thm1).

struct RatioInputs {
  const ScalarField* kappa = nullptr;
  const HermitianField* eta = nullptr;
  const Mask* region = nullptr;
  double delta = 0.0;
  double delta1 = 1.0;
  double delta2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool hypotheses_certified = false;  // quasi-negativity and volume non-collapse
};

/// Lower bound of the region integral in normalized form, and the resulting
/// lower bound of sup_U u. Variants with delta2 and delta2^{1/n} both checked.
inline std::vector<AuditRecord> check_ratio_bounds(const MABackground& bg, const SampleState& st,
                                                   const RatioInputs& in, double tol) {
  const Grid& grid = bg.grid;
  const int n = grid.dim();
  const std::size_t P = grid.size();
  const ScalarField& kappa = *in.kappa;
  const Mask& U = *in.region;
  const double t = st.t;
  const double sup_u = detail::sup_of(st.u);
  const double sup_u_region = detail::sup_on(st.u, U);

  ScalarField d_num(P, 0.0), d_den(P), d_mass(P, 0.0), d_psi(P), d_raw(P, 0.0), d_vol(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double us = st.u[p] - sup_u;
    const double r0 = std::pow(det_real(in.eta->at(p)) / bg.det_g0[p], 1.0 / n);
    const double g = bg.det_g0[p];
    const double psi_t = t / in.delta1 * bg.psi[p];
    d_den[p] = std::exp(us - psi_t) * g;
    d_psi[p] = std::exp(-psi_t) * g;
    d_vol[p] = st.det_omega[p];
    if (U[p]) {
      d_num[p] = -kappa[p] * std::exp(us - (1.0 - 1.0 / n) * psi_t) * r0 * g;
      d_mass[p] = std::exp(us) * g;
      d_raw[p] = -kappa[p] * std::exp(psi_t / n) * r0 * st.det_omega[p];
    }
  }
  const double num = integrate(grid, d_num);
  const double den = integrate(grid, d_den);
  const double mass = integrate(grid, d_mass);
  const double psi_int = integrate(grid, d_psi);
  const double raw = integrate(grid, d_raw);
  const double vol = integrate(grid, d_vol);

  auto rec = [&](const char* name, const char* anchor, double margin, bool applicable, bool conditional) {
    AuditRecord r = make_record(name, anchor, margin, tol, applicable);
    r.worst_t = t;
    r.conditional = conditional;
    return r;
  };
  const bool hyp = in.hypotheses_certified;
  const bool c1_ok = in.c1 > 0.0;
  const double rt = std::pow(in.delta2, 1.0 / n);
  std::vector<AuditRecord> out;
  const double ratio_raw = raw / vol;
  const double ratio_norm = num / den;
  out.push_back(rec("ratio_normalization_identity", "ratio is invariant under u -> u - sup u",
                    -std::fabs(ratio_raw - ratio_norm) / std::max(1.0, std::fabs(ratio_norm)), true, false));
  out.push_back(rec("numerator_delta2_displayed", "numerator >= delta2 delta int_U e^{u*}", num - in.delta2 * in.delta * mass,
                    hyp, false));
  out.push_back(rec("numerator_delta2_root", "numerator >= delta2^{1/n} delta / n int_U e^{u*}",
                    num - rt * in.delta / n * mass, hyp, false));
  out.push_back(rec("numerator_c1", "int_U e^{u*} omega0^n >= c1", mass - in.c1, hyp && c1_ok, true));
  out.push_back(rec("denominator_bound", "int e^{u*} e^{-t psi/delta1} <= int e^{-t psi/delta1} <= c2",
                    std::min(psi_int - den, in.c2 - psi_int), true, true));
  const double ratio_lb = in.c1 * rt * in.delta / (n * in.c2);
  out.push_back(rec("ratio_bound", "ratio >= c1 delta2^{1/n} delta / (n c2)", ratio_norm - ratio_lb, hyp && c1_ok, true));
  const double b_stmt = n * std::log(n) + std::log(in.c1 * in.delta2 * in.delta / in.c2);
  const double b_proof = n * std::log(n) + std::log(ratio_lb);
  out.push_back(rec("sup_region_bound_statement", "sup_U u >= n log n + log(c1 delta2 delta / c2)",
                    sup_u_region - b_stmt, hyp && c1_ok, true));
  out.push_back(rec("sup_region_bound_proof", "sup_U u >= n log n + log(c1 delta2^{1/n} delta / (n c2))",
                    sup_u_region - b_proof, hyp && c1_ok, true));
  out[1].details["numerator"] = num;
  out[1].details["region_mass"] = mass;
  out[4].details["psi_integral"] = psi_int;
  return out;
}

// ----------------------------------------------------------------------------
// thm2: differential inequality for log tr_{omega_t} omega0 - (alpha / 2 beta) phi.

enum class Thm2Case { lambda_nonneg, lambda_neg, pointwise_tau };

inline const char* thm2_case_name(Thm2Case c) {
  switch (c) {
    case Thm2Case::lambda_nonneg: return "thm2_inequality_lambda_nonneg";
    case Thm2Case::lambda_neg: return "thm2_inequality_lambda_neg";
    case Thm2Case::pointwise_tau: return "thm2_inequality_pointwise_tau";
  }
  return "?";
}

inline AuditRecord check_thm2_differential_inequality(const MABackground& bg, const SampleState& st, double alpha,
                                                      double beta, double lambda, const ScalarField* tau,
                                                      Thm2Case which, double tol) {
  const Grid& grid = bg.grid;
  const int n = grid.dim();
  const std::size_t P = grid.size();
  const double t = st.t;
  const ScalarField G = trace_field(bg.g0, st.omega);
  ScalarField f(P);
  for (std::size_t p = 0; p < P; ++p) f[p] = std::log(G[p]) - alpha / (2.0 * beta) * st.phi[p];
  const ScalarField lhs = laplacian(grid, st.omega, f);
  const double k0 = alpha * n / beta + 1.0;
  bool applicable = true;
  std::function<double(std::size_t)> coef;
  switch (which) {
    case Thm2Case::lambda_nonneg:
      applicable = lambda >= 0.0;
      coef = [&](std::size_t) { return ((n + 1) * alpha * t - 2.0 * n * lambda) / (2.0 * beta * n); };
      break;
    case Thm2Case::lambda_neg:
      applicable = lambda < 0.0;
      coef = [&](std::size_t) { return ((n + 1) * alpha * t - (n + 1) * lambda) / (2.0 * beta * n); };
      break;
    case Thm2Case::pointwise_tau:
      applicable = tau != nullptr;
      coef = [&](std::size_t p) { return ((n + 1) * alpha * t - (*tau)[p]) / (2.0 * beta * n); };
      break;
  }
  const auto m = detail::point_min(P, [&](std::size_t p) { return lhs[p] - (coef(p) * G[p] - k0); });
  AuditRecord r = make_record(thm2_case_name(which), "Laplacian lower bound for log tr(omega0) - (alpha/2beta) phi",
                              applicable ? m.value : kInf, tol, applicable);
  r.worst_t = t;
  r.worst_point = static_cast<long long>(m.point);
  if (applicable) r.details["margin_value"] = m.value;
  return r;
}

/// Consequences of the maximum principle along a thm2 sample: the sup bound at
/// the maximum point of phi, the volume comparison and metric equivalence.
inline std::vector<AuditRecord> check_thm2_consequences(const MABackground& bg, const SampleState& st, double tol) {
  const std::size_t P = bg.grid.size();
  const double c = st.pr.c;
  const auto it = std::max_element(st.phi.begin(), st.phi.end());
  const std::size_t x1 = static_cast<std::size_t>(it - st.phi.begin());
  const Mat chi1 = st.t * bg.g0.at(x1) - bg.ric.at(x1);
  std::vector<AuditRecord> out;

  const double order = min_relative_eigenvalue(chi1 - st.omega.at(x1), bg.g0.at(x1));
  AuditRecord a = make_record("max_point_metric_bound", "omega_t <= t omega0 - Ric at the maximum point of phi",
                              order, tol);
  a.worst_t = st.t;
  a.worst_point = static_cast<long long>(x1);
  out.push_back(std::move(a));

  double realized_c = -kInf;
  for (std::size_t p = 0; p < P; ++p) {
    const Mat chi = st.t * bg.g0.at(p) - bg.ric.at(p);
    if (min_relative_eigenvalue(chi, bg.g0.at(p)) > 0.0)
      realized_c = std::max(realized_c, det_real(chi) / bg.det_g0[p]);
  }
  const double d1 = det_real(chi1);
  const bool pd = min_relative_eigenvalue(chi1, bg.g0.at(x1)) > 0.0;
  AuditRecord b = make_record("max_point_sup_bound", "e^{c sup phi} <= (t omega0 - Ric)^n / omega0^n at the maximum",
                              pd ? std::log(d1 / bg.det_g0[x1]) - c * *it : -kInf, tol);
  b.worst_t = st.t;
  b.worst_point = static_cast<long long>(x1);
  b.details["realized_C"] = std::isfinite(realized_c) ? ojson(realized_c) : ojson(nullptr);
  out.push_back(std::move(b));

  double max_ratio = -kInf;
  double mn = kInf, mx = -kInf;
  for (std::size_t p = 0; p < P; ++p) {
    max_ratio = std::max(max_ratio, std::log(st.det_omega[p] / bg.det_g0[p]));
    const RVec l = relative_eigenvalues(st.omega.at(p), bg.g0.at(p));
    mn = std::min(mn, l.minCoeff());
    mx = std::max(mx, l.maxCoeff());
  }
  AuditRecord v = make_record("volume_comparison", "omega_t^n <= C' omega0^n with C' = e^{c sup phi}",
                              c * *it - max_ratio, std::max(tol, 10.0 * st.residual));
  v.worst_t = st.t;
  v.details["realized_C_prime"] = std::exp(c * *it);
  out.push_back(std::move(v));

  AuditRecord e = make_record("metric_equivalence", "C^{-1} omega0 <= omega_t <= C omega0", mn, tol);
  e.worst_t = st.t;
  e.details["realized_C"] = std::max(mx, 1.0 / mn);
  out.push_back(std::move(e));
  return out;
}

struct Thm2ChainInputs {
  const ScalarField* tau = nullptr;
  const Mask* region = nullptr;
  double alpha = 0.0;
  double beta = 1.0;
};

/// Integrated form of the thm2 inequality and its reduction to sup phi.
inline AuditRecord check_thm2_integral_chain(const MABackground& bg, const SampleState& st, const Thm2ChainInputs& in,
                                             double tol) {
  const Grid& grid = bg.grid;
  const int n = grid.dim();
  const std::size_t P = grid.size();
  const ScalarField& tau = *in.tau;
  const Mask& U = *in.region;
  const double t = st.t, a = in.alpha, b = in.beta, c = st.pr.c;
  const ScalarField& vol = st.det_omega;
  const ScalarField G = trace_field(bg.g0, st.omega);
  ScalarField f(P);
  for (std::size_t p = 0; p < P; ++p) f[p] = std::log(G[p]) - a / (2.0 * b) * st.phi[p];
  const ScalarField lap = laplacian(grid, st.omega, f);
  const double k0 = a * n / b + 1.0;

  bool tau_nonpos_on_u = true, tau_neg = false;
  for (std::size_t p = 0; p < P; ++p)
    if (U[p]) {
      tau_nonpos_on_u = tau_nonpos_on_u && tau[p] <= 0.0;
      tau_neg = tau_neg || tau[p] < 0.0;
    }
  auto integral = [&](auto&& g, const Mask* m = nullptr, bool inside = true) {
    ScalarField d(P, 0.0);
    for (std::size_t p = 0; p < P; ++p)
      if (!m || ((*m)[p] != 0) == inside) d[p] = g(p);
    return integrate(grid, d);
  };
  auto link = [&](const char* name, const char* anchor, double margin, bool applicable = true) {
    AuditRecord r = make_record(name, anchor, margin, tol, applicable);
    r.worst_t = t;
    return r;
  };
  auto coef = [&](std::size_t p) { return ((n + 1) * a * t - tau[p]) / (2.0 * b * n); };

  std::vector<AuditRecord> links;
  const double div = integral([&](std::size_t p) { return lap[p] * vol[p]; });
  AuditRecord dv = link("divergence_identity", "integral of Delta_t(log G - alpha phi / 2beta) omega_t^n vanishes",
                        -std::fabs(div));
  dv.details["integral"] = div;
  links.push_back(std::move(dv));
  const double V = integral([&](std::size_t p) { return vol[p]; });
  const double rhs = integral([&](std::size_t p) { return coef(p) * G[p] * vol[p]; });
  links.push_back(link("integrated_inequality", "(alpha n / beta + 1) vol >= int coef G omega_t^n", k0 * V - rhs));
  const auto pos = detail::point_min(P, [&](std::size_t p) { return coef(p) * G[p]; }, &U, false);
  links.push_back(link("positivity_off_region", "((n+1) alpha t - tau) G >= 0 outside U", pos.value));
  const double T = integral([&](std::size_t p) { return tau[p] * vol[p]; }, &U);
  const double tg = integral([&](std::size_t p) { return tau[p] * G[p] * vol[p]; }, &U);
  links.push_back(link("restrict_and_drop", "int_X coef G >= -1/(2 beta n) int_U tau G", rhs + tg / (2.0 * b * n)));
  const auto amgm = detail::point_min(P, [&](std::size_t p) { return detail::am_gm_gap(bg.g0.at(p), st.omega.at(p)); });
  links.push_back(link("am_gm_pointwise", "tr_t omega0 >= n (omega0^n / omega_t^n)^{1/n}", amgm.value));
  const double amgm_int =
      integral([&](std::size_t p) { return tau[p] * std::pow(bg.det_g0[p] / vol[p], 1.0 / n) * vol[p]; }, &U);
  links.push_back(link("am_gm_integrated", "-1/(2 beta n) int_U tau G >= -1/(2 beta) int_U tau (omega0^n/omega_t^n)^{1/n}",
                       -tg / (2.0 * b * n) + amgm_int / (2.0 * b), tau_nonpos_on_u));
  const auto subst = detail::point_min(P, [&](std::size_t p) {
    return -std::fabs(std::log(vol[p] / bg.det_g0[p]) - c * st.phi[p]);
  });
  AuditRecord sb = link("substitution_identity", "omega_t^n / omega0^n = e^{c phi}", subst.value);
  sb.tol = std::max(tol, 10.0 * st.residual);
  sb.finish();
  links.push_back(std::move(sb));
  const double sup_phi = detail::sup_of(st.phi);
  const double subst_int = integral([&](std::size_t p) { return tau[p] * std::exp(-c * st.phi[p] / n) * vol[p]; }, &U);
  const double sup_side = -std::exp(-c * sup_phi / n) * T / (2.0 * b);
  links.push_back(link("sup_step", "replace phi by sup phi inside the region integral", -subst_int / (2.0 * b) - sup_side,
                       tau_nonpos_on_u));
  links.push_back(link("volume_lower_bound", "(alpha n/beta + 1) vol >= -e^{-c sup phi / n} int_U tau / (2 beta)",
                       k0 * V - sup_side, tau_nonpos_on_u));
  const bool log_ok = -T > 0.0;
  const double implied = log_ok ? n / c * std::log(-T / ((2.0 * a * n + 2.0 * b) * V)) : kNaN;
  links.push_back(link("chain_implied_bound", "sup phi >= (n/c) log(-int_U tau / ((2 alpha n + 2 beta) vol))",
                       log_ok ? sup_phi - implied : kInf, log_ok));
  AuditRecord r = detail::chain_record("thm2_integral_chain", "integral argument bounding sup phi from below",
                                       std::move(links), tol);
  r.worst_t = t;
  r.applicable = r.applicable && tau_neg;
  r.finish();
  if (r.details["first_broken_link"].is_string()) {
    r.pass = false;
    r.status = "fail";
  }
  r.details["sup_phi"] = sup_phi;
  r.details["sup_U_phi"] = detail::sup_on(st.phi, U);
  r.details["region_tau_integral"] = T;
  r.details["volume"] = V;
  return r;
}

struct Thm2RatioInputs {
  const ScalarField* tau = nullptr;
  const Mask* region = nullptr;
  double alpha = 0.0;
  double beta = 1.0;
  double delta = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool hypotheses_certified = false;
};

inline std::vector<AuditRecord> check_thm2_ratio(const MABackground& bg, const SampleState& st,
                                                 const Thm2RatioInputs& in, double tol) {
  const Grid& grid = bg.grid;
  const int n = grid.dim();
  const std::size_t P = grid.size();
  const double c = st.pr.c;
  const double sup_phi = detail::sup_of(st.phi);
  ScalarField num(P, 0.0), mass(P, 0.0), den(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double e = std::exp(c * (st.phi[p] - sup_phi)) * bg.det_g0[p];
    den[p] = e;
    if ((*in.region)[p]) {
      num[p] = -(*in.tau)[p] * e;
      mass[p] = e;
    }
  }
  const double N = integrate(grid, num), M = integrate(grid, mass), D = integrate(grid, den);
  const bool hyp = in.hypotheses_certified;
  auto rec = [&](const char* name, const char* anchor, double margin, bool applicable, bool conditional) {
    AuditRecord r = make_record(name, anchor, margin, tol, applicable);
    r.worst_t = st.t;
    r.conditional = conditional;
    return r;
  };
  std::vector<AuditRecord> out;
  out.push_back(rec("thm2_numerator_delta", "-int_U tau e^{c phi*} >= (n+1) delta int_U e^{c phi*}",
                    N - (n + 1) * in.delta * M, hyp, false));
  out.push_back(rec("thm2_numerator_c1", "int_U e^{c phi*} omega0^n >= c1", M - in.c1, hyp && in.c1 > 0.0, true));
  out.push_back(rec("thm2_denominator_bound", "int_X e^{c phi*} omega0^n <= c2", in.c2 - D, true, false));
  const double lb = (n + 1) * in.delta * in.c1 / in.c2;
  out.push_back(rec("thm2_ratio_bound", "ratio >= (n+1) delta c1 / c2", N / D - lb, hyp && in.c1 > 0.0, true));
  const double b = (2.0 * in.beta * n / (in.alpha + 2.0 * in.beta)) *
                   std::log((n + 1) * in.delta * in.c1 / ((2.0 * in.alpha * n + 2.0 * in.beta) * in.c2));
  out.push_back(rec("thm2_sup_region_bound", "sup_U phi >= (2 beta n/(alpha + 2 beta)) log((n+1) delta c1/((2 alpha n + 2 beta) c2))",
                    detail::sup_on(st.phi, *in.region) - b, hyp && in.c1 > 0.0, true));
  out.push_back(rec("thm2_sup_bound_sup_X", "same bound for sup_X phi", sup_phi - b, hyp && in.c1 > 0.0, true));
  return out;
}

// ----------------------------------------------------------------------------
// Constants and the gap summary.

struct C4Result {
  double value = 0.0;
  double factor = 0.0;             // 2 n delta1 (thm1) or 4n / ((n+1) alpha) (thm2)
  std::vector<double> mixed;       // mixed_k = int omega0^k (-Ric)^{n-k}, normalized as in det(s A + B)
};

inline C4Result compute_c4(const Grid& grid, const HermitianField& g0, const HermitianField& ric, double delta1,
                           double eps, Mode mode, double alpha = 0.0) {
  if (!(eps > 0.0)) throw Error(ErrorCode::Parameter, "c4: epsilon must be positive");
  const int n = grid.dim();
  C4Result r;
  if (mode == Mode::thm1) {
    r.factor = 2.0 * n * delta1;
  } else {
    r.factor = alpha > 0.0 ? 4.0 * n / ((n + 1) * alpha) : kNaN;
  }
  const HermitianField neg = -ric;
  for (int k = 0; k <= n; ++k) r.mixed.push_back(mixed_top_integral(grid, g0, neg, k));
  if (!std::isfinite(r.factor)) {
    r.value = kNaN;
    return r;
  }
  double s = 0.0;
  for (int k = 1; k <= n; ++k) s += binomial(n, k) * std::pow(r.factor * eps, k) * r.mixed[k];
  r.value = s / eps;
  return r;
}

struct Constants {
  double b0 = 0.0;
  double c0 = 1.0;
  double c1 = kNaN;
  double c1_realized_min = kNaN;
  int c1_family = 0;
  int c1_skipped = 0;
  double c2 = kNaN;
  double c2_alpha_probe = kNaN;
  double c2_path_max = kNaN;
  double c3 = kNaN;
  double c3_extrapolated = kNaN;
  double c4 = kNaN;
  C4Result c4_detail;
  double eps_threshold = kNaN;
  double eps_cap = kNaN;  // c0 / (2 n delta1) or (n+1) alpha c0 / (4n)
};

struct HypothesisEcho {
  std::string name;
  bool certified = false;
  double min_margin = 0.0;
};

struct GapInputs {
  double int_neg_ric_n = 0.0;
  double c3 = kNaN;
  double c4 = kNaN;
  double eps = 0.0;
  double eps_cap = kNaN;
  std::vector<HypothesisEcho> hypotheses;
  std::vector<std::string> missing;
  double volume_tol = 1e-8;
};

struct GapSummary {
  double int_neg_ric_n = 0.0;
  double c3_minus_c4_eps = kNaN;
  double eps_threshold = kNaN;
  bool eps_below_threshold = false;
  bool hypotheses_certified = false;
  bool theorem_hypotheses_certified = false;
  bool canonical_volume_zero = true;
  bool consistent = true;
  std::string verdict;
  std::vector<HypothesisEcho> hypotheses;
  std::vector<std::string> missing;
  std::vector<std::string> failing;
};

inline GapSummary gap_report(const GapInputs& in) {
  GapSummary g;
  g.int_neg_ric_n = in.int_neg_ric_n;
  g.hypotheses = in.hypotheses;
  g.missing = in.missing;
  g.c3_minus_c4_eps = in.c3 - in.c4 * in.eps;
  const double t1 = (std::isfinite(in.c3) && std::isfinite(in.c4) && in.c4 > 0.0) ? in.c3 / (2.0 * in.c4)
                    : (std::isfinite(in.c3) && in.c4 == 0.0)                       ? kInf
                                                                                   : kNaN;
  g.eps_threshold = std::min(t1, in.eps_cap);
  if (std::isnan(t1) || std::isnan(in.eps_cap)) g.eps_threshold = kNaN;
  g.eps_below_threshold = std::isfinite(g.eps_threshold) ? in.eps <= g.eps_threshold : (g.eps_threshold == kInf);
  g.hypotheses_certified = !in.hypotheses.empty();
  for (const auto& h : in.hypotheses) {
    if (!h.certified) {
      g.hypotheses_certified = false;
      g.failing.push_back(h.name);
    }
  }
  if (!g.eps_below_threshold) g.failing.emplace_back("epsilon_threshold");
  g.theorem_hypotheses_certified = g.hypotheses_certified && g.eps_below_threshold;
  g.canonical_volume_zero = std::fabs(in.int_neg_ric_n) <= in.volume_tol;
  g.consistent = !(g.theorem_hypotheses_certified && g.canonical_volume_zero);
  if (!g.consistent) {
    g.verdict = "INCONSISTENT: full hypothesis set certified while the canonical volume vanishes";
  } else if (g.theorem_hypotheses_certified) {
    g.verdict = "hypotheses certified; positive canonical volume is consistent with the conclusion";
  } else {
    std::string list;
    for (const auto& f : g.failing) list += (list.empty() ? "" : ", ") + f;
    g.verdict = std::string(g.canonical_volume_zero ? "hypotheses not certified (expected on torus): "
                                                    : "hypotheses not certified: ") +
                list;
  }
  return g;
}

inline ojson to_json(const HypothesisReport& h, const Grid* grid = nullptr) {
  ojson j;
  j["name"] = h.name;
  j["certified"] = h.certified;
  j["min_margin"] = std::isfinite(h.min_margin()) ? ojson(h.min_margin()) : ojson(nullptr);
  j["slack"] = h.slack;
  ojson m = ojson::array();
  for (const auto& x : h.margins) {
    ojson e;
    e["label"] = x.label;
    e["value"] = std::isfinite(x.value) ? ojson(x.value) : ojson(nullptr);
    e["worst_point"] = x.worst_point;
    if (grid) e["worst_location"] = grid->describe_point(x.worst_point);
    m.push_back(e);
  }
  j["margins"] = m;
  j["witnesses"] = h.witnesses;
  ojson p = ojson::object();
  for (const auto& [k, v] : h.parameters) p[k] = v;
  j["parameters"] = p;
  return j;
}

inline ojson num_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

inline ojson to_json(const Constants& c) {
  ojson j;
  j["b0"] = c.b0;
  j["c0"] = c.c0;
  j["c1"] = num_or_null(c.c1);
  j["c1_note"] = "empirical upper bound on the infimum over a finite PSH family";
  j["c1_realized_min"] = num_or_null(c.c1_realized_min);
  j["c1_family_size"] = c.c1_family;
  j["c1_family_skipped"] = c.c1_skipped;
  j["c2"] = num_or_null(c.c2);
  j["c2_alpha_probe"] = num_or_null(c.c2_alpha_probe);
  j["c2_path_max"] = num_or_null(c.c2_path_max);
  j["c3"] = num_or_null(c.c3);
  j["c3_extrapolated"] = num_or_null(c.c3_extrapolated);
  j["c4"] = num_or_null(c.c4);
  j["c4_factor"] = num_or_null(c.c4_detail.factor);
  ojson mixed = ojson::array();
  for (double x : c.c4_detail.mixed) mixed.push_back(x);
  j["mixed_integrals"] = mixed;
  j["eps_cap"] = num_or_null(c.eps_cap);
  j["eps_threshold"] = num_or_null(c.eps_threshold);
  return j;
}

inline ojson to_json(const GapSummary& g) {
  ojson j;
  j["integral_neg_ricci_n"] = g.int_neg_ric_n;
  j["c3_minus_c4_eps"] = num_or_null(g.c3_minus_c4_eps);
  j["eps_threshold"] = num_or_null(g.eps_threshold);
  j["eps_below_threshold"] = g.eps_below_threshold;
  j["hypotheses_certified"] = g.hypotheses_certified;
  j["theorem_hypotheses_certified"] = g.theorem_hypotheses_certified;
  j["canonical_volume_zero"] = g.canonical_volume_zero;
  j["consistent"] = g.consistent;
  j["verdict"] = g.verdict;
  ojson h = ojson::array();
  for (const auto& x : g.hypotheses) {
    ojson e;
    e["name"] = x.name;
    e["certified"] = x.certified;
    e["min_margin"] = num_or_null(x.min_margin);
    h.push_back(e);
  }
  j["hypotheses"] = h;
  j["failing"] = g.failing;
  j["missing"] = g.missing;
  return j;
}

// ----------------------------------------------------------------------------
// Full audit.

struct AuditSettings {
  double tolerance = kNaN;  // NaN: max(1e-8, 10 x largest sample residual)
  double c0 = 1.0;
  int c1_family = 16;
  int alpha_family = 16;
  double alpha_exponent = 1.0;
  std::uint64_t seed = 0;
};

struct AuditGeometry {
  Mode mode = Mode::thm1;
  HermitianField eta;  // thm1 comparison metric; unused for thm2
  ExtremalField ext;   // RBC of eta (thm1) or the Ricci-type functional of omega0 (thm2)
  Mask region;
  double eps = 0.0;
  double delta = 0.0;
  double delta1 = 1.0;
  double delta2 = 0.0;
  double alpha = 0.0;
  double beta = 1.0;
  double b0 = 0.0;
  std::vector<HypothesisReport> hypotheses;
};

struct AuditReport {
  Mode mode = Mode::thm1;
  double tolerance = 1e-8;
  std::vector<AuditRecord> checks;
  std::vector<HypothesisReport> hypotheses;
  Constants constants;
  bool has_gap = false;
  GapSummary gap;
  int samples = 0;

  const AuditRecord* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline bool hypothesis_certified(const std::vector<HypothesisReport>& hs, const std::string& prefix) {
  for (const auto& h : hs)
    if (h.name.rfind(prefix, 0) == 0) return h.certified;
  return false;
}

/// Runs every check on the path (if any) and assembles constants and gap.
inline AuditReport run_audit(const MABackground& bg, const AuditGeometry& geo, const ContinuityPath* path,
                             const AuditSettings& set) {
  const Grid& grid = bg.grid;
  const int n = grid.dim();
  AuditReport rep;
  rep.mode = geo.mode;
  rep.hypotheses = geo.hypotheses;
  std::vector<SampleState> states;
  if (path) states = sample_states(bg, *path);
  rep.samples = static_cast<int>(states.size());
  double max_res = 0.0;
  for (const auto& s : states) max_res = std::max(max_res, s.residual);
  const double tol = std::isnan(set.tolerance) ? std::max(1e-8, 10.0 * max_res) : set.tolerance;
  rep.tolerance = tol;
  const double lam = geo.ext.global_max;

  // constants
  Constants& C = rep.constants;
  C.b0 = geo.b0;
  C.c0 = set.c0;
  const ProbeResult c1p = compute_c1_probe(grid, bg.g0, geo.region, set.c0, geo.b0, set.c1_family, set.seed);
  C.c1 = c1p.value;
  C.c1_family = static_cast<int>(c1p.values.size());
  C.c1_skipped = c1p.skipped;
  if (geo.mode == Mode::thm1) {
    const ProbeResult ap = alpha_probe(grid, bg.g0, set.c0, set.alpha_exponent, set.alpha_family, set.seed + 1);
    C.c2_alpha_probe = ap.value / std::pow(set.c0, n);
    double pm = -kInf;
    for (const auto& s : states) {
      if (s.t > set.c0) continue;
      ScalarField d(grid.size());
      for (std::size_t p = 0; p < grid.size(); ++p)
        d[p] = std::exp(-s.t / geo.delta1 * bg.psi[p]) * bg.det_g0[p];
      pm = std::max(pm, integrate(grid, d));
    }
    C.c2_path_max = std::isfinite(pm) ? pm : kNaN;
    C.c2 = std::isfinite(pm) ? std::max(pm, C.c2_alpha_probe) : C.c2_alpha_probe;
    C.eps_cap = set.c0 / (2.0 * n * geo.delta1);
  } else {
    C.c2 = integrate(grid, bg.det_g0);
    C.eps_cap = geo.alpha > 0.0 ? (n + 1) * geo.alpha * set.c0 / (4.0 * n) : kNaN;
  }
  C.c4_detail = compute_c4(grid, bg.g0, bg.ric, geo.delta1, geo.eps, geo.mode, geo.alpha);
  C.c4 = C.c4_detail.value;

  std::vector<std::string> missing;
  if (path) {
    const double t_limit = std::isfinite(path->threshold) ? path->threshold : -kInf;
    try {
      const C3Estimate c3 = estimate_c3(*path, t_limit);
      C.c3 = c3.minimum;
      C.c3_extrapolated = c3.extrapolated;
    } catch (const Error& e) {
      missing.emplace_back(std::string("c3: ") + e.what());
    }
    if (!std::isfinite(C.c4)) missing.emplace_back("c4: alpha = 0 leaves the epsilon scale undefined");
    if (!std::isfinite(C.eps_cap)) missing.emplace_back("epsilon cap: alpha = 0");
  }
  C.eps_threshold = std::min(std::isfinite(C.c3) && C.c4 > 0.0 ? C.c3 / (2.0 * C.c4) : kNaN, C.eps_cap);

  if (path) {
    double mn_mass = kInf;
    for (const auto& s : states) {
      const double sup = detail::sup_of(s.u);
      ScalarField d(grid.size(), 0.0);
      for (std::size_t p = 0; p < grid.size(); ++p)
        if (geo.region[p]) d[p] = std::exp(s.pr.c * (s.u[p] - sup)) * bg.det_g0[p];
      mn_mass = std::min(mn_mass, integrate(grid, d));
    }
    C.c1_realized_min = std::isfinite(mn_mass) ? mn_mass : kNaN;
  }

  // checks
  if (path) {
    SupBoundParams sp;
    sp.mode = geo.mode;
    sp.delta1 = geo.delta1;
    sp.eps = geo.eps;
    sp.b0 = geo.b0;
    sp.c0 = set.c0;
    sp.alpha = geo.alpha;
    sp.beta = geo.beta;
    sp.lambda = lam;
    if (geo.mode == Mode::thm1) {
      rep.checks.push_back(check_schwarz_path(bg, geo.eta, states, geo.delta1, lam, tol));
      rep.checks.push_back(check_trace_bound(bg, geo.eta, states, geo.delta1, lam, tol));
      rep.checks.push_back(check_sup_ut(*path, n, sp, tol));

      IntegralChainInputs ic{&geo.ext.weighted, &geo.eta, &geo.region, geo.delta1};
      std::vector<AuditRecord> chains;
      for (const auto& s : states) chains.push_back(check_integral_lemma(bg, s, ic, tol));
      AuditRecord agg = detail::fold_samples("integral_lower_bound_chain",
                                             "integral argument bounding sup_U u from below", chains, tol);
      // per-link folds across samples, in chain order
      if (!chains.empty()) {
        std::vector<AuditRecord> links;
        for (std::size_t k = 0; k < chains.front().sub.size(); ++k) {
          std::vector<AuditRecord> per;
          for (const auto& ch : chains) per.push_back(ch.sub[k]);
          links.push_back(detail::fold_samples(chains.front().sub[k].name, chains.front().sub[k].anchor, per, tol));
        }
        AuditRecord ch = detail::chain_record(agg.name, agg.anchor, std::move(links), tol);
        ch.applicable = agg.applicable;
        ch.finish();
        if (ch.details["first_broken_link"].is_string()) {
          ch.pass = false;
          ch.status = "fail";
        }
        ch.details["samples"] = agg.details["samples"];
        ojson disp = ojson::array();
        for (const auto& c : chains) {
          ojson e;
          e["t"] = c.worst_t;
          e["displayed_margin"] = c.details["displayed_margin"];
          disp.push_back(e);
        }
        ch.details["displayed_variant"] = disp;
        rep.checks.push_back(std::move(ch));
      }

      const bool hyp = hypothesis_certified(geo.hypotheses, "quasi_negative") &&
                       hypothesis_certified(geo.hypotheses, "volume_noncollapsed");
      RatioInputs ri{&geo.ext.weighted, &geo.eta, &geo.region, geo.delta, geo.delta1, geo.delta2, C.c1, C.c2, hyp};
      std::vector<std::vector<AuditRecord>> per_name;
      for (const auto& s : states) {
        std::vector<AuditRecord> rs = check_ratio_bounds(bg, s, ri, tol);
        if (s.t > set.c0) {
          for (auto& r : rs) {
            r.applicable = false;
            r.finish();
          }
        }
        if (per_name.empty()) per_name.resize(rs.size());
        for (std::size_t k = 0; k < rs.size(); ++k) per_name[k].push_back(std::move(rs[k]));
      }
      for (auto& v : per_name) {
        const std::string name = v.front().name, anchor = v.front().anchor;
        const bool cond = v.front().conditional;
        rep.checks.push_back(detail::fold_samples(name, anchor, std::move(v), tol, cond));
      }
    } else {
      rep.checks.push_back(check_sup_ut(*path, n, sp, tol));
      for (Thm2Case which : {Thm2Case::lambda_nonneg, Thm2Case::lambda_neg, Thm2Case::pointwise_tau}) {
        std::vector<AuditRecord> per;
        for (const auto& s : states)
          per.push_back(check_thm2_differential_inequality(bg, s, geo.alpha, geo.beta, lam, &geo.ext.weighted, which, tol));
        AuditRecord r = detail::fold_samples(thm2_case_name(which),
                                             "Laplacian lower bound for log tr(omega0) - (alpha/2beta) phi", per, tol);
        if (which == Thm2Case::lambda_nonneg && lam < 0.0) r.details["note"] = "lambda < 0: see the negative case";
        if (which == Thm2Case::lambda_neg && lam >= 0.0) r.details["note"] = "not applicable for lambda >= 0";
        rep.checks.push_back(std::move(r));
      }
      std::vector<std::vector<AuditRecord>> per_name;
      for (const auto& s : states) {
        std::vector<AuditRecord> rs = check_thm2_consequences(bg, s, tol);
        if (per_name.empty()) per_name.resize(rs.size());
        for (std::size_t k = 0; k < rs.size(); ++k) per_name[k].push_back(std::move(rs[k]));
      }
      for (auto& v : per_name) {
        const std::string name = v.front().name, anchor = v.front().anchor;
        ojson realized = ojson::array();
        for (const auto& r : v) {
          if (r.details.contains("realized_C")) realized.push_back(r.details["realized_C"]);
          if (r.details.contains("realized_C_prime")) realized.push_back(r.details["realized_C_prime"]);
        }
        AuditRecord f = detail::fold_samples(name, anchor, std::move(v), tol);
        if (!realized.empty()) f.details["realized_constants"] = realized;
        rep.checks.push_back(std::move(f));
      }
      Thm2ChainInputs ti{&geo.ext.weighted, &geo.region, geo.alpha, geo.beta};
      std::vector<AuditRecord> chains;
      for (const auto& s : states) chains.push_back(check_thm2_integral_chain(bg, s, ti, tol));
      if (!chains.empty()) {
        AuditRecord agg = detail::fold_samples("thm2_integral_chain", "integral argument bounding sup phi from below",
                                               chains, tol);
        std::vector<AuditRecord> links;
        for (std::size_t k = 0; k < chains.front().sub.size(); ++k) {
          std::vector<AuditRecord> per;
          for (const auto& ch : chains) per.push_back(ch.sub[k]);
          links.push_back(detail::fold_samples(chains.front().sub[k].name, chains.front().sub[k].anchor, per, tol));
        }
        AuditRecord ch = detail::chain_record(agg.name, agg.anchor, std::move(links), tol);
        ch.applicable = agg.applicable;
        ch.finish();
        if (ch.details["first_broken_link"].is_string()) {
          ch.pass = false;
          ch.status = "fail";
        }
        ch.details["samples"] = agg.details["samples"];
        rep.checks.push_back(std::move(ch));
      }
      const bool hyp = hypothesis_certified(geo.hypotheses, "quasi_negative");
      Thm2RatioInputs tr{&geo.ext.weighted, &geo.region, geo.alpha, geo.beta, geo.delta, C.c1, C.c2, hyp};
      std::vector<std::vector<AuditRecord>> rn;
      for (const auto& s : states) {
        std::vector<AuditRecord> rs = check_thm2_ratio(bg, s, tr, tol);
        if (rn.empty()) rn.resize(rs.size());
        for (std::size_t k = 0; k < rs.size(); ++k) rn[k].push_back(std::move(rs[k]));
      }
      for (auto& v : rn) {
        const std::string name = v.front().name, anchor = v.front().anchor;
        const bool cond = v.front().conditional;
        rep.checks.push_back(detail::fold_samples(name, anchor, std::move(v), tol, cond));
      }
    }

    GapInputs gi;
    gi.int_neg_ric_n = C.c4_detail.mixed.empty() ? kNaN : C.c4_detail.mixed[0];
    gi.c3 = C.c3;
    gi.c4 = C.c4;
    gi.eps = geo.eps;
    gi.eps_cap = C.eps_cap;
    for (const auto& h : geo.hypotheses) gi.hypotheses.push_back({h.name, h.certified, h.min_margin()});
    gi.missing = missing;
    rep.gap = gap_report(gi);
    rep.has_gap = true;
  }
  return rep;
}

inline ojson to_json(const AuditReport& rep, const Grid* grid = nullptr) {
  ojson j;
  j["schema"] = "kgap-report v1";
  j["mode"] = mode_name(rep.mode);
  j["tolerance"] = rep.tolerance;
  j["samples"] = rep.samples;
  ojson checks = ojson::array();
  for (const auto& c : rep.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  ojson hyps = ojson::array();
  for (const auto& h : rep.hypotheses) hyps.push_back(to_json(h, grid));
  j["hypotheses"] = hyps;
  j["constants"] = to_json(rep.constants);
  if (rep.has_gap) j["gap"] = to_json(rep.gap);
  return j;
}

}  // namespace kgap
