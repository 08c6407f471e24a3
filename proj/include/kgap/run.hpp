#pragma once

// Pipeline orchestration and run directories:
//   config.json   validated configuration echo
//   meta.json     versions, grid, csv version, stage timings
//   fields/       binary dumps (geometry, extremal fields, one phi per sample)
//   curvature.json, certify.json   stage summaries
//   path.json     path index, rewritten after every persisted sample
//   summary.csv   one row per sample
//   report.json   audit report
//   plots/        margin and sup-u curves

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <fftw3.h>
#include <Eigen/Core>
#include <json.hpp>

#include "kgap/audit.hpp"
#include "kgap/config.hpp"
#include "kgap/field_io.hpp"
#include "kgap/svg.hpp"

#ifndef KGAP_VERSION
#define KGAP_VERSION "dev"
#endif

namespace kgap {

inline constexpr const char* kSummaryVersion = "kgap-summary v1";
inline constexpr const char* kPathSchema = "kgap-path v1";

/// Everything derived from the configuration before any optimization or solve.
struct Workspace {
  RunConfig cfg;
  Grid grid;
  MetricField omega0;
  MetricField eta;
  CurvatureTensorField curv0;
  MABackground bg;
  Mask region;
};

inline Workspace build_workspace(const RunConfig& cfg) {
  const auto& G = cfg.geometry;
  Grid grid(G.n, G.N);
  if (G.omega0.curvature.kind != CurvatureOverride::Kind::none) {
    throw Error(ErrorCode::Config, "geometry.omega0: curvature overrides are only supported on eta");
  }
  MetricField w0 = build_metric(G.omega0, grid);
  MetricField eta = G.eta_is_omega0 ? w0 : build_metric(G.eta, grid);
  CurvatureTensorField c0 = chern_curvature(grid, w0);
  MABackground bg = make_background(grid, w0.g, c0.ric, G.psi.sample(grid));
  Mask region = region_mask(grid, G.region);
  return Workspace{cfg, grid, std::move(w0), std::move(eta), std::move(c0), std::move(bg), std::move(region)};
}

/// RBC field of eta (thm1) or the configured functional of omega0 (thm2).
inline ExtremalField compute_extremal(const Workspace& ws) {
  if (ws.cfg.mode == Mode::thm1) {
    const CurvatureTensorField ce = ws.cfg.geometry.eta_is_omega0 ? ws.curv0 : chern_curvature(ws.grid, ws.eta);
    return extremal_field(ws.grid, ce, ws.eta.g, ws.cfg.functional, ws.cfg.optimizer);
  }
  return extremal_field(ws.grid, ws.curv0, ws.omega0.g, ws.cfg.functional, ws.cfg.optimizer);
}

inline ScalarField compute_max_hsc(const Workspace& ws) {
  if (ws.cfg.mode == Mode::thm1) {
    const CurvatureTensorField ce = ws.cfg.geometry.eta_is_omega0 ? ws.curv0 : chern_curvature(ws.grid, ws.eta);
    return max_hsc_field(ws.grid, ce, ws.eta.g, ws.cfg.optimizer);
  }
  return max_hsc_field(ws.grid, ws.curv0, ws.omega0.g, ws.cfg.optimizer);
}

/// Hypothesis parameters and schedule with the automatic entries filled in.
struct Resolved {
  double eps = 0.0;
  double delta = 0.0;
  double delta1 = 1.0;
  double delta2 = 0.0;
  double delta1_min = 0.0;  // smallest delta1 with eta <= delta1 omega0 + dd^c psi
  double delta2_max = 0.0;  // min over U of det eta / det omega0
  double alpha = 0.0;
  double beta = 1.0;
  double threshold = 0.0;
  Schedule schedule;
};

inline Resolved resolve_parameters(const Workspace& ws, const ExtremalField& ext) {
  const auto& H = ws.cfg.hypotheses;
  Resolved r;
  r.delta = H.delta;
  const int n = ws.grid.dim();
  double d1 = -kInf;
  for (std::size_t p = 0; p < ws.grid.size(); ++p)
    d1 = std::max(d1, max_relative_eigenvalue(ws.eta.g.at(p) - ws.bg.ddc_psi.at(p), ws.omega0.g.at(p)));
  r.delta1_min = d1;
  r.delta1 = H.delta1 ? *H.delta1 : std::max(1.05 * d1, 1e-6);
  double d2 = kInf;
  for (std::size_t p = 0; p < ws.grid.size(); ++p)
    if (ws.region[p]) d2 = std::min(d2, det_real(ws.eta.g.at(p)) / det_real(ws.omega0.g.at(p)));
  r.delta2_max = d2;
  r.delta2 = H.delta2 ? *H.delta2 : 0.95 * d2;
  r.eps = H.epsilon ? *H.epsilon : std::max(1.05 * ext.global_max, 1e-3);
  if (ws.cfg.mode == Mode::thm2) {
    r.alpha = ws.cfg.functional.alpha;
    r.beta = ws.cfg.functional.beta;
  }
  r.threshold = path_threshold(ws.cfg.mode, n, ext.global_max, r.alpha, r.delta1);
  r.schedule = ws.cfg.schedule.base;
  const double thr = std::isfinite(r.threshold) ? std::max(r.threshold, 0.0) : 0.0;
  if (ws.cfg.schedule.auto_start) r.schedule.t_start = std::max(1.0, 1.5 * thr + 0.2);
  if (ws.cfg.schedule.auto_end) r.schedule.t_end = std::max(1.05 * thr, 0.25 * r.schedule.t_start);
  return r;
}

inline std::vector<HypothesisReport> certify_all(const Workspace& ws, const ExtremalField& ext, const Resolved& r) {
  const double slack = ws.cfg.hypotheses.slack;
  std::vector<HypothesisReport> out;
  out.push_back(certify_quasi_negative(ext, r.eps, r.delta, ws.region, slack));
  if (ws.cfg.mode == Mode::thm1) {
    out.push_back(certify_delta1_bounded(ws.grid, ws.eta.g, ws.omega0.g, ws.bg.psi, r.delta1, slack));
    out.push_back(certify_volume_noncollapse(ws.eta.g, ws.omega0.g, r.delta2, ws.region, slack));
  }
  return out;
}

inline ojson resolved_json(const Resolved& r) {
  ojson j;
  j["epsilon"] = r.eps;
  j["delta"] = r.delta;
  j["delta1"] = r.delta1;
  j["delta1_min"] = num_or_null(r.delta1_min);
  j["delta2"] = r.delta2;
  j["delta2_max"] = num_or_null(r.delta2_max);
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["path_threshold"] = num_or_null(r.threshold);
  j["t_start"] = r.schedule.t_start;
  j["t_end"] = r.schedule.t_end;
  return j;
}

inline ojson curvature_json(const Workspace& ws, const ExtremalField& ext) {
  ojson j;
  const bool thm1 = ws.cfg.mode == Mode::thm1;
  j["functional"] = functional_name(ext.functional.kind);
  j["of_metric"] = thm1 ? "eta" : "omega0";
  j[thm1 ? "mu_eta" : "lambda"] = ext.global_max;
  double mn = kInf;
  for (double v : ext.values) mn = std::min(mn, v);
  j["min_pointwise_max"] = mn;
  j["argmax_point"] = ext.argmax;
  j["argmax_coords"] = ws.grid.coords(ext.argmax);
  j["unconverged_points"] = ext.unconverged;
  j["b0"] = ws.curv0.b0;
  j["integral_neg_ricci_n"] = mixed_top_integral(ws.grid, ws.omega0.g, -ws.curv0.ric, 0);
  j["omega0_min_eigenvalue"] = ws.omega0.min_eigenvalue;
  j["omega0_kahler_defect"] = ws.omega0.kahler_defect;
  j["eta_min_eigenvalue"] = ws.eta.min_eigenvalue;
  j["eta_kahler_defect"] = ws.eta.kahler_defect;
  return j;
}

// ---------------------------------------------------------------------------
// Run directory

struct RunDir {
  fs::path root;
  fs::path fields() const { return root / "fields"; }
  fs::path plots() const { return root / "plots"; }
  fs::path file(const char* name) const { return root / name; }
};

inline ojson read_json_file(const fs::path& p) {
  try {
    return ojson::parse(detail::read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, "unreadable " + p.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& p, const ojson& j) { detail::write_text_atomic(p, j.dump(2) + "\n"); }

/// Creates or resets a run directory: previous artifacts of a run are removed,
/// anything else is left alone.
inline RunDir prepare_run_dir(const fs::path& root, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create run directory " + root.string() + ": " + ec.message());
  RunDir rd{root};
  for (const char* f : {"config.json", "meta.json", "curvature.json", "certify.json", "path.json", "summary.csv",
                        "report.json"})
    fs::remove(rd.file(f), ec);
  fs::remove_all(rd.fields(), ec);
  fs::remove_all(rd.plots(), ec);
  fs::create_directories(rd.fields());
  write_json_file(rd.file("config.json"), config_json(cfg));
  ojson meta;
  meta["kgap_version"] = KGAP_VERSION;
  meta["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION);
  meta["fftw_version"] = std::string(fftw_version);
  meta["json_library"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  meta["grid"] = {{"n", cfg.geometry.n}, {"N", cfg.geometry.N},
                  {"points", Grid(cfg.geometry.n, cfg.geometry.N).size()}};
  meta["summary_csv_version"] = kSummaryVersion;
  meta["path_schema"] = kPathSchema;
  meta["report_schema"] = "kgap-report v1";
  meta["timing_seconds"] = ojson::object();
  write_json_file(rd.file("meta.json"), meta);
  return rd;
}

inline RunDir open_run_dir(const fs::path& root) {
  RunDir rd{root};
  if (!fs::exists(rd.file("config.json"))) {
    throw Error(ErrorCode::Io, root.string() + " is not a run directory (no config.json)");
  }
  return rd;
}

inline void record_timing(const RunDir& rd, const std::string& stage, double seconds) {
  ojson meta = fs::exists(rd.file("meta.json")) ? read_json_file(rd.file("meta.json")) : ojson::object();
  meta["timing_seconds"][stage] = seconds;
  write_json_file(rd.file("meta.json"), meta);
}

class StageTimer {
 public:
  StageTimer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline void write_geometry_fields(const RunDir& rd, const Workspace& ws) {
  write_field(rd.fields(), ws.grid, "omega0", ws.omega0.g);
  write_field(rd.fields(), ws.grid, "eta", ws.eta.g);
  write_field(rd.fields(), ws.grid, "ricci_omega0", ws.curv0.ric);
  write_field(rd.fields(), ws.grid, "psi", ws.bg.psi);
}

inline void write_extremal_fields(const RunDir& rd, const Workspace& ws, const ExtremalField& ext) {
  write_field(rd.fields(), ws.grid, "extremal_max", ext.values);
  write_field(rd.fields(), ws.grid, "extremal_weighted", ext.weighted);
}

/// Pointwise maxima from the dump; the weighting is recomputed.
inline ExtremalField load_extremal(const RunDir& rd, const Workspace& ws) {
  ScalarField v = read_scalar_field(rd.fields(), ws.grid, "extremal_max");
  ExtremalField ef = extremal_from_values(std::move(v), ws.cfg.functional, ws.grid.dim());
  if (fs::exists(rd.file("curvature.json"))) {
    const ojson c = read_json_file(rd.file("curvature.json"));
    ef.unconverged = c.at("curvature").value("unconverged_points", 0);
  }
  return ef;
}

inline ojson diag_json(const SampleDiagnostics& d) {
  ojson j;
  j["sup_u"] = d.sup_u;
  j["min_eig"] = d.min_eig;
  j["sup_tr_eta"] = d.sup_tr_eta;
  j["int_exp_u"] = d.int_exp_u;
  j["int_c3"] = d.int_c3;
  j["newton_iters"] = d.newton_iters;
  j["residual"] = d.residual;
  return j;
}

inline SampleDiagnostics diag_from_json(const ojson& j) {
  SampleDiagnostics d;
  d.sup_u = j.at("sup_u").get<double>();
  d.min_eig = j.at("min_eig").get<double>();
  d.sup_tr_eta = j.at("sup_tr_eta").get<double>();
  d.int_exp_u = j.at("int_exp_u").get<double>();
  d.int_c3 = j.at("int_c3").get<double>();
  d.newton_iters = j.at("newton_iters").get<int>();
  d.residual = j.at("residual").get<double>();
  return d;
}

inline std::string sample_field_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phi_%04zu", i);
  return buf;
}

inline ojson path_json(const ContinuityPath& path, bool finished) {
  ojson j;
  j["schema"] = kPathSchema;
  j["mode"] = mode_name(path.mode);
  j["alpha"] = path.alpha;
  j["beta"] = path.beta;
  j["delta1"] = path.delta1;
  j["c"] = path.c;
  j["threshold"] = num_or_null(path.threshold);
  j["schedule"] = schedule_points(path.schedule);
  j["finished"] = finished;
  j["completed"] = path.completed;
  j["termination"] = finished ? path.termination : std::string("in progress");
  ojson s = ojson::array();
  for (std::size_t i = 0; i < path.samples.size(); ++i) {
    ojson e;
    e["index"] = i;
    e["t"] = path.samples[i].t;
    e["field"] = sample_field_name(i);
    e["diag"] = diag_json(path.samples[i].diag);
    s.push_back(e);
  }
  j["samples"] = s;
  return j;
}

inline std::string summary_csv(const ContinuityPath& path) {
  std::string out = std::string("# ") + kSummaryVersion + "\n";
  out += "index,t,sup_u,min_eig,sup_tr_eta,int_exp_u,int_c3,phi_min,phi_max,phi_mean,newton_iters,residual\n";
  char buf[512];
  for (std::size_t i = 0; i < path.samples.size(); ++i) {
    const auto& s = path.samples[i];
    double mn = kInf, mx = -kInf, mean = 0.0;
    for (double x : s.phi) {
      mn = std::min(mn, x);
      mx = std::max(mx, x);
      mean += x;
    }
    mean /= static_cast<double>(s.phi.size());
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", i, s.t,
                  s.diag.sup_u, s.diag.min_eig, s.diag.sup_tr_eta, s.diag.int_exp_u, s.diag.int_c3, mn, mx, mean,
                  s.diag.newton_iters, s.diag.residual);
    out += buf;
  }
  return out;
}

/// Runs the continuation, persisting each sample as soon as it is solved.
inline ContinuityPath solve_and_persist(const RunDir& rd, const Workspace& ws, const Resolved& r) {
  ContinuationParams cp;
  cp.mode = ws.cfg.mode;
  cp.alpha = r.alpha;
  cp.beta = r.beta;
  cp.delta1 = r.delta1;
  cp.threshold = r.threshold;
  cp.solver = ws.cfg.solver;
  auto persist = [&](const PathSample& s, const ContinuityPath& p) {
    write_field(rd.fields(), ws.grid, sample_field_name(p.samples.size() - 1), s.phi);
    write_json_file(rd.file("path.json"), path_json(p, false));
    detail::write_text_atomic(rd.file("summary.csv"), summary_csv(p));
  };
  ContinuityPath empty;
  empty.mode = cp.mode;
  empty.alpha = cp.alpha;
  empty.beta = cp.beta;
  empty.delta1 = cp.delta1;
  empty.c = exponent_c(cp.mode, cp.alpha, cp.beta);
  empty.threshold = cp.threshold;
  empty.schedule = r.schedule;
  write_json_file(rd.file("path.json"), path_json(empty, false));
  detail::write_text_atomic(rd.file("summary.csv"), summary_csv(empty));
  ContinuityPath path = run_continuation(ws.bg, ws.eta.g, r.schedule, cp, persist);
  write_json_file(rd.file("path.json"), path_json(path, true));
  detail::write_text_atomic(rd.file("summary.csv"), summary_csv(path));
  return path;
}

/// Rebuilds a path from path.json and the per-sample dumps (checksums verified).
inline ContinuityPath load_path(const RunDir& rd, const Workspace& ws, const Resolved& r) {
  const ojson j = read_json_file(rd.file("path.json"));
  if (j.value("schema", "") != kPathSchema) throw Error(ErrorCode::Io, "path.json: unknown schema");
  ContinuityPath path;
  path.mode = ws.cfg.mode;
  path.alpha = j.at("alpha").get<double>();
  path.beta = j.at("beta").get<double>();
  path.delta1 = j.at("delta1").get<double>();
  path.c = j.at("c").get<double>();
  path.threshold = j.at("threshold").is_null() ? kNaN : j.at("threshold").get<double>();
  path.schedule = r.schedule;
  path.completed = j.value("completed", false);
  path.termination = j.value("termination", "");
  for (const auto& e : j.at("samples")) {
    PathSample s;
    s.t = e.at("t").get<double>();
    s.phi = read_scalar_field(rd.fields(), ws.grid, e.at("field").get<std::string>());
    const MAProblem pr = assemble_problem(ws.bg, path.mode, s.t, path.alpha, path.beta, path.delta1);
    s.u = potential_u(ws.bg, pr, s.phi);
    s.diag = diag_from_json(e.at("diag"));
    path.samples.push_back(std::move(s));
  }
  return path;
}

inline AuditSettings audit_settings(const RunConfig& cfg) {
  AuditSettings s;
  s.tolerance = cfg.audit.tolerance ? *cfg.audit.tolerance : kNaN;
  s.c0 = cfg.audit.c0;
  s.c1_family = cfg.audit.c1_family;
  s.alpha_family = cfg.audit.alpha_family;
  s.alpha_exponent = cfg.audit.alpha_exponent;
  s.seed = cfg.seed;
  return s;
}

inline AuditGeometry audit_geometry(const Workspace& ws, const ExtremalField& ext, const Resolved& r,
                                    std::vector<HypothesisReport> hyps) {
  AuditGeometry g;
  g.mode = ws.cfg.mode;
  g.eta = ws.eta.g;
  g.ext = ext;
  g.region = ws.region;
  g.eps = r.eps;
  g.delta = r.delta;
  g.delta1 = r.delta1;
  g.delta2 = r.delta2;
  g.alpha = r.alpha;
  g.beta = r.beta;
  g.b0 = ws.curv0.b0;
  g.hypotheses = std::move(hyps);
  return g;
}

// ---------------------------------------------------------------------------
// Plots

inline void write_plots(const RunDir& rd, const ojson& report, const ContinuityPath* path) {
  fs::create_directories(rd.plots());
  std::vector<PlotSeries> margins;
  const double tol = report.value("tolerance", 1e-8);
  for (const auto& c : report.at("checks")) {
    if (c.value("status", "") == "vacuous" || !c.contains("details") || !c["details"].contains("samples")) continue;
    PlotSeries s;
    s.label = c.value("name", "");
    for (const auto& row : c["details"]["samples"]) {
      if (!row["t"].is_number() || !row["margin"].is_number() || row.value("status", "") == "vacuous") continue;
      const double m = row["margin"].get<double>();
      s.x.push_back(row["t"].get<double>());
      // signed log scale in units of the tolerance
      s.y.push_back((m < 0 ? -1.0 : 1.0) * std::log10(1.0 + std::fabs(m) / tol));
    }
    if (!s.x.empty()) margins.push_back(std::move(s));
  }
  detail::write_text_atomic(rd.plots() / "margins.svg",
                            svg_line_chart("Audit margins along the path", "t",
                                           "sign(m) log10(1 + |m| / tol)", margins, 0.0));
  if (!path) return;
  PlotSeries sup{"sup u_t", {}, {}, false};
  PlotSeries bound{"upper bound", {}, {}, true};
  for (const auto& s : path->samples) {
    sup.x.push_back(s.t);
    sup.y.push_back(s.diag.sup_u);
  }
  for (const auto& c : report.at("checks")) {
    if (c.value("name", "") != "sup_u_bound" || !c.contains("subchecks")) continue;
    for (const auto& sc : c["subchecks"]) {
      if (sc.value("name", "") != "sup_u_intermediate") continue;
      std::size_t i = 0;
      for (const auto& row : sc["details"]["samples"]) {
        if (i < path->samples.size() && row["margin"].is_number()) {
          // margin = bound - c sup u
          bound.x.push_back(path->samples[i].t);
          bound.y.push_back((row["margin"].get<double>() + path->c * path->samples[i].diag.sup_u) / path->c);
        }
        ++i;
      }
    }
  }
  detail::write_text_atomic(rd.plots() / "sup_u.svg",
                            svg_line_chart("sup u_t against its maximum-principle bound", "t", "value", {sup, bound}));
}

// ---------------------------------------------------------------------------
// Stages

struct CurvatureOutcome {
  Workspace ws;
  ExtremalField ext;
  Resolved resolved;
  ojson summary;
};

inline CurvatureOutcome stage_curvature(const RunDir& rd, const RunConfig& cfg, bool with_hsc = false) {
  StageTimer timer;
  Workspace ws = build_workspace(cfg);
  write_geometry_fields(rd, ws);
  ExtremalField ext = compute_extremal(ws);
  write_extremal_fields(rd, ws, ext);
  Resolved r = resolve_parameters(ws, ext);
  ojson j;
  j["schema"] = "kgap-curvature v1";
  j["curvature"] = curvature_json(ws, ext);
  if (with_hsc) {
    const ScalarField hsc = compute_max_hsc(ws);
    write_field(rd.fields(), ws.grid, "max_hsc", hsc);
    j["curvature"]["max_hsc"] = *std::max_element(hsc.begin(), hsc.end());
  }
  j["resolved"] = resolved_json(r);
  write_json_file(rd.file("curvature.json"), j);
  record_timing(rd, "curvature", timer.seconds());
  return CurvatureOutcome{std::move(ws), std::move(ext), r, j};
}

inline ojson certify_json(const Workspace& ws, const std::vector<HypothesisReport>& hs, const Resolved& r) {
  ojson j;
  j["schema"] = "kgap-certify v1";
  j["resolved"] = resolved_json(r);
  ojson a = ojson::array();
  for (const auto& h : hs) a.push_back(to_json(h, &ws.grid));
  j["hypotheses"] = a;
  return j;
}

/// Full report document: audit plus run context.
inline ojson report_document(const Workspace& ws, const ExtremalField& ext, const Resolved& r,
                             const AuditReport& rep, const ContinuityPath* path) {
  ojson j = to_json(rep, &ws.grid);
  ojson run;
  run["config_seed"] = ws.cfg.seed;
  run["grid"] = {{"n", ws.grid.dim()}, {"N", ws.grid.resolution()}, {"points", ws.grid.size()}};
  run["curvature"] = curvature_json(ws, ext);
  run["resolved"] = resolved_json(r);
  if (path) {
    run["path"] = {{"samples", path->samples.size()},
                   {"completed", path->completed},
                   {"termination", path->termination}};
  }
  j["run"] = run;
  return j;
}

/// Audits a run directory using only what it contains. If no solve was
/// persisted, the geometry-level part of the audit still runs.
inline ojson audit_run_dir(const RunDir& rd, const std::optional<double>& tol_override = std::nullopt) {
  StageTimer timer;
  RunConfig cfg = load_config(rd.file("config.json"));
  if (tol_override) cfg.audit.tolerance = *tol_override;
  Workspace ws = build_workspace(cfg);
  ExtremalField ext = field_exists(rd.fields(), "extremal_max") ? load_extremal(rd, ws) : compute_extremal(ws);
  const Resolved r = resolve_parameters(ws, ext);
  std::optional<ContinuityPath> path;
  if (fs::exists(rd.file("path.json"))) {
    path = load_path(rd, ws, r);
    if (path->samples.empty()) path.reset();
  }
  const AuditReport rep = run_audit(ws.bg, audit_geometry(ws, ext, r, certify_all(ws, ext, r)),
                                    path ? &*path : nullptr, audit_settings(cfg));
  ojson doc = report_document(ws, ext, r, rep, path ? &*path : nullptr);
  write_json_file(rd.file("report.json"), doc);
  write_plots(rd, doc, path ? &*path : nullptr);
  record_timing(rd, "audit", timer.seconds());
  return doc;
}

}  // namespace kgap
