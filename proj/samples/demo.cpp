// Perturbed flat curve: curvature extremes, continuity path, audit summary.

#include <cstdio>

#include "kgap/run.hpp"

using namespace kgap;

int main() {
  const RunConfig cfg = parse_config(R"({
    "geometry": {"n": 1, "N": 32,
                 "omega0": {"family": "kahler_potential",
                            "potential": {"modes": [{"k": [1, 0], "cos": 0.02}, {"k": [0, 1], "sin": 0.01}]}}},
    "mode": "thm1",
    "schedule": {"rule": "linear", "t_start": "auto", "t_end": "auto", "steps": 6}})",
                                     "demo");
  const Workspace ws = build_workspace(cfg);
  const ExtremalField ext = compute_extremal(ws);
  const Resolved r = resolve_parameters(ws, ext);
  std::printf("grid %zu points, curvature max %.6g at point %lld\n", ws.grid.size(), ext.global_max,
              static_cast<long long>(ext.argmax));
  std::printf("delta1 %.6g, eps %.6g, path threshold %.6g\n", r.delta1, r.eps, r.threshold);

  ContinuationParams cp;
  cp.mode = cfg.mode;
  cp.delta1 = r.delta1;
  cp.threshold = r.threshold;
  cp.solver = cfg.solver;
  const ContinuityPath path = run_continuation(ws.bg, ws.eta.g, r.schedule, cp);
  std::printf("\n%8s %12s %12s %12s %6s\n", "t", "sup u", "int e^u", "residual", "iters");
  for (const auto& s : path.samples)
    std::printf("%8.4f %12.6g %12.6g %12.3g %6d\n", s.t, s.diag.sup_u, s.diag.int_exp_u, s.diag.residual,
                s.diag.newton_iters);
  std::printf("termination: %s\n\n", path.termination.c_str());

  const AuditGeometry geo = audit_geometry(ws, ext, r, certify_all(ws, ext, r));
  const AuditReport rep = run_audit(ws.bg, geo, &path, audit_settings(cfg));
  for (const auto& c : rep.checks) std::printf("%-36s %-8s margin %.3g\n", c.name.c_str(), c.status.c_str(), c.margin);
  std::printf("\n%s\n", rep.gap.verdict.c_str());
}
