#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <cmath>
#include <map>
#include <string>

#include "kgap/run.hpp"
#include "oracles.hpp"

namespace support {

using namespace kgap;

inline TrigSeries to_series(const std::vector<oracle::Mode>& modes) {
  TrigSeries s;
  for (const auto& m : modes) s.add(m.k, m.c, m.s);
  return s;
}

// Draws potentials until I + dd^c phi has smallest eigenvalue above `floor` on the grid.
inline std::vector<oracle::Mode> pd_potential(const Grid& g, int modes, double amp, std::mt19937_64& rng,
                                              double floor = 0.2) {
  for (;;) {
    auto m = oracle::random_potential(g.dim(), modes, amp, rng);
    try {
      const auto mf = build_metric(MetricSpec::kahler(to_series(m)), g);
      if (mf.min_eigenvalue > floor) return m;
    } catch (const NotPositiveDefinite&) {
    }
  }
}

inline double max_error(const ScalarField& a, const ScalarField& b) {
  double e = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) e = std::max(e, std::fabs(a[p] - b[p]));
  return e;
}

struct Manufactured {
  MABackground bg;
  MAProblem pr;
  ScalarField exact;
};

// Curved background, thm1 equation at the first t' >= t (unit steps) with chi > 0.5 omega0,
// density chosen so that phi* solves it.
// dd^c phi* is taken from the closed-form potential, not from the grid.
inline Manufactured manufactured(int n, int N, double pot_amp, double t, std::uint64_t seed) {
  const Grid g = make_grid(n, N);
  std::mt19937_64 rng(seed);
  const auto pot = oracle::random_potential(n, 3, pot_amp, rng);
  const auto star = oracle::random_potential(n, 3, 0.02, rng);
  const auto mf = build_metric(MetricSpec::kahler(to_series(pot)), g);
  std::vector<int> k(2 * n, 0);
  k[1] = 1;
  const auto psi = TrigSeries::cosine(k, 0.01).sample(g);
  Manufactured m{make_background(g, mf.g, ricci_form(g, mf.g), psi), {}, {}};
  m.pr = assemble_problem(m.bg, Mode::thm1, t, 0.0, 1.0, 1.0);
  while (m.pr.chi_min_eig < 0.5) m.pr = assemble_problem(m.bg, Mode::thm1, t += 1.0, 0.0, 1.0, 1.0);
  m.pr.log_f.resize(g.size());
  m.exact.resize(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto x = g.coords(p);
    m.exact[p] = oracle::series(star, x);
    const oracle::CMat w =
        oracle::CMat(m.pr.chi.at(p)) + oracle::kahler_metric(star, n, x) - oracle::CMat::Identity(n, n);
    m.pr.log_f[p] = std::log(w.determinant().real()) - m.bg.log_det_g0[p] - m.exact[p];
  }
  return m;
}

// A configuration solved and audited in memory.
struct Solved {
  Workspace ws;
  ExtremalField ext;
  Resolved r;
  ContinuityPath path;
  AuditGeometry geo;
  AuditReport rep;
  std::vector<SampleState> states;
};

inline Solved solve_config(const RunConfig& cfg) {
  Workspace ws = build_workspace(cfg);
  ExtremalField ext = compute_extremal(ws);
  Resolved r = resolve_parameters(ws, ext);
  ContinuationParams cp;
  cp.mode = cfg.mode;
  cp.alpha = r.alpha;
  cp.beta = r.beta;
  cp.delta1 = r.delta1;
  cp.threshold = r.threshold;
  cp.solver = cfg.solver;
  ContinuityPath path = run_continuation(ws.bg, ws.eta.g, r.schedule, cp);
  AuditGeometry geo = audit_geometry(ws, ext, r, certify_all(ws, ext, r));
  AuditReport rep = run_audit(ws.bg, geo, &path, audit_settings(cfg));
  auto states = sample_states(ws.bg, path);
  return Solved{std::move(ws), std::move(ext), std::move(r), std::move(path), std::move(geo), std::move(rep),
                std::move(states)};
}

inline std::string corpus_path(const std::string& name) {
  return std::string(KGAP_CORPUS_DIR) + "/" + name + ".json";
}

// Solves each corpus entry once per process.
inline const Solved& cached(const std::string& name) {
  static std::map<std::string, Solved> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, solve_config(load_config(corpus_path(name)))).first;
  return it->second;
}

// States rebuilt from phi + shift(x) on every sample.
inline std::vector<SampleState> shifted_states(const Solved& s, const ScalarField& shift) {
  std::vector<SampleState> out;
  for (const auto& ps : s.path.samples) {
    PathSample q;
    q.t = ps.t;
    q.phi = ps.phi;
    for (std::size_t p = 0; p < shift.size(); ++p) q.phi[p] += shift[p];
    out.push_back(make_sample_state(s.ws.bg, s.path, q));
  }
  return out;
}

inline const AuditRecord* sub(const AuditRecord& r, const std::string& name) {
  for (const auto& s : r.sub)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace support
