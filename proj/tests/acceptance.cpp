// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace kgap;
using support::cached;
using support::Solved;
using support::sub;

namespace {

// Collects failed expectations and a few headline numbers for one criterion.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      if (failures_.size() < 12) failures_.push_back(what);
    }
  }
  void leq(double v, double bound, const std::string& what) {
    std::ostringstream os;
    os << what << " = " << v << " (bound " << bound << ")";
    expect(v <= bound, os.str());
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return ok_; }
  void print() const {
    for (const auto& n : notes_) std::cout << "  " << n << "\n";
    for (const auto& f : failures_) std::cout << "  FAILED: " << f << "\n";
  }

 private:
  bool ok_ = true;
  std::vector<std::string> notes_, failures_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<std::string>& corpus() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : fs::directory_iterator(KGAP_CORPUS_DIR))
      if (e.path().extension() == ".json") v.push_back(e.path().stem().string());
    std::sort(v.begin(), v.end());
    return v;
  }();
  return names;
}

const std::vector<std::string> kPerturbed = {"perturbed_thm1_n1", "perturbed_thm1_n2", "perturbed_thm2_n1",
                                             "perturbed_thm2_n2"};

double tensor_max(const TensorField& t) {
  double m = 0.0;
  for (auto v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

double hermitian_max(const HermitianField& h) {
  double m = 0.0;
  for (auto v : h.data()) m = std::max(m, std::abs(v));
  return m;
}

oracle::PointTensor to_oracle(const PointCurvature& pc) {
  oracle::PointTensor t;
  t.n = pc.n;
  t.R = pc.R;
  t.g = pc.g;
  return t;
}

// ---------------------------------------------------------------------------

void curvature_oracle(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int n : {1, 2}) {
    const Grid g = make_grid(n, 32);
    for (int trial = 0; trial < 5; ++trial) {
      const auto modes = support::pd_potential(g, 3, 0.02, rng);
      const auto mf = build_metric(MetricSpec::kahler(support::to_series(modes)), g);
      const auto c = chern_curvature(g, mf);
      const double scale = std::max(tensor_max(c.R), 1e-3);
      oracle::MatFn gf = [&](const std::vector<double>& x) { return oracle::kahler_metric(modes, n, x); };
      std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
      for (int s = 0; s < 10; ++s) {
        const std::size_t p = pick(rng);
        const auto ref = oracle::chern_fd(gf, n, g.coords(p));
        double err = 0.0;
        for (std::size_t q = 0; q < ref.R.size(); ++q)
          err = std::max(err, std::abs(c.R.data()[p * ref.R.size() + q] - ref.R[q]));
        worst = std::max(worst, err / scale);
      }
    }
  }
  v.leq(worst, 1e-6, "worst relative deviation from the finite-difference oracle");
  v.note("10 metrics x 10 points, worst relative deviation " + num(worst));

  double flat = 0.0;
  for (int n : {1, 2}) {
    const Grid g = make_grid(n, 32);
    const auto mf = flat_metric(g);
    const auto c = chern_curvature(g, mf);
    flat = std::max({flat, tensor_max(c.R), hermitian_max(c.ric), std::fabs(c.b0)});
    for (std::size_t p : {std::size_t{0}, g.size() / 3, g.size() - 1}) {
      const auto pc = point_curvature(c, mf.g, p);
      flat = std::max(flat, std::fabs(max_rbc_at_point(pc, p).value));
      flat = std::max(flat, std::fabs(max_hsc_at_point(pc, p).value));
      flat = std::max(flat, std::fabs(max_ric_perp_at_point(pc, p, 1.0, 1.0).value));
    }
  }
  v.leq(flat, 1e-12, "largest flat curvature");
  v.note("flat metrics: largest curvature " + num(flat));
  const double secs = seconds_since(t0);
  v.leq(secs, 60.0, "runtime in seconds");
  v.note("runtime " + num(secs) + " s");
}

void symmetry_suite(Verdict& v) {
  double sym = 0.0, trace = 0.0;
  int metrics = 0, skipped = 0;
  auto check = [&](const Grid& g, const HermitianField& gm, const CurvatureTensorField& c) {
    const int n = g.dim();
    for (std::size_t p = 0; p < g.size(); ++p) {
      const Mat gi = gm.at(p).inverse();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              sym = std::max(sym, std::abs(c.R(p, i, j, k, l) - c.R(p, k, j, i, l)));
              sym = std::max(sym, std::abs(c.R(p, i, j, k, l) - c.R(p, i, l, k, j)));
            }
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          cd first = 0.0, second = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              first += gi(j, i) * c.R(p, i, j, a, b);
              second += gi(j, i) * c.R(p, a, b, i, j);
            }
          trace = std::max({trace, std::abs(first - c.ric(p, a, b)), std::abs(second - c.ric(p, a, b))});
        }
    }
    ++metrics;
  };
  for (const auto& name : corpus()) {
    const RunConfig cfg = load_config(support::corpus_path(name));
    const Workspace ws = build_workspace(cfg);
    check(ws.grid, ws.omega0.g, ws.curv0);
    if (cfg.geometry.eta_is_omega0) continue;
    if (ws.eta.is_kahler() && cfg.geometry.eta.curvature.kind == CurvatureOverride::Kind::none) {
      check(ws.grid, ws.eta.g, chern_curvature(ws.grid, ws.eta));
    } else {
      ++skipped;
    }
  }
  v.leq(sym, 1e-9, "largest Kahler symmetry defect");
  v.leq(trace, 1e-9, "largest Ricci trace defect");
  v.note(std::to_string(metrics) + " Kahler metrics from " + std::to_string(corpus().size()) +
         " configurations, symmetry defect " + num(sym) + ", trace defect " + num(trace));
  v.note(std::to_string(skipped) + " non-Kahler or synthetic eta fields excluded");
}

void rbc_soundness(Verdict& v) {
  std::mt19937_64 rng(77);
  int points = 0;
  double gap = kInf, rank_one = 0.0;
  auto test_point = [&](const PointCurvature& pc, std::size_t p) {
    const auto t = to_oracle(pc);
    const auto ex = max_rbc_at_point(pc, p);
    gap = std::min(gap, ex.value - oracle::rbc_sample_max(t, 10000, 1000 + points));
    const Mat e = orthonormal_frame(pc.g) * Mat(oracle::haar(pc.n, rng));
    for (int i = 0; i < pc.n; ++i) {
      RVec a = RVec::Zero(pc.n);
      a(i) = 1.0;
      rank_one = std::max(rank_one, std::fabs(rbc(pc, e, a) - hsc(pc, e.col(i))));
    }
    ++points;
  };
  for (int n : {1, 2, 3}) {
    const Grid g = make_grid(n, 8);
    const auto mf = build_metric(MetricSpec::kahler(support::to_series(support::pd_potential(g, 3, 0.015, rng))), g);
    const auto c = chern_curvature(g, mf);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    for (int s = 0; s < 4; ++s) {
      const std::size_t p = pick(rng);
      test_point(point_curvature(c, mf.g, p), p);
    }
    if (n >= 2) {
      const auto lam = oracle::random_potential(n, 2, 0.1, rng);
      const auto cf = build_metric(MetricSpec::conformal(support::to_series(lam)), g);
      const auto cc = chern_curvature(g, cf);
      for (int s = 0; s < 2; ++s) {
        const std::size_t p = pick(rng);
        test_point(point_curvature(cc, cf.g, p), p);
      }
    }
  }
  v.expect(gap >= -1e-10, "optimizer below a sampled frame by " + num(-gap));
  v.leq(rank_one, 1e-10, "rank-one RBC minus HSC");
  v.note(std::to_string(points) + " points (n = 1, 2, 3), 1e4 samples each; smallest optimizer lead " + num(gap) +
         ", rank-one defect " + num(rank_one));
}

// Smallest-residual prefix above the roundoff floor; the final step lands on the floor.
std::vector<double> above_floor(const std::vector<double>& h, double floor) {
  std::vector<double> out;
  for (double r : h)
    if (r > floor) out.push_back(r);
  return out;
}

void solver(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  auto m1 = support::manufactured(1, 64, 0.01, 2.0, 3);
  const auto r1 = solve_ma(m1.bg, m1.pr, {});
  const double e1 = support::max_error(r1.phi, m1.exact);
  v.leq(e1, 1e-8, "n=1 N=64 manufactured error");

  const auto t2 = std::chrono::steady_clock::now();
  auto m2 = support::manufactured(2, 32, 0.01, 2.0, 3);
  const auto r2 = solve_ma(m2.bg, m2.pr, {});
  const double e2 = support::max_error(r2.phi, m2.exact);
  const double secs2 = seconds_since(t2);
  v.leq(e2, 1e-5, "n=2 N=32 manufactured error");
  v.leq(secs2, 300.0, "n=2 runtime in seconds");
  v.note("manufactured errors " + num(e1) + " (n=1), " + num(e2) + " (n=2, " + num(secs2) + " s)");

  for (const auto* r : {&r1, &r2}) {
    const auto h = above_floor(r->stats.residual_history, 1e-12);
    v.expect(h.size() >= 3, "fewer than 3 Newton iterates above the roundoff floor");
    if (h.size() < 3) continue;
    std::string line = "last Newton residuals";
    for (std::size_t k = h.size() - 3; k < h.size(); ++k) line += " " + num(h[k]);
    for (std::size_t k = h.size() - 3; k + 1 < h.size(); ++k)
      v.expect(h[k + 1] <= 10.0 * h[k] * h[k], "step " + std::to_string(k) + " not quadratic: " + line);
    const double order = std::log(h[h.size() - 1] / h[h.size() - 2]) / std::log(h[h.size() - 2] / h[h.size() - 3]);
    v.expect(order >= 1.8, "observed order " + num(order));
    v.note(line + ", observed order " + num(order));
  }

  const SolverOptions opt;
  for (auto* m : {&m1, &m2}) {
    const auto& first = m == &m1 ? r1 : r2;
    ScalarField guess(m->bg.grid.size());
    for (std::size_t p = 0; p < guess.size(); ++p)
      guess[p] = 0.3 + 0.01 * std::sin(2 * oracle::kPi * m->bg.grid.coord(p, 0));
    const auto other = solve_ma(m->bg, m->pr, guess);
    const double d = support::max_error(first.phi, other.phi);
    v.leq(d, 10.0 * opt.tol, "uniqueness probe difference (n=" + std::to_string(m->bg.grid.dim()) + ")");
    v.note("uniqueness probe n=" + std::to_string(m->bg.grid.dim()) + ": " + num(d));
  }
  v.note("runtime " + num(seconds_since(t0)) + " s");
}

void closed_form_paths(Verdict& v) {
  const char* thm1 = R"({"geometry": {"n": 1, "N": 16, "omega0": {"family": "flat"}}, "mode": "thm1",
    "hypotheses": {"delta1": 1.0},
    "schedule": {"rule": "list", "values": [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]}})";
  const Solved s1 = support::solve_config(parse_config(thm1));
  v.expect(s1.path.samples.size() == 10, "thm1 path stopped after " + std::to_string(s1.path.samples.size()));
  double phi_err = 0.0, tr_err = 0.0;
  for (std::size_t i = 0; i < s1.path.samples.size(); ++i) {
    const auto& smp = s1.path.samples[i];
    for (double x : smp.phi) phi_err = std::max(phi_err, std::fabs(x - std::log(smp.t)));
    const auto rec = check_trace_bound(s1.ws.bg, s1.ws.eta.g, {s1.states[i]}, 1.0, 0.0, 1e-8);
    tr_err = std::max(tr_err, std::fabs(rec.margin));
  }
  v.leq(phi_err, 1e-8, "thm1 |phi_t - log t|");
  v.leq(tr_err, 1e-8, "thm1 trace bound equality margin");

  const char* thm2 = R"({"geometry": {"n": 1, "N": 16, "omega0": {"family": "flat"}}, "mode": "thm2",
    "functional": {"kind": "ric_perp", "alpha": 1.0, "beta": 1.0}, "hypotheses": {"epsilon": 0.5},
    "schedule": {"rule": "list", "values": [1.0, 0.8, 0.6, 0.4, 0.2, 0.1]}})";
  const Solved s2 = support::solve_config(parse_config(thm2));
  v.expect(s2.path.samples.size() == 6, "thm2 path stopped after " + std::to_string(s2.path.samples.size()));
  double phi2 = 0.0;
  for (const auto& smp : s2.path.samples)
    for (double x : smp.phi) phi2 = std::max(phi2, std::fabs(x - 2.0 / 3.0 * std::log(smp.t)));
  v.leq(phi2, 1e-8, "thm2 |phi_t - (2/3) log t|");
  v.note("thm1 phi error " + num(phi_err) + ", trace equality margin " + num(tr_err) + "; thm2 phi error " +
         num(phi2));
}

void unconditional_subchecks(Verdict& v) {
  double amgm = kInf, div = 0.0;
  int samples = 0;
  for (const auto& name : corpus()) {
    const Solved& s = cached(name);
    for (const auto& st : s.states) {
      AuditRecord r;
      if (s.ws.cfg.mode == Mode::thm1) {
        const IntegralChainInputs in{&s.ext.weighted, &s.ws.eta.g, &s.ws.region, s.r.delta1};
        r = check_integral_lemma(s.ws.bg, st, in, 1e-8);
      } else {
        const Thm2ChainInputs in{&s.ext.weighted, &s.ws.region, s.r.alpha, s.r.beta};
        r = check_thm2_integral_chain(s.ws.bg, st, in, 1e-8);
      }
      amgm = std::min(amgm, sub(r, "am_gm_pointwise")->margin);
      div = std::max(div, std::fabs(sub(r, "divergence_identity")->details.at("integral").get<double>()));
      ++samples;
    }
  }
  v.expect(samples > 0, "no solved samples");
  v.expect(amgm >= -1e-10, "AM-GM margin " + num(amgm));
  v.leq(div, 1e-8, "largest divergence integral");
  v.note(std::to_string(samples) + " samples over " + std::to_string(corpus().size()) +
         " configurations: AM-GM margin " + num(amgm) + ", divergence integral " + num(div));
}

void lemma_audits(Verdict& v) {
  constexpr double floor = -1e-5;
  for (const auto& name : kPerturbed) {
    const Solved& s = cached(name);
    const bool thm1 = s.ws.cfg.mode == Mode::thm1;
    const double lam = s.ext.global_max;
    v.expect(s.path.samples.size() >= 3, name + ": fewer than 3 samples");
    std::vector<std::string> names = {"sup_u_bound"};
    if (thm1) {
      names.insert(names.end(), {"schwarz_inequality", "trace_bound"});
    } else {
      names.insert(names.end(), {lam >= 0.0 ? "thm2_inequality_lambda_nonneg" : "thm2_inequality_lambda_neg",
                                 "thm2_inequality_pointwise_tau"});
    }
    std::string line = name + ":";
    for (const auto& n : names) {
      const AuditRecord* r = s.rep.find(n);
      v.expect(r != nullptr, name + ": missing " + n);
      if (!r) continue;
      v.expect(r->applicable, name + ": " + n + " not applicable");
      v.expect(r->margin >= floor, name + ": " + n + " margin " + num(r->margin));
      line += " " + n + " " + num(r->margin);
    }
    v.note(line);

    // negative controls, one corrupted input per check
    std::string neg = name + " corrupted:";
    const SupBoundParams sp{s.ws.cfg.mode, s.r.delta1, s.r.eps, s.ws.curv0.b0, s.rep.constants.c0,
                            s.r.alpha,     s.r.beta,   lam};
    ContinuityPath bad_u = s.path;
    for (auto& smp : bad_u.samples)
      for (auto& x : smp.u) x += 1.0;
    const double m_sup = check_sup_ut(bad_u, s.ws.grid.dim(), sp, 1e-8).margin;
    v.expect(m_sup < floor, name + ": sup_u_bound survives u + 1");
    neg += " u+1 " + num(m_sup);
    if (thm1) {
      // curvature field lowered by 2: the claimed curvature bound is then false
      ScalarField low = s.ext.values;
      for (auto& x : low) x -= 2.0;
      const ExtremalField bad_ext = extremal_from_values(low, s.ext.functional, s.ws.grid.dim());
      const double m_sch = check_schwarz_path(s.ws.bg, s.ws.eta.g, s.states, s.r.delta1, bad_ext.global_max, 1e-8).margin;
      v.expect(m_sch < floor, name + ": schwarz_inequality survives a lowered curvature field");
      const HermitianField big = 4.0 * s.ws.eta.g;
      const double m_tr = check_trace_bound(s.ws.bg, big, s.states, s.r.delta1, lam, 1e-8).margin;
      v.expect(m_tr < floor, name + ": trace_bound survives eta scaled by 4");
      neg += " curvature-2 " + num(m_sch) + " 4eta " + num(m_tr);
    } else {
      // phi_t no longer solves the equation: a fourth-harmonic ripple breaks the Laplacian bound
      std::vector<int> k(2 * s.ws.grid.dim(), 0);
      k[0] = 4;
      const auto rippled = support::shifted_states(s, TrigSeries::cosine(k, 0.005).sample(s.ws.grid));
      for (Thm2Case which : {lam >= 0.0 ? Thm2Case::lambda_nonneg : Thm2Case::lambda_neg, Thm2Case::pointwise_tau}) {
        double m = kInf;
        for (const auto& st : rippled)
          m = std::min(m, check_thm2_differential_inequality(s.ws.bg, st, s.r.alpha, s.r.beta, lam, &s.ext.weighted,
                                                             which, 1e-8)
                              .margin);
        v.expect(m < floor, name + ": " + thm2_case_name(which) + " survives a rippled phi");
        neg += std::string(" ") + thm2_case_name(which) + " " + num(m);
      }
    }
    v.note(neg);
  }
}

void torus_consistency(Verdict& v) {
  double worst = 0.0;
  int inconsistent = 0;
  for (const auto& name : corpus()) {
    const RunConfig cfg = load_config(support::corpus_path(name));
    const Workspace ws = build_workspace(cfg);
    const double vol = mixed_top_integral(ws.grid, ws.omega0.g, -ws.curv0.ric, 0);
    worst = std::max(worst, std::fabs(vol));
    const Solved& s = cached(name);
    if (!s.rep.gap.consistent) {
      ++inconsistent;
      v.expect(false, name + ": " + s.rep.gap.verdict);
    }
    const std::size_t f = s.rep.gap.verdict.find(':');
    v.note(name + ": " + s.rep.gap.verdict.substr(0, f) + ", |int (-Ric)^n| = " + num(vol));
  }
  v.leq(worst, 1e-8, "largest |int (-Ric)^n|");
  // the assertion is live: a fully certified set with zero volume is flagged
  GapInputs probe;
  probe.c3 = 1.0;
  probe.c4 = 1.0;
  probe.eps = 0.1;
  probe.eps_cap = 1.0;
  probe.hypotheses = {{"probe", true, 0.1}};
  v.expect(!gap_report(probe).consistent, "gap report does not flag a certified set on zero volume");
  v.note(std::to_string(inconsistent) + " inconsistent verdicts");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KGAP_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / ("kgap_acceptance_" + std::to_string(::getpid()));
  for (const std::string name : {"perturbed_thm1_n1", "perturbed_thm2_n1"}) {
    std::string reports[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path out = root / (name + "_" + std::to_string(k));
      fs::remove_all(out);
      const int code = run_cli("audit --config " + support::corpus_path(name) + " --out " + out.string());
      v.expect(code == 0, name + ": run exited with " + std::to_string(code));
      reports[k] = slurp(out / "report.json");
    }
    v.expect(!reports[0].empty(), name + ": empty report");
    v.expect(reports[0] == reports[1], name + ": report.json differs between runs");
    v.note(name + ": report.json " + std::to_string(reports[0].size()) + " bytes, " +
           (reports[0] == reports[1] ? "identical" : "different"));
  }
  fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"curvature matches the finite-difference oracle", curvature_oracle},
      {"Kahler symmetries and the Ricci trace identity", symmetry_suite},
      {"RBC optimizer soundness", rbc_soundness},
      {"Monge-Ampere solver", solver},
      {"closed-form flat paths", closed_form_paths},
      {"unconditional sub-checks", unconditional_subchecks},
      {"estimate audits on perturbed paths", lemma_audits},
      {"torus consistency", torus_consistency},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::cout << "[" << k + 1 << "] " << criteria[k].first << "\n";
    try {
      criteria[k].second(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    v.print();
    std::cout << "  (" << num(seconds_since(t0)) << " s)\n";
    std::cout << "criterion " << k + 1 << ": " << (v.ok() ? "PASS" : "FAIL") << std::endl;
    failed += v.ok() ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
