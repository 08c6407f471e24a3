// kgap: batch front-end over the curvature, certification, continuity-path
// and audit pipeline.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "kgap/kgap.hpp"

namespace {

using namespace kgap;

struct CommonOpts {
  std::string config;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

void add_common(CLI::App* app, CommonOpts& o, bool config_required) {
  auto* c = app->add_option("--config", o.config, "run configuration (JSON)");
  if (config_required) c->required();
  app->add_option("--out", o.out, "run directory")->capture_default_str();
  app->add_option("--seed", o.seed, "override the configured seed");
  app->add_option("--tol", o.tol, "override the audit tolerance")->check(CLI::PositiveNumber);
}

RunConfig load_with_overrides(const CommonOpts& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.optimizer.seed = *o.seed;
  }
  if (o.tol) cfg.audit.tolerance = *o.tol;
  return cfg;
}

void apply_thread_cap() {
  const char* env = std::getenv("KGAP_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw Error(ErrorCode::Config, std::string("KGAP_THREADS must be a positive integer (got '") + env + "')");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_curvature(const ojson& j) {
  const auto& c = j.at("curvature");
  const bool thm1 = c.value("of_metric", "") == "eta";
  std::cout << "functional       " << c.value("functional", "") << " of " << c.value("of_metric", "") << "\n";
  std::cout << (thm1 ? "mu_eta           " : "lambda           ") << fmt(c.at(thm1 ? "mu_eta" : "lambda").get<double>())
            << "\n";
  std::cout << "min pointwise    " << fmt(c.at("min_pointwise_max").get<double>()) << "\n";
  std::cout << "b0               " << fmt(c.at("b0").get<double>()) << "\n";
  std::cout << "int (-Ric)^n     " << fmt(c.at("integral_neg_ricci_n").get<double>()) << "\n";
  if (c.contains("max_hsc")) std::cout << "max HSC          " << fmt(c.at("max_hsc").get<double>()) << "\n";
  std::cout << "unconverged pts  " << c.value("unconverged_points", 0) << "\n";
}

void print_hypotheses(const ojson& hs) {
  for (const auto& h : hs) {
    std::cout << (h.value("certified", false) ? "  certified      " : "  not certified  ") << h.value("name", "")
              << "  (min margin " << (h["min_margin"].is_number() ? fmt(h["min_margin"].get<double>()) : "n/a")
              << ")\n";
  }
}

void print_record(const ojson& r, int depth) {
  std::string status = r.value("status", "");
  for (auto& ch : status) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  std::cout << std::string(2 * depth, ' ') << status << std::string(status.size() < 8 ? 8 - status.size() : 1, ' ')
            << r.value("name", "") << "  margin "
            << (r["margin"].is_number() ? fmt(r["margin"].get<double>()) : std::string("n/a"))
            << (r.value("conditional", false) ? "  [conditional]" : "") << "\n";
  if (r.contains("subchecks"))
    for (const auto& s : r["subchecks"]) print_record(s, depth + 1);
}

void print_report(const ojson& rep) {
  std::cout << "mode " << rep.value("mode", "") << ", " << rep.value("samples", 0) << " path samples, tolerance "
            << fmt(rep.value("tolerance", 0.0)) << "\n";
  for (const auto& c : rep.at("checks")) print_record(c, 1);
  std::cout << "hypotheses\n";
  print_hypotheses(rep.at("hypotheses"));
  if (rep.contains("gap")) {
    const auto& g = rep["gap"];
    std::cout << "gap: " << g.value("verdict", "") << "\n";
    std::cout << "  int (-Ric)^n = "
              << (g["integral_neg_ricci_n"].is_number() ? fmt(g["integral_neg_ricci_n"].get<double>()) : "n/a")
              << ", c3 - c4 eps = "
              << (g["c3_minus_c4_eps"].is_number() ? fmt(g["c3_minus_c4_eps"].get<double>()) : "n/a") << "\n";
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "--sweep: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw Error(ErrorCode::Config, "--sweep needs a comma-separated list of epsilon values");
  return out;
}

int cmd_curvature(const CommonOpts& o) {
  const RunConfig cfg = load_with_overrides(o);
  const RunDir rd = prepare_run_dir(o.out, cfg);
  const CurvatureOutcome co = stage_curvature(rd, cfg, true);
  print_curvature(co.summary);
  std::cout << "wrote " << rd.root.string() << "\n";
  return 0;
}

int cmd_certify(const CommonOpts& o, bool find, const std::string& sweep) {
  const RunConfig cfg = load_with_overrides(o);
  const RunDir rd = prepare_run_dir(o.out, cfg);
  StageTimer timer;
  const CurvatureOutcome co = stage_curvature(rd, cfg);
  const auto hs = certify_all(co.ws, co.ext, co.resolved);
  ojson j = certify_json(co.ws, hs, co.resolved);
  print_curvature(co.summary);
  std::cout << "hypotheses\n";
  print_hypotheses(j["hypotheses"]);
  if (find) {
    const double d = find_delta(co.ext, co.ws.region, 1e-5, cfg.hypotheses.slack);
    j["find_delta"] = d;
    std::cout << "largest certifiable delta on U: " << fmt(d) << (d == 0.0 ? " (not certifiable)" : "") << "\n";
  }
  if (!sweep.empty()) {
    ojson rows = ojson::array();
    std::cout << "epsilon sweep\n";
    for (double e : parse_list(sweep)) {
      if (!(e > 0.0)) throw Error(ErrorCode::Config, "--sweep: epsilon values must be positive");
      const HypothesisReport h = certify_quasi_negative(co.ext, e, co.resolved.delta, co.ws.region, cfg.hypotheses.slack);
      rows.push_back({{"epsilon", e}, {"certified", h.certified}, {"min_margin", h.min_margin()}});
      std::cout << "  eps " << fmt(e) << (h.certified ? "  certified" : "  not certified") << "  (min margin "
                << fmt(h.min_margin()) << ")\n";
    }
    j["sweep"] = rows;
  }
  write_json_file(rd.file("certify.json"), j);
  record_timing(rd, "certify", timer.seconds());
  std::cout << "wrote " << rd.root.string() << "\n";
  return 0;
}

ContinuityPath do_solve(const RunDir& rd, const RunConfig& cfg) {
  const CurvatureOutcome co = stage_curvature(rd, cfg);
  write_json_file(rd.file("certify.json"), certify_json(co.ws, certify_all(co.ws, co.ext, co.resolved), co.resolved));
  StageTimer timer;
  ContinuityPath path = solve_and_persist(rd, co.ws, co.resolved);
  record_timing(rd, "solve", timer.seconds());
  return path;
}

int cmd_solve(const CommonOpts& o) {
  const RunConfig cfg = load_with_overrides(o);
  const RunDir rd = prepare_run_dir(o.out, cfg);
  const ContinuityPath path = do_solve(rd, cfg);
  std::cout << path.samples.size() << " samples";
  if (!path.samples.empty()) std::cout << ", t from " << fmt(path.samples.front().t) << " to " << fmt(path.samples.back().t);
  std::cout << ": " << path.termination << "\n";
  std::cout << "wrote " << rd.root.string() << "\n";
  return 0;
}

int cmd_audit(const CommonOpts& o, const std::string& run_dir, bool strict) {
  ojson rep;
  fs::path root;
  if (!run_dir.empty()) {
    if (!o.config.empty()) throw Error(ErrorCode::Config, "audit takes either a run directory or --config, not both");
    if (o.seed) throw Error(ErrorCode::Config, "--seed cannot change a persisted run; rerun solve instead");
    const RunDir rd = open_run_dir(run_dir);
    rep = audit_run_dir(rd, o.tol);
    root = rd.root;
  } else {
    if (o.config.empty()) throw Error(ErrorCode::Config, "audit needs a run directory or --config");
    const RunConfig cfg = load_with_overrides(o);
    const RunDir rd = prepare_run_dir(o.out, cfg);
    do_solve(rd, cfg);
    rep = audit_run_dir(rd);
    root = rd.root;
  }
  print_report(rep);
  std::cout << "wrote " << (root / "report.json").string() << "\n";
  if (strict) {
    for (const auto& c : rep["checks"])
      if (c.value("status", "") == "fail") return 1;
  }
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const RunDir rd = open_run_dir(run_dir);
  if (!fs::exists(rd.file("report.json"))) throw Error(ErrorCode::Io, "no report.json in " + run_dir + "; run audit first");
  print_report(read_json_file(rd.file("report.json")));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgap: curvature gap laboratory on complex tori"};
  app.set_version_flag("--version", KGAP_VERSION);
  app.require_subcommand(1);

  CommonOpts o_curv, o_cert, o_solve, o_audit;
  auto* curv = app.add_subcommand("curvature", "build metrics, curvature tensors and extremal fields");
  add_common(curv, o_curv, true);

  auto* cert = app.add_subcommand("certify", "certify the curvature and bounded-geometry hypotheses");
  add_common(cert, o_cert, true);
  bool find = false;
  std::string sweep;
  cert->add_flag("--find-delta", find, "bisect for the largest delta certifiable on U");
  cert->add_option("--sweep", sweep, "comma-separated epsilon values to certify");

  auto* solve = app.add_subcommand("solve", "run the continuity path and persist every sample");
  add_common(solve, o_solve, true);

  auto* audit = app.add_subcommand("audit", "audit a run directory, or run everything from --config");
  add_common(audit, o_audit, false);
  std::string audit_dir;
  bool strict = false;
  audit->add_option("run_dir", audit_dir, "completed or partial run directory");
  audit->add_flag("--strict", strict, "exit with status 1 when any check fails");

  auto* report = app.add_subcommand("report", "print the report of a run directory");
  std::string report_dir;
  report->add_option("run_dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[USAGE]: " << e.what() << "\n";
    return 2;
  }

  try {
    apply_thread_cap();
    if (*curv) return cmd_curvature(o_curv);
    if (*cert) return cmd_certify(o_cert, find, sweep);
    if (*solve) return cmd_solve(o_solve);
    if (*audit) return cmd_audit(o_audit, audit_dir, strict);
    if (*report) return cmd_report(report_dir);
  } catch (const SolverError& e) {
    std::cerr << "error[" << error_token(e.code()) << "]: " << e.what() << " (t = " << e.t() << ")\n";
    return exit_status(e.code());
  } catch (const Error& e) {
    std::cerr << "error[" << error_token(e.code()) << "]: " << e.what() << "\n";
    return exit_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error[IO]: " << e.what() << "\n";
    return exit_status(ErrorCode::Io);
  } catch (const std::exception& e) {
    std::cerr << "error[INTERNAL]: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
