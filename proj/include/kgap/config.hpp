#pragma once

// Run configuration: one JSON document, validated strictly (unknown keys are
// errors) and echoed back with every default filled in.

#include <cctype>
#include <cstring>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgap/field_io.hpp"
#include "kgap/functionals.hpp"
#include "kgap/hypothesis.hpp"
#include "kgap/metric.hpp"
#include "kgap/monge_ampere.hpp"

namespace kgap {

struct GeometryConfig {
  int n = 1;
  int N = 32;
  MetricSpec omega0;
  bool eta_is_omega0 = true;
  MetricSpec eta;
  TrigSeries psi;
  RegionSpec region;
};

struct HypothesisConfig {
  std::optional<double> epsilon;  // nullopt: automatic
  double delta = 0.01;
  std::optional<double> delta1;
  std::optional<double> delta2;
  double slack = 1e-8;
};

struct ScheduleConfig {
  Schedule base;
  bool auto_start = true;
  bool auto_end = true;
};

struct AuditConfig {
  std::optional<double> tolerance;
  double c0 = 1.0;
  int c1_family = 16;
  int alpha_family = 16;
  double alpha_exponent = 1.0;
};

struct RunConfig {
  GeometryConfig geometry;
  FunctionalSpec functional;
  HypothesisConfig hypotheses;
  Mode mode = Mode::thm1;
  ScheduleConfig schedule;
  SolverOptions solver;
  AscentOptions optimizer;
  AuditConfig audit;
  std::uint64_t seed = 0;
};

namespace detail {

/// Maps JSON paths ("a.b[2].c") to the 1-based line where their value starts.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : s_(text) {
    try {
      skip();
      value("");
    } catch (...) {
      // syntax errors are reported by the real parser
    }
  }
  int line(const std::string& path) const {
    auto it = lines_.find(path);
    return it == lines_.end() ? 0 : it->second;
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;

  void adv() {
    if (i_ < s_.size() && s_[i_] == '\n') ++line_;
    ++i_;
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) adv();
  }
  std::string str() {
    std::string out;
    adv();  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') {
        adv();
      }
      out += s_[i_];
      adv();
    }
    if (i_ >= s_.size()) throw 0;
    adv();
    return out;
  }
  void value(const std::string& path) {
    if (i_ >= s_.size()) throw 0;
    lines_.emplace(path, line_);
    const char c = s_[i_];
    if (c == '{') {
      adv();
      skip();
      if (s_[i_] == '}') return adv();
      while (true) {
        skip();
        const std::string key = str();
        skip();
        if (s_[i_] != ':') throw 0;
        adv();
        skip();
        value(path.empty() ? key : path + "." + key);
        skip();
        if (s_[i_] == ',') {
          adv();
          continue;
        }
        if (s_[i_] == '}') return adv();
        throw 0;
      }
    }
    if (c == '[') {
      adv();
      skip();
      if (s_[i_] == ']') return adv();
      for (int k = 0;; ++k) {
        skip();
        value(path + "[" + std::to_string(k) + "]");
        skip();
        if (s_[i_] == ',') {
          adv();
          continue;
        }
        if (s_[i_] == ']') return adv();
        throw 0;
      }
    }
    if (c == '"') {
      str();
      return;
    }
    while (i_ < s_.size() && !std::strchr(",]} \t\r\n", s_[i_])) adv();
  }
};

class ConfigReader;

/// Object view that remembers which keys were consumed.
class ObjView {
 public:
  ObjView(const ConfigReader& r, const nlohmann::json& j, std::string path);

  const std::string& path() const { return path_; }
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;

  double number(const std::string& key, double def);
  double required_number(const std::string& key);
  int integer(const std::string& key, int def, int lo, int hi, bool required = false);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def);
  std::string string(const std::string& key, const std::string& def, const std::vector<std::string>& allowed);
  /// number, or the string "auto" (returned as nullopt)
  std::optional<double> number_or_auto(const std::string& key, std::optional<double> def);
  std::vector<double> number_list(const std::string& key, std::vector<double> def);
  std::vector<int> int_list(const std::string& key, std::vector<int> def);
  ObjView object(const std::string& key);
  /// Array of objects; a missing key gives an empty list.
  std::vector<ObjView> objects(const std::string& key);
  void finish() const;

 private:
  const ConfigReader& r_;
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class ConfigReader {
 public:
  ConfigReader(const std::string& text, std::string source) : index_(text), source_(std::move(source)) {}
  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    std::string where = source_;
    // missing keys have no line of their own; fall back to the enclosing value
    std::string p = path;
    int ln = index_.line(p);
    while (ln == 0 && !p.empty()) {
      const std::size_t cut = p.find_last_of(".[");
      p = cut == std::string::npos ? std::string() : p.substr(0, cut);
      ln = index_.line(p);
    }
    if (ln > 0) where += ":" + std::to_string(ln);
    throw Error(ErrorCode::Config, where + ": field '" + (path.empty() ? std::string("<root>") : path) + "': " + msg);
  }

 private:
  LineIndex index_;
  std::string source_;
};

inline ObjView::ObjView(const ConfigReader& r, const nlohmann::json& j, std::string path)
    : r_(r), j_(j), path_(std::move(path)) {
  if (!j_.is_object()) r_.fail(path_, "expected an object");
}

inline void ObjView::fail(const std::string& key, const std::string& msg) const { r_.fail(sub(key), msg); }

inline double ObjView::number(const std::string& key, double def) {
  const auto* v = get(key);
  if (!v) return def;
  if (!v->is_number()) fail(key, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

inline double ObjView::required_number(const std::string& key) {
  if (!has(key)) fail(key, "required field is missing");
  return number(key, 0.0);
}

inline int ObjView::integer(const std::string& key, int def, int lo, int hi, bool required) {
  const auto* v = get(key);
  if (!v) {
    if (required) fail(key, "required field is missing");
    return def;
  }
  if (!v->is_number_integer()) fail(key, "expected an integer");
  const long long x = v->get<long long>();
  if (x < lo || x > hi) {
    fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " + std::to_string(x) + ")");
  }
  return static_cast<int>(x);
}

inline std::uint64_t ObjView::unsigned_integer(const std::string& key, std::uint64_t def) {
  const auto* v = get(key);
  if (!v) return def;
  if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

inline std::string ObjView::string(const std::string& key, const std::string& def,
                                   const std::vector<std::string>& allowed) {
  const auto* v = get(key);
  if (!v) return def;
  if (!v->is_string()) fail(key, "expected a string");
  const std::string s = v->get<std::string>();
  if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, "unknown value '" + s + "' (expected one of " + list + ")");
  }
  return s;
}

inline std::optional<double> ObjView::number_or_auto(const std::string& key, std::optional<double> def) {
  const auto* v = get(key);
  if (!v) return def;
  if (v->is_string()) {
    if (v->get<std::string>() != "auto") fail(key, "expected a number or \"auto\"");
    return std::nullopt;
  }
  if (!v->is_number()) fail(key, "expected a number or \"auto\"");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

inline std::vector<double> ObjView::number_list(const std::string& key, std::vector<double> def) {
  const auto* v = get(key);
  if (!v) return def;
  if (!v->is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) r_.fail(sub(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

inline std::vector<int> ObjView::int_list(const std::string& key, std::vector<int> def) {
  const auto* v = get(key);
  if (!v) return def;
  if (!v->is_array()) fail(key, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number_integer()) r_.fail(sub(key) + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back((*v)[i].get<int>());
  }
  return out;
}

inline ObjView ObjView::object(const std::string& key) {
  const auto* v = get(key);
  static const nlohmann::json empty = nlohmann::json::object();
  return ObjView(r_, v ? *v : empty, sub(key));
}

inline std::vector<ObjView> ObjView::objects(const std::string& key) {
  const auto* v = get(key);
  std::vector<ObjView> out;
  if (!v) return out;
  if (!v->is_array()) fail(key, "expected an array");
  for (std::size_t i = 0; i < v->size(); ++i) out.emplace_back(r_, (*v)[i], sub(key) + "[" + std::to_string(i) + "]");
  return out;
}

inline void ObjView::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (!seen_.count(it.key())) r_.fail(sub(it.key()), "unknown key");
  }
}


inline TrigSeries parse_series(ObjView o, int axes) {
  TrigSeries s;
  s.constant = o.number("constant", 0.0);
  for (auto& m : o.objects("modes")) {
    std::vector<int> k = m.int_list("k", {});
    if (static_cast<int>(k.size()) != axes) {
      m.fail("k", "wave vector needs " + std::to_string(axes) + " integer entries (x1, y1, ..., xn, yn)");
    }
    const double c = m.number("cos", 0.0);
    const double sn = m.number("sin", 0.0);
    m.finish();
    s.add(std::move(k), c, sn);
  }
  o.finish();
  return s;
}

inline MetricSpec parse_metric(ObjView o, int n) {
  MetricSpec spec;
  const std::string fam =
      o.string("family", "flat", {"flat", "kahler_potential", "conformal", "direct"});
  auto reject = [&](const char* key) {
    if (o.has(key)) o.fail(key, "not valid for metric family '" + fam + "'");
  };
  if (fam == "flat") {
    spec.family = MetricFamily::flat;
  } else if (fam == "kahler_potential") {
    spec.family = MetricFamily::kahler_potential;
    spec.potential = parse_series(o.object("potential"), 2 * n);
  } else if (fam == "conformal") {
    spec.family = MetricFamily::conformal;
    spec.factor = parse_series(o.object("factor"), 2 * n);
  } else {
    spec.family = MetricFamily::direct;
    for (auto& c : o.objects("components")) {
      DirectComponent dc;
      dc.i = c.integer("i", 0, 0, n - 1, true);
      dc.j = c.integer("j", 0, 0, n - 1, true);
      dc.re = parse_series(c.object("re"), 2 * n);
      dc.im = parse_series(c.object("im"), 2 * n);
      c.finish();
      spec.components.push_back(std::move(dc));
    }
  }
  if (fam != "kahler_potential") reject("potential");
  if (fam != "conformal") reject("factor");
  if (fam != "direct") reject("components");
  if (o.has("curvature")) {
    ObjView c = o.object("curvature");
    const std::string kind = c.string("kind", "none", {"none", "space_form", "diagonal"});
    if (kind == "space_form") {
      spec.curvature.kind = CurvatureOverride::Kind::space_form;
      spec.curvature.c = c.required_number("c");
    } else if (kind == "diagonal") {
      spec.curvature.kind = CurvatureOverride::Kind::diagonal;
      spec.curvature.values = c.number_list("values", {});
    }
    if (kind != "space_form" && c.has("c")) c.fail("c", "only valid for kind 'space_form'");
    if (kind != "diagonal" && c.has("values")) c.fail("values", "only valid for kind 'diagonal'");
    c.finish();
  }
  o.finish();
  try {
    validate_spec(spec, n);
  } catch (const Error& e) {
    o.fail("family", e.what());
  }
  return spec;
}

inline nlohmann::ordered_json series_json(const TrigSeries& s) {
  nlohmann::ordered_json j;
  j["constant"] = s.constant;
  nlohmann::ordered_json modes = nlohmann::ordered_json::array();
  for (const auto& m : s.modes) {
    nlohmann::ordered_json e;
    e["k"] = m.k;
    e["cos"] = m.cos_coef;
    e["sin"] = m.sin_coef;
    modes.push_back(e);
  }
  j["modes"] = modes;
  return j;
}

inline nlohmann::ordered_json metric_json(const MetricSpec& m) {
  nlohmann::ordered_json j;
  j["family"] = family_name(m.family);
  if (m.family == MetricFamily::kahler_potential) j["potential"] = series_json(m.potential);
  if (m.family == MetricFamily::conformal) j["factor"] = series_json(m.factor);
  if (m.family == MetricFamily::direct) {
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const auto& c : m.components) {
      nlohmann::ordered_json e;
      e["i"] = c.i;
      e["j"] = c.j;
      e["re"] = series_json(c.re);
      e["im"] = series_json(c.im);
      comps.push_back(e);
    }
    j["components"] = comps;
  }
  if (m.curvature.kind != CurvatureOverride::Kind::none) {
    nlohmann::ordered_json c;
    if (m.curvature.kind == CurvatureOverride::Kind::space_form) {
      c["kind"] = "space_form";
      c["c"] = m.curvature.c;
    } else {
      c["kind"] = "diagonal";
      c["values"] = m.curvature.values;
    }
    j["curvature"] = c;
  }
  return j;
}

inline nlohmann::ordered_json auto_or(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json("auto");
}

}  // namespace detail

/// Parses and validates a configuration document. `source` names it in errors.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based; translate to a line number
    int line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) line += text[i] == '\n';
    throw Error(ErrorCode::Config, source + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
  }
  const detail::ConfigReader reader(text, source);
  detail::ObjView root(reader, doc, "");
  RunConfig rc;

  {
    detail::ObjView g = root.object("geometry");
    if (!root.has("geometry")) root.fail("geometry", "required field is missing");
    auto& G = rc.geometry;
    G.n = g.integer("n", 1, 1, 3, true);
    G.N = g.integer("N", 32, 8, 1 << 12, true);
    if ((G.N & (G.N - 1)) != 0) g.fail("N", "must be a power of two");
    const int axes = 2 * G.n;
    G.omega0 = detail::parse_metric(g.object("omega0"), G.n);
    if (g.has("eta")) {
      const auto* e = g.get("eta");
      if (e->is_string()) {
        if (e->get<std::string>() != "omega0") g.fail("eta", "expected a metric object or \"omega0\"");
      } else {
        G.eta_is_omega0 = false;
        G.eta = detail::parse_metric(g.object("eta"), G.n);
      }
    }
    G.psi = detail::parse_series(g.object("psi"), axes);
    detail::ObjView r = g.object("region");
    G.region.center = r.number_list("center", std::vector<double>(axes, 0.5));
    G.region.radii = r.number_list("radii", std::vector<double>(axes, 0.2));
    if (static_cast<int>(G.region.center.size()) != axes) r.fail("center", "needs " + std::to_string(axes) + " entries");
    if (static_cast<int>(G.region.radii.size()) != axes) r.fail("radii", "needs " + std::to_string(axes) + " entries");
    for (double x : G.region.radii)
      if (!(x > 0.0 && x <= 0.5)) r.fail("radii", "entries must lie in (0, 0.5]");
    r.finish();
    g.finish();
  }

  const std::string mode = root.string("mode", "thm1", {"thm1", "thm2"});
  rc.mode = mode == "thm1" ? Mode::thm1 : Mode::thm2;

  {
    detail::ObjView f = root.object("functional");
    const std::string def = rc.mode == Mode::thm1 ? "rbc" : "ric_perp";
    const std::string kind = f.string("kind", def, {"rbc", "ric_perp", "k_ricci"});
    auto& F = rc.functional;
    if (kind == "rbc") {
      F.kind = FunctionalSpec::Kind::rbc;
      for (const char* k : {"alpha", "beta", "k"})
        if (f.has(k)) f.fail(k, "not valid for the rbc functional");
    } else {
      F.kind = kind == "ric_perp" ? FunctionalSpec::Kind::ric_perp : FunctionalSpec::Kind::k_ricci;
      F.alpha = f.number("alpha", 1.0);
      F.beta = f.number("beta", 1.0);
      if (F.alpha < 0.0) f.fail("alpha", "must be >= 0");
      if (F.beta < 0.0) f.fail("beta", "must be >= 0");
      if (F.alpha == 0.0 && F.beta == 0.0) f.fail("alpha", "alpha and beta cannot both vanish");
      if (F.kind == FunctionalSpec::Kind::k_ricci) {
        F.k = f.integer("k", 1, 1, rc.geometry.n);
      } else if (f.has("k")) {
        f.fail("k", "only valid for the k_ricci functional");
      }
    }
    f.finish();
    if (rc.mode == Mode::thm1 && F.kind != FunctionalSpec::Kind::rbc) {
      root.fail("functional", "mode thm1 uses the rbc functional of eta");
    }
    if (rc.mode == Mode::thm2 && F.kind == FunctionalSpec::Kind::rbc) {
      root.fail("functional", "mode thm2 needs ric_perp or k_ricci");
    }
    if (rc.mode == Mode::thm2 && !(F.beta > 0.0)) root.fail("functional", "mode thm2 needs beta > 0");
    if (rc.mode == Mode::thm2 && !rc.geometry.eta_is_omega0) {
      root.fail("geometry", "eta is only used in mode thm1; omit it for thm2");
    }
  }

  {
    detail::ObjView h = root.object("hypotheses");
    auto& H = rc.hypotheses;
    H.epsilon = h.number_or_auto("epsilon", std::nullopt);
    H.delta = h.number("delta", 0.01);
    H.delta1 = h.number_or_auto("delta1", std::nullopt);
    H.delta2 = h.number_or_auto("delta2", std::nullopt);
    H.slack = h.number("slack", 1e-8);
    if (H.epsilon && !(*H.epsilon > 0.0)) h.fail("epsilon", "must be positive");
    if (!(H.delta > 0.0)) h.fail("delta", "must be positive");
    if (H.delta1 && !(*H.delta1 > 0.0)) h.fail("delta1", "must be positive");
    if (H.delta2 && !(*H.delta2 > 0.0)) h.fail("delta2", "must be positive");
    if (!(H.slack >= 0.0)) h.fail("slack", "must be >= 0");
    h.finish();
  }

  {
    detail::ObjView s = root.object("schedule");
    auto& S = rc.schedule;
    const std::string rule = s.string("rule", "linear", {"linear", "geometric", "list"});
    S.base.rule = rule == "linear" ? Schedule::Rule::linear
                                   : (rule == "geometric" ? Schedule::Rule::geometric : Schedule::Rule::list);
    const auto ts = s.number_or_auto("t_start", std::nullopt);
    const auto te = s.number_or_auto("t_end", std::nullopt);
    S.auto_start = !ts;
    S.auto_end = !te;
    if (ts) S.base.t_start = *ts;
    if (te) S.base.t_end = *te;
    S.base.steps = s.integer("steps", 5, 1, 100000);
    S.base.ratio = s.number("ratio", 0.8);
    S.base.values = s.number_list("values", {});
    S.base.min_step = s.number("min_step", 1e-4);
    if (!(S.base.ratio > 0.0 && S.base.ratio < 1.0)) s.fail("ratio", "must lie in (0, 1)");
    if (!(S.base.min_step > 0.0)) s.fail("min_step", "must be positive");
    if (S.base.rule == Schedule::Rule::list) {
      if (S.base.values.empty()) s.fail("values", "rule 'list' needs a non-empty list of t values");
      for (std::size_t i = 1; i < S.base.values.size(); ++i)
        if (!(S.base.values[i] < S.base.values[i - 1])) s.fail("values", "t values must be strictly decreasing");
    }
    if (ts && te && S.base.rule != Schedule::Rule::list && !(*te < *ts)) s.fail("t_end", "must be below t_start");
    if (ts && !(*ts > 0.0)) s.fail("t_start", "must be positive");
    if (te && !(*te > 0.0)) s.fail("t_end", "must be positive");
    s.finish();
  }

  {
    detail::ObjView s = root.object("solver");
    auto& O = rc.solver;
    O.tol = s.number("tol", O.tol);
    O.max_iter = s.integer("max_iter", O.max_iter, 1, 10000);
    O.positivity_floor = s.number("positivity_floor", O.positivity_floor);
    O.gmres.restart = s.integer("gmres_restart", O.gmres.restart, 1, 1000);
    O.gmres.max_iter = s.integer("gmres_max_iter", O.gmres.max_iter, 1, 1000000);
    O.gmres.rel_tol = s.number("gmres_rel_tol", O.gmres.rel_tol);
    O.forcing_max = s.number("forcing_max", O.forcing_max);
    if (!(O.tol > 0.0)) s.fail("tol", "must be positive");
    if (!(O.positivity_floor > 0.0)) s.fail("positivity_floor", "must be positive");
    if (!(O.gmres.rel_tol > 0.0)) s.fail("gmres_rel_tol", "must be positive");
    if (!(O.forcing_max > 0.0 && O.forcing_max < 1.0)) s.fail("forcing_max", "must lie in (0, 1)");
    s.finish();
  }

  {
    detail::ObjView s = root.object("optimizer");
    auto& A = rc.optimizer;
    A.restarts = s.integer("restarts", A.restarts, 1, 1000);
    A.sphere_restarts = s.integer("sphere_restarts", A.sphere_restarts, 1, 1000);
    A.screen = s.integer("screen", A.screen, 0, 100000);
    A.max_iter = s.integer("max_iter", A.max_iter, 1, 100000);
    A.grad_tol = s.number("grad_tol", A.grad_tol);
    if (!(A.grad_tol > 0.0)) s.fail("grad_tol", "must be positive");
    s.finish();
  }

  {
    detail::ObjView s = root.object("audit");
    auto& A = rc.audit;
    A.tolerance = s.number_or_auto("tolerance", std::nullopt);
    A.c0 = s.number("c0", 1.0);
    A.c1_family = s.integer("c1_family", 16, 1, 100000);
    A.alpha_family = s.integer("alpha_family", 16, 1, 100000);
    A.alpha_exponent = s.number("alpha_exponent", 1.0);
    if (A.tolerance && !(*A.tolerance > 0.0)) s.fail("tolerance", "must be positive");
    if (!(A.c0 > 0.0)) s.fail("c0", "must be positive");
    if (!(A.alpha_exponent > 0.0 && A.alpha_exponent <= 2.0)) s.fail("alpha_exponent", "must lie in (0, 2]");
    s.finish();
  }

  rc.seed = root.unsigned_integer("seed", 0);
  rc.optimizer.seed = rc.seed;
  root.finish();
  return rc;
}

/// Echo of a validated configuration with all defaults filled in.
inline nlohmann::ordered_json config_json(const RunConfig& rc) {
  using oj = nlohmann::ordered_json;
  oj j;
  oj g;
  g["n"] = rc.geometry.n;
  g["N"] = rc.geometry.N;
  g["omega0"] = detail::metric_json(rc.geometry.omega0);
  g["eta"] = rc.geometry.eta_is_omega0 ? oj("omega0") : detail::metric_json(rc.geometry.eta);
  g["psi"] = detail::series_json(rc.geometry.psi);
  g["region"] = {{"center", rc.geometry.region.center}, {"radii", rc.geometry.region.radii}};
  j["geometry"] = g;
  j["mode"] = mode_name(rc.mode);
  oj f;
  f["kind"] = functional_name(rc.functional.kind);
  if (rc.functional.kind != FunctionalSpec::Kind::rbc) {
    f["alpha"] = rc.functional.alpha;
    f["beta"] = rc.functional.beta;
  }
  if (rc.functional.kind == FunctionalSpec::Kind::k_ricci) f["k"] = rc.functional.k;
  j["functional"] = f;
  const auto& H = rc.hypotheses;
  j["hypotheses"] = {{"epsilon", detail::auto_or(H.epsilon)},
                     {"delta", H.delta},
                     {"delta1", detail::auto_or(H.delta1)},
                     {"delta2", detail::auto_or(H.delta2)},
                     {"slack", H.slack}};
  const auto& S = rc.schedule;
  oj s;
  s["rule"] = rule_name(S.base.rule);
  s["t_start"] = S.auto_start ? oj("auto") : oj(S.base.t_start);
  s["t_end"] = S.auto_end ? oj("auto") : oj(S.base.t_end);
  s["steps"] = S.base.steps;
  s["ratio"] = S.base.ratio;
  s["values"] = S.base.values;
  s["min_step"] = S.base.min_step;
  j["schedule"] = s;
  const auto& O = rc.solver;
  j["solver"] = {{"tol", O.tol},
                 {"max_iter", O.max_iter},
                 {"positivity_floor", O.positivity_floor},
                 {"gmres_restart", O.gmres.restart},
                 {"gmres_max_iter", O.gmres.max_iter},
                 {"gmres_rel_tol", O.gmres.rel_tol},
                 {"forcing_max", O.forcing_max}};
  const auto& A = rc.optimizer;
  j["optimizer"] = {{"restarts", A.restarts},
                    {"sphere_restarts", A.sphere_restarts},
                    {"screen", A.screen},
                    {"max_iter", A.max_iter},
                    {"grad_tol", A.grad_tol}};
  const auto& U = rc.audit;
  j["audit"] = {{"tolerance", detail::auto_or(U.tolerance)},
                {"c0", U.c0},
                {"c1_family", U.c1_family},
                {"alpha_family", U.alpha_family},
                {"alpha_exponent", U.alpha_exponent}};
  j["seed"] = rc.seed;
  return j;
}

inline RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = detail::read_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("cannot read configuration: ") + e.what());
  }
  return parse_config(text, path.string());
}

}  // namespace kgap
