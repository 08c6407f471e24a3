#pragma once

// Empirical probes over families of quasi-plurisubharmonic test functions:
// the infimum of the mass of e^v on a region, and exponential integrability
// of -v. Both give one-sided bounds only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kgap/hypothesis.hpp"
#include "kgap/rng.hpp"
#include "kgap/trig_series.hpp"

namespace kgap {

/// Test functions v with A omega0 + dd^c v >= 0 and sup v = 0.
struct PshFamily {
  double scale = 1.0;  // A
  std::vector<ScalarField> members;
  std::vector<std::string> kinds;
  int skipped = 0;
};

namespace detail {

inline double psh_slack(const Grid& grid, const HermitianField& g0, const ScalarField& v, double a) {
  const HermitianField h = ddc(grid, v);
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.size(); ++p)
    mn = std::min(mn, min_relative_eigenvalue(a * g0.at(p) + h.at(p), g0.at(p)));
  return mn;
}

/// Largest s with A g0 + s dd^c f >= 0 everywhere, or NaN when none exists.
inline double max_psh_multiplier(const Grid& grid, const HermitianField& g0, const ScalarField& f, double a) {
  const HermitianField h = ddc(grid, f);
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    worst = std::max(worst, max_relative_eigenvalue(-h.at(p), g0.at(p)));
  if (!(worst > 1e-14) || !std::isfinite(worst)) return std::numeric_limits<double>::quiet_NaN();
  return a / worst;
}

inline TrigSeries random_trig(int axes, Rng& rng) {
  TrigSeries f;
  const int modes = 1 + static_cast<int>(rng.uniform() * 3.0);
  for (int m = 0; m < modes; ++m) {
    std::vector<int> k(axes, 0);
    bool nonzero = false;
    while (!nonzero) {
      for (int a = 0; a < axes; ++a) {
        k[a] = static_cast<int>(std::floor(rng.uniform() * 5.0)) - 2;
        nonzero = nonzero || k[a] != 0;
      }
    }
    const double c = rng.normal();
    const double s = rng.normal();
    f.add(std::move(k), c, s);
  }
  return f;
}

}  // namespace detail

/// Member 0 is v = 0; odd members are random trigonometric potentials and
/// even members periodic log-pole profiles log(rho + r^2), each scaled into
/// the PSH cone and shifted to sup 0. A family of size m is a prefix of the
/// family of size m + 1.
inline PshFamily make_psh_family(const Grid& grid, const HermitianField& g0, double scale, int size,
                                 std::uint64_t seed) {
  if (!(scale > 0.0)) throw Error(ErrorCode::Parameter, "PSH family: the Kahler scale must be positive");
  if (size < 1) throw Error(ErrorCode::Parameter, "PSH family: size must be at least 1");
  PshFamily fam;
  fam.scale = scale;
  fam.members.emplace_back(grid.size(), 0.0);
  fam.kinds.emplace_back("zero");
  const int axes = grid.axes();
  for (int i = 1; i < size; ++i) {
    Rng rng(stream_seed(seed, 11, static_cast<std::uint64_t>(i)));
    ScalarField f(grid.size());
    std::string kind;
    if (i % 2 == 1) {
      f = detail::random_trig(axes, rng).sample(grid);
      kind = "trig";
    } else {
      std::vector<double> c(axes);
      for (auto& x : c) x = rng.uniform();
      const double r = rng.uniform(0.08, 0.3);
      for (std::size_t p = 0; p < grid.size(); ++p) {
        double rho = 0.0;
        for (int a = 0; a < axes; ++a) {
          const double s = std::sin(std::numbers::pi * (grid.coord(p, a) - c[a]));
          rho += s * s;
        }
        f[p] = std::log(rho / (std::numbers::pi * std::numbers::pi) + r * r);
      }
      kind = "log_pole";
    }
    const double smax = detail::max_psh_multiplier(grid, g0, f, scale);
    if (!std::isfinite(smax)) {
      ++fam.skipped;
      continue;
    }
    const double s = smax * rng.uniform(0.4, 0.95);
    for (auto& x : f) x *= s;
    f = normalize_sup_zero(std::move(f));
    if (detail::psh_slack(grid, g0, f, scale) < -1e-10) {
      ++fam.skipped;
      continue;
    }
    fam.members.push_back(std::move(f));
    fam.kinds.push_back(kind);
  }
  return fam;
}

struct ProbeResult {
  double value = 0.0;
  std::size_t best = 0;  // index into the family
  std::vector<double> values;
  int skipped = 0;
};

/// min over the family of the integral of e^v omega0^n over U.
inline ProbeResult c1_probe(const Grid& grid, const HermitianField& g0, const Mask& u, const PshFamily& fam) {
  if (u.size() != grid.size() || mask_count(u) == 0) {
    throw Error(ErrorCode::Precondition, "c1 probe: empty or mismatched region mask");
  }
  ProbeResult r;
  r.skipped = fam.skipped;
  r.value = std::numeric_limits<double>::infinity();
  ScalarField dens(grid.size());
  for (std::size_t i = 0; i < fam.members.size(); ++i) {
    const auto& v = fam.members[i];
    for (std::size_t p = 0; p < grid.size(); ++p) dens[p] = std::exp(v[p]) * det_real(g0.at(p));
    const double val = integrate_masked(grid, dens, u);
    r.values.push_back(val);
    if (val < r.value) {
      r.value = val;
      r.best = i;
    }
  }
  return r;
}

inline ProbeResult compute_c1_probe(const Grid& grid, const HermitianField& g0, const Mask& u, double c0,
                                    double b0, int family_size, std::uint64_t seed) {
  return c1_probe(grid, g0, u, make_psh_family(grid, g0, c0 + b0, family_size, seed));
}

/// max over a c0 omega0-PSH family of the integral of e^{-beta v} (c0 omega0)^n.
inline ProbeResult alpha_probe(const Grid& grid, const HermitianField& g0, double c0, double beta_exp,
                               const PshFamily& fam) {
  if (!(beta_exp > 0.0) || beta_exp > 2.0) {
    throw Error(ErrorCode::Parameter, "alpha probe: exponent must lie in (0, 2]");
  }
  if (!(c0 > 0.0)) throw Error(ErrorCode::Parameter, "alpha probe: c0 must be positive");
  const double cn = std::pow(c0, grid.dim());
  ProbeResult r;
  r.skipped = fam.skipped;
  r.value = -std::numeric_limits<double>::infinity();
  ScalarField dens(grid.size());
  for (std::size_t i = 0; i < fam.members.size(); ++i) {
    const auto& v = fam.members[i];
    for (std::size_t p = 0; p < grid.size(); ++p) dens[p] = std::exp(-beta_exp * v[p]) * cn * det_real(g0.at(p));
    const double val = integrate(grid, dens);
    r.values.push_back(val);
    if (val > r.value) {
      r.value = val;
      r.best = i;
    }
  }
  return r;
}

inline ProbeResult alpha_probe(const Grid& grid, const HermitianField& g0, double c0, double beta_exp,
                               int family_size, std::uint64_t seed) {
  return alpha_probe(grid, g0, c0, beta_exp, make_psh_family(grid, g0, c0, family_size, seed));
}

}  // namespace kgap
