#pragma once

// Pointwise certification of curvature sign conditions and bounded-geometry
// hypotheses on the grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kgap/functionals.hpp"

namespace kgap {

/// Axis-aligned periodic box: |x_a - center_a| < radii_a (distance on the circle).
struct RegionSpec {
  std::vector<double> center;
  std::vector<double> radii;
};

using Mask = std::vector<char>;

inline Mask region_mask(const Grid& grid, const RegionSpec& u) {
  const int axes = grid.axes();
  if (static_cast<int>(u.center.size()) != axes || static_cast<int>(u.radii.size()) != axes) {
    throw Error(ErrorCode::Config, "region: center and radii need " + std::to_string(axes) + " entries");
  }
  Mask m(grid.size(), 0);
  std::size_t count = 0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    bool inside = true;
    for (int a = 0; a < axes && inside; ++a) {
      double d = std::fabs(grid.coord(p, a) - u.center[a]);
      d = std::min(d, 1.0 - d);
      inside = d < u.radii[a];
    }
    m[p] = inside ? 1 : 0;
    count += inside ? 1 : 0;
  }
  if (count == 0) {
    throw Error(ErrorCode::Precondition, "region: mask selects no grid point");
  }
  if (count == grid.size()) {
    throw Error(ErrorCode::Config, "region: mask covers the whole torus; U must be a proper subset");
  }
  return m;
}

inline std::size_t mask_count(const Mask& m) {
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), char(1)));
}

struct Margin {
  std::string label;
  double value = std::numeric_limits<double>::infinity();
  std::size_t worst_point = 0;
};

struct HypothesisReport {
  std::string name;
  bool certified = false;
  double slack = 1e-8;
  std::vector<Margin> margins;
  /// Points where a margin is negative beyond the slack (first few only).
  std::vector<std::size_t> witnesses;
  std::vector<std::pair<std::string, double>> parameters;

  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& x : margins) m = std::min(m, x.value);
    return m;
  }
  void finalize() {
    certified = true;
    for (const auto& m : margins) certified = certified && m.value >= -slack;
  }
};

constexpr std::size_t kMaxWitnesses = 8;

namespace detail {

/// min over selected points of f(p); records witnesses where f(p) < -slack.
template <class F>
Margin scan_margin(std::string label, std::size_t points, const Mask* mask, F&& f, double slack,
                   std::vector<std::size_t>& witnesses) {
  Margin m;
  m.label = std::move(label);
  for (std::size_t p = 0; p < points; ++p) {
    if (mask && !(*mask)[p]) continue;
    const double v = f(p);
    if (v < m.value) {
      m.value = v;
      m.worst_point = p;
    }
    if (v < -slack && witnesses.size() < kMaxWitnesses &&
        std::find(witnesses.begin(), witnesses.end(), p) == witnesses.end()) {
      witnesses.push_back(p);
    }
  }
  return m;
}

}  // namespace detail

/// max-functional <= eps on X and <= -delta on U.
inline HypothesisReport certify_quasi_negative(const ExtremalField& ef, double eps, double delta,
                                               const Mask& u, double slack = 1e-8) {
  if (!(eps > 0.0) || !(delta > 0.0)) {
    throw Error(ErrorCode::Parameter, "quasi-negativity: epsilon and delta must be positive");
  }
  if (u.size() != ef.values.size() || mask_count(u) == 0) {
    throw Error(ErrorCode::Precondition, "quasi-negativity: empty or mismatched region mask");
  }
  HypothesisReport r;
  r.name = std::string("quasi_negative_") + functional_name(ef.functional.kind);
  r.slack = slack;
  const auto& v = ef.values;
  r.margins.push_back(detail::scan_margin(
      "eps_minus_max_on_X", v.size(), nullptr, [&](std::size_t p) { return eps - v[p]; }, slack,
      r.witnesses));
  r.margins.push_back(detail::scan_margin(
      "neg_delta_minus_max_on_U", v.size(), &u, [&](std::size_t p) { return -delta - v[p]; }, slack,
      r.witnesses));
  r.parameters = {{"epsilon", eps}, {"delta", delta}};
  if (ef.functional.kind == FunctionalSpec::Kind::ric_perp) {
    r.parameters.emplace_back("alpha", ef.functional.alpha);
    r.parameters.emplace_back("beta", ef.functional.beta);
  } else if (ef.functional.kind == FunctionalSpec::Kind::k_ricci) {
    r.parameters.emplace_back("k", ef.functional.k);
  }
  r.finalize();
  return r;
}

/// Shifts psi so that sup psi = 0.
inline ScalarField normalize_sup_zero(ScalarField psi) {
  if (psi.empty()) return psi;
  const double m = *std::max_element(psi.begin(), psi.end());
  for (auto& x : psi) x -= m;
  return psi;
}

/// eta <= delta1 omega + dd^c psi, and omega + dd^c psi / delta1 >= eta / delta1.
inline HypothesisReport certify_delta1_bounded(const Grid& grid, const HermitianField& eta,
                                               const HermitianField& omega, const ScalarField& psi,
                                               double delta1, double slack = 1e-8) {
  if (!(delta1 > 0.0)) {
    throw Error(ErrorCode::Parameter, "delta1-boundedness: delta1 must be positive");
  }
  const ScalarField psi0 = normalize_sup_zero(psi);
  const HermitianField h = ddc(grid, psi0);
  HypothesisReport r;
  r.name = "delta1_bounded";
  r.slack = slack;
  r.margins.push_back(detail::scan_margin(
      "min_eig_delta1_omega_plus_ddc_psi_minus_eta", grid.size(), nullptr,
      [&](std::size_t p) {
        const Mat w = omega.at(p);
        return min_relative_eigenvalue(delta1 * w + h.at(p) - eta.at(p), w);
      },
      slack, r.witnesses));
  r.margins.push_back(detail::scan_margin(
      "min_eig_omega_plus_ddc_psi_over_delta1_minus_eta_over_delta1", grid.size(), nullptr,
      [&](std::size_t p) {
        const Mat w = omega.at(p);
        return min_relative_eigenvalue(w + h.at(p) / delta1 - eta.at(p) / delta1, w);
      },
      slack, r.witnesses));
  r.parameters = {{"delta1", delta1}};
  r.finalize();
  return r;
}

/// det(eta) / det(omega) >= delta2 on U.
inline HypothesisReport certify_volume_noncollapse(const HermitianField& eta,
                                                   const HermitianField& omega, double delta2,
                                                   const Mask& u, double slack = 1e-8) {
  if (!(delta2 > 0.0)) {
    throw Error(ErrorCode::Parameter, "volume non-collapse: delta2 must be positive");
  }
  if (u.size() != eta.size() || mask_count(u) == 0) {
    throw Error(ErrorCode::Precondition, "volume non-collapse: empty or mismatched region mask");
  }
  HypothesisReport r;
  r.name = "volume_noncollapsed";
  r.slack = slack;
  r.margins.push_back(detail::scan_margin(
      "volume_ratio_minus_delta2_on_U", eta.size(), &u,
      [&](std::size_t p) { return det_real(eta.at(p)) / det_real(omega.at(p)) - delta2; }, slack,
      r.witnesses));
  r.parameters = {{"delta2", delta2}};
  r.finalize();
  return r;
}

/// Pointwise volume ratio det(eta)/det(omega).
inline ScalarField volume_ratio(const HermitianField& eta, const HermitianField& omega) {
  ScalarField out(eta.size());
  for (std::size_t p = 0; p < eta.size(); ++p) out[p] = det_real(eta.at(p)) / det_real(omega.at(p));
  return out;
}

/// Largest delta with max-functional <= -delta on U, found by bisection to `tol`.
/// Returns 0 when no positive delta is certifiable.
inline double find_delta(const ExtremalField& ef, const Mask& u, double tol = 1e-5,
                         double slack = 1e-8) {
  if (u.size() != ef.values.size() || mask_count(u) == 0) {
    throw Error(ErrorCode::Precondition, "find-delta: empty or mismatched region mask");
  }
  double max_u = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < u.size(); ++p)
    if (u[p]) max_u = std::max(max_u, ef.values[p]);
  auto ok = [&](double d) { return max_u <= -d + slack; };
  if (!ok(tol)) return 0.0;
  double lo = tol;
  double hi = 1.0;
  while (ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return lo;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace kgap
