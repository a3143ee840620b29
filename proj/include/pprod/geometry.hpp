#pragma once

// Angle and inclination quantities of a tuple of subspaces.
//
//   cb  = || P_r ... P_1 P_{M^perp} ||                       (order matters for r >= 3)
//   ell = inf_{x not in M} max_j dist(x; M_j) / dist(x; M)
//   ell~ = min_i inf_{x in M_i \ M} (same ratio)
//
// with M the intersection of all inputs. The two infima have no closed form;
// they are estimated by a nested sphere grid plus seeded pattern-search restarts.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprod/error.hpp"
#include "pprod/hilbert.hpp"
#include "pprod/random.hpp"

namespace pprod {

inline constexpr double kClosedSumMargin = 1e-8;

struct AngleReport {
  double cb = 0.0;
  int subspace_count = 0;
  std::vector<int> ordering;  // labels in application order: first entry is applied first
  double tol = kDefaultTol;
};

enum class InclinationKind { inclination, inner_inclination };

struct InclinationEstimate {
  double value_lower = 0.0;
  double value_upper = 0.0;
  long grid_resolution = 0;  // effective (rounded-up) resolution actually sampled
  int restarts = 0;
  InclinationKind kind = InclinationKind::inclination;
  std::optional<int> argmin_face;  // inner inclination only, 1-based
};

inline const char* to_string(InclinationKind k) {
  return k == InclinationKind::inclination ? "inclination" : "inner_inclination";
}

inline nlohmann::json to_json_value(const AngleReport& r) {
  return {{"cb", r.cb}, {"subspace_count", r.subspace_count}, {"ordering", r.ordering}, {"tol", r.tol},
          {"margin", 1.0 - r.cb}};
}

inline nlohmann::json to_json_value(const InclinationEstimate& e) {
  nlohmann::json j = {{"kind", to_string(e.kind)},
                      {"value_lower", e.value_lower},
                      {"value_upper", e.value_upper},
                      {"grid_resolution", e.grid_resolution},
                      {"restarts", e.restarts}};
  if (e.argmin_face) j["argmin_face"] = *e.argmin_face;
  return j;
}

inline AngleReport friedrichs_cb(std::span<const Subspace> subspaces, std::vector<int> ordering = {},
                                 double tol = kDefaultTol) {
  if (subspaces.empty()) throw InvalidArgument("friedrichs_cb: empty subspace list");
  const long d = subspaces.front().ambient_dim();
  for (const auto& s : subspaces) detail::require_dim("friedrichs_cb", d, s.ambient_dim());
  if (ordering.empty())
    for (std::size_t i = 0; i < subspaces.size(); ++i) ordering.push_back(static_cast<int>(i) + 1);
  if (ordering.size() != subspaces.size()) throw InvalidArgument("friedrichs_cb: ordering/subspace count differ");

  const Subspace m = intersect(subspaces, tol);
  Matrix product = Matrix::Identity(d, d) - m.projection_matrix();
  for (const auto& s : subspaces) product = s.basis() * (s.basis().transpose() * product);

  AngleReport r;
  r.cb = operator_norm(product);
  r.subspace_count = static_cast<int>(subspaces.size());
  r.ordering = std::move(ordering);
  r.tol = tol;
  return r;
}

inline double closed_sum_margin(std::span<const Subspace> subspaces, double tol = kDefaultTol) {
  return 1.0 - friedrichs_cb(subspaces, {}, tol).cb;
}

/// cb < 1 - 1e-8. Always true for valid finite-dimensional input; the margin is the informative part.
inline bool closed_sum_criterion(std::span<const Subspace> subspaces, double tol = kDefaultTol) {
  return friedrichs_cb(subspaces, {}, tol).cb < 1.0 - kClosedSumMargin;
}

namespace detail {

// f(u) = max_j ||A_j u|| on the unit sphere of R^q.
class SphereObjective {
 public:
  explicit SphereObjective(std::vector<Matrix> maps) : maps_(std::move(maps)) {}

  long dim() const { return maps_.empty() ? 0 : maps_.front().cols(); }

  double operator()(const Vector& u) const {
    double best = 0.0;
    for (const auto& a : maps_) best = std::max(best, (a * u).norm());
    return best;
  }

  double lipschitz() const {
    double l = 0.0;
    for (const auto& a : maps_) l = std::max(l, operator_norm(a));
    return l;
  }

 private:
  std::vector<Matrix> maps_;
};

struct SphereMinimum {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  long effective_resolution = 0;
};

inline Vector tangent_step(const Vector& u, const Vector& dir, double h) {
  Vector t = dir - dir.dot(u) * u;
  const double n = t.norm();
  if (n < 1e-14) return u;
  Vector v = u + h * (t / n);
  return v / v.norm();
}

// Compass search on the sphere along coordinate tangents plus two random tangents per sweep.
inline double pattern_search(const SphereObjective& f, Vector u, SplitMix64& rng) {
  const long q = u.size();
  double fu = f(u);
  double h = 0.5;
  for (int iter = 0; iter < 20000 && h > 1e-10; ++iter) {
    double best = fu;
    Vector best_u = u;
    auto trial = [&](const Vector& dir) {
      for (double sign : {1.0, -1.0}) {
        Vector v = tangent_step(u, sign * dir, h);
        const double fv = f(v);
        if (fv < best) {
          best = fv;
          best_u = std::move(v);
        }
      }
    };
    for (long k = 0; k < q; ++k) trial(Vector::Unit(q, k));
    trial(random_gaussian_vector(q, rng));
    trial(random_gaussian_vector(q, rng));
    if (best < fu) {
      fu = best;
      u = std::move(best_u);
    } else {
      h *= 0.5;
    }
  }
  return fu;
}

inline SphereMinimum minimize_on_sphere(const SphereObjective& f, long grid_resolution, int restarts,
                                        std::uint64_t seed) {
  const long q = f.dim();
  SphereMinimum out;
  if (q == 1) {
    out.upper = out.lower = f(Vector::Ones(1));
    out.effective_resolution = 1;
    return out;
  }
  if (q == 2) {
    // Half circle suffices since f(-u) = f(u). Powers of two keep grids nested.
    const long g = static_cast<long>(std::bit_ceil(static_cast<unsigned long>(grid_resolution)));
    Vector u(2);
    for (long i = 0; i < g; ++i) {
      const double phi = std::numbers::pi * static_cast<double>(i) / static_cast<double>(g);
      u << std::cos(phi), std::sin(phi);
      out.upper = std::min(out.upper, f(u));
    }
    // Every point is within arc pi/(2g) of the grid and f is L-Lipschitz.
    const double half_spacing = std::numbers::pi / (2.0 * static_cast<double>(g));
    out.lower = std::max(0.0, out.upper - f.lipschitz() * half_spacing);
    out.effective_resolution = g;
  } else if (q == 3) {
    // Upper hemisphere on a g x g (polar, azimuth) grid, g a power of two.
    const auto side = static_cast<unsigned long>(std::ceil(std::sqrt(static_cast<double>(grid_resolution))));
    const long g = static_cast<long>(std::bit_ceil(side));
    Vector u(3);
    for (long a = 0; a <= g; ++a) {
      const double theta = 0.5 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(g);
      for (long b = 0; b < g; ++b) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(g);
        u << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
        out.upper = std::min(out.upper, f(u));
        if (a == 0) break;  // pole
      }
    }
    out.effective_resolution = g * g;
  }
  const int runs = (q >= 4) ? std::max(restarts, 1) : restarts;
  for (int i = 0; i < runs; ++i) {
    SplitMix64 rng(seed + static_cast<std::uint64_t>(i));
    out.upper = std::min(out.upper, pattern_search(f, random_unit_vector(q, rng), rng));
  }
  return out;
}

// Maps (I - P_j) B for each input j, with B an orthonormal basis of the search domain.
inline std::vector<Matrix> residual_maps(std::span<const Subspace> subspaces, const Matrix& domain) {
  std::vector<Matrix> maps;
  maps.reserve(subspaces.size());
  for (const auto& s : subspaces) maps.push_back(domain - s.basis() * (s.basis().transpose() * domain));
  return maps;
}

inline void check_estimator_args(const char* where, std::span<const Subspace> subspaces, long grid_resolution) {
  if (subspaces.empty()) throw InvalidArgument(std::string(where) + ": empty subspace list");
  if (grid_resolution < 8) throw InvalidArgument(std::string(where) + ": grid_resolution must be >= 8");
  const long d = subspaces.front().ambient_dim();
  for (const auto& s : subspaces) require_dim(where, d, s.ambient_dim());
}

}  // namespace detail

/// Estimate of ell. Points of M contribute nothing (the ratio is invariant under
/// x -> x + m for m in M), so the search runs over the unit sphere of M^perp.
inline InclinationEstimate inclination(std::span<const Subspace> subspaces, long grid_resolution, int restarts,
                                       std::uint64_t seed, double tol = kDefaultTol) {
  detail::check_estimator_args("inclination", subspaces, grid_resolution);
  const Subspace m = intersect(subspaces, tol);
  if (m.is_full()) throw PreconditionViolated("inclination: intersection is the whole space; ratio undefined");
  const Subspace domain = complement(m);
  const detail::SphereObjective f(detail::residual_maps(subspaces, domain.basis()));
  const auto min = detail::minimize_on_sphere(f, grid_resolution, restarts, seed);

  InclinationEstimate e;
  e.kind = InclinationKind::inclination;
  e.value_lower = min.lower;
  e.value_upper = min.upper;
  e.grid_resolution = min.effective_resolution;
  e.restarts = restarts;
  return e;
}

/// Estimate of ell~: per face M_i the search domain is M_i intersected with M^perp.
inline InclinationEstimate inner_inclination(std::span<const Subspace> subspaces, long grid_resolution,
                                             int restarts, std::uint64_t seed, double tol = kDefaultTol) {
  detail::check_estimator_args("inner_inclination", subspaces, grid_resolution);
  const Subspace m = intersect(subspaces, tol);
  if (m.is_full()) throw PreconditionViolated("inner_inclination: intersection is the whole space");
  const Subspace m_perp = complement(m);

  InclinationEstimate e;
  e.kind = InclinationKind::inner_inclination;
  e.value_lower = std::numeric_limits<double>::infinity();
  e.value_upper = std::numeric_limits<double>::infinity();
  e.restarts = restarts;
  for (std::size_t i = 0; i < subspaces.size(); ++i) {
    const Subspace face = intersect({subspaces[i], m_perp}, tol);
    if (face.is_zero())
      throw PreconditionViolated("inner_inclination: face " + std::to_string(i + 1) +
                                 " is contained in the intersection (infimum over an empty set)");
    const detail::SphereObjective f(detail::residual_maps(subspaces, face.basis()));
    const auto min = detail::minimize_on_sphere(f, grid_resolution, restarts, seed + 1000003ULL * i);
    if (min.upper < e.value_upper) e.argmin_face = static_cast<int>(i) + 1;
    e.value_upper = std::min(e.value_upper, min.upper);
    e.value_lower = std::min(e.value_lower, min.lower);
    e.grid_resolution = std::max(e.grid_resolution, min.effective_resolution);
  }
  return e;
}

}  // namespace pprod
