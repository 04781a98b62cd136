#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "phaseplan/constraints.hpp"
#include "phaseplan/discretizer.hpp"

namespace phaseplan {

// Row-index tolerance used when snapping velocities onto grid levels, so an
// exact level (r * h) maps back to r despite rounding.
inline constexpr double kSnapTol = 1e-10;

// N x (M+1) lattice over (s, sdot). Row r sits at pseudo-velocity r * h
// with h = (largest column velocity bound) / M.
struct PhaseGrid {
  std::vector<double> s;
  int m = 0;
  double h = 0.0;
  std::vector<double> bound;  // per-column velocity bound
  std::vector<int> max_row;   // per-column highest row not above the bound

  std::size_t columns() const { return s.size(); }
  int rows() const { return m + 1; }
  double level(int row) const { return row * h; }
  double ds(std::size_t k) const { return s[k + 1] - s[k]; }
};

struct GridState {
  std::size_t col = 0;
  int row = 0;
  bool operator==(const GridState&) const = default;
};

// Largest row whose level does not exceed sdot, clamped to M.
inline int snap_down(const PhaseGrid& grid, double sdot) {
  if (sdot < 0.0) throw DomainError("snap_down: negative pseudo-velocity");
  if (!std::isfinite(sdot)) return grid.m;
  const double x = sdot / grid.h;
  if (x >= grid.m) return grid.m;
  return static_cast<int>(std::floor(x + kSnapTol));
}

// Smallest row whose level is not below sdot (may exceed M).
inline int snap_up(const PhaseGrid& grid, double sdot) {
  if (sdot <= 0.0) return 0;
  const double x = sdot / grid.h;
  if (x > grid.m + 1) return grid.m + 1;
  return static_cast<int>(std::ceil(x - kSnapTol));
}

inline PhaseGrid build_grid(const DiscretePath& dp, const ConstraintSet& cs, int m) {
  if (m < 2) throw InputError("grid needs M >= 2");
  if (dp.size() < 2) throw InputError("grid needs at least two columns");
  PhaseGrid g;
  g.m = m;
  double top = 0.0;
  for (const auto& p : dp.points) {
    g.s.push_back(p.s);
    g.bound.push_back(velocity_bound(p, cs));
    if (std::isfinite(g.bound.back())) top = std::max(top, g.bound.back());
  }
  if (!(top > 0.0)) throw ConfigError("global pseudo-velocity bound is zero or unbounded; set joint or motor speed limits");
  g.h = top / m;
  for (double b : g.bound) g.max_row.push_back(snap_down(g, b));
  return g;
}

struct Reach {
  double sdot = 0.0;
  bool clamped = false;  // radicand was negative
};

// Uniform acceleration over ds: sqrt(2 sddot ds + sdot^2), clamped at 0.
inline Reach reachable_sdot(double sdot, double sddot, double ds) {
  if (!(ds > 0.0)) throw DomainError("reachable_sdot: ds must be positive");
  const double rad = 2.0 * sddot * ds + sdot * sdot;
  if (rad < 0.0) return {0.0, true};
  return {std::sqrt(rad), false};
}

// Pseudo-acceleration realised by moving sdot_k -> sdot_k1 over ds.
inline double implied_sddot(double sdot_k, double sdot_k1, double ds) {
  return (sdot_k1 * sdot_k1 - sdot_k * sdot_k) / (2.0 * ds);
}

struct ActionRange {
  int row_min = 0;
  int row_max = -1;
  bool dead = false;  // even full acceleration cannot reach the next column

  bool empty() const { return row_min > row_max; }
  int size() const { return empty() ? 0 : row_max - row_min + 1; }
  bool contains(int r) const { return r >= row_min && r <= row_max; }

  static ActionRange none(bool dead = false) { return {1, 0, dead}; }
};

// Rows of column k+1 reachable from `state` with a pseudo-acceleration in
// the admissible interval at the state. Empty when the interval is empty or
// no row fits between the snapped extremes.
inline ActionRange action_range(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs,
                                const GridState& state) {
  const std::size_t k = state.col;
  if (k + 1 >= grid.columns()) return ActionRange::none();
  const double v = grid.level(state.row);
  const PathPoint& p = dp[k];
  if (v > grid.bound[k] * (1.0 + kVelocitySlack)) return ActionRange::none();
  const AccelInterval iv = accel_bounds(p, cs, std::min(v, grid.bound[k]));
  if (iv.empty()) return ActionRange::none();
  const double ds = grid.ds(k);
  const Reach hi = reachable_sdot(v, iv.sddot_max, ds);
  if (hi.clamped) return ActionRange::none(true);
  const Reach lo = reachable_sdot(v, iv.sddot_min, ds);
  ActionRange r;
  r.row_max = std::min(snap_down(grid, hi.sdot), grid.max_row[k + 1]);
  r.row_min = snap_up(grid, lo.sdot);
  // Rest to rest never reaches the next column.
  if (state.row == 0) r.row_min = std::max(r.row_min, 1);
  return r;
}

// Traversal time of one segment under uniform acceleration.
inline double segment_time(double sdot_k, double sdot_k1, double ds) {
  if (!(sdot_k + sdot_k1 > 0.0)) throw DomainError("segment_time: segment is not traversable at zero velocity");
  return 2.0 * ds / (sdot_k + sdot_k1);
}

}  // namespace phaseplan
