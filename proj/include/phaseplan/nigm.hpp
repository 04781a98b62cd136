#pragma once

#include <algorithm>
#include <vector>

#include "phaseplan/constraints.hpp"
#include "phaseplan/discretizer.hpp"
#include "phaseplan/phase_grid.hpp"
#include "phaseplan/trajectory.hpp"

namespace phaseplan {

// Grid-mode numerical-integration-like planner: a maximum-acceleration sweep
// from (0, 0), a maximum-deceleration sweep back from (1, 0), and their
// pointwise minimum, every velocity snapped down to a grid level.

namespace detail {

inline bool state_ok(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs, std::size_t k, int row) {
  return row <= grid.max_row[k] && check_state(dp[k], cs, grid.level(row));
}

}  // namespace detail

inline std::vector<int> forward_pass(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs) {
  const std::size_t n = grid.columns();
  std::vector<int> rows(n, 0);
  if (!detail::state_ok(grid, dp, cs, 0, 0)) throw PlannerError("start state is infeasible", 0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double v = grid.level(rows[k]);
    const AccelInterval iv = accel_bounds(dp[k], cs, std::min(v, grid.bound[k]));
    const Reach hi = iv.empty() ? Reach{0.0, true} : reachable_sdot(v, iv.sddot_max, grid.ds(k));
    // A state the sweep cannot leave (it was clipped onto a dip it could not
    // brake for) restarts the upper profile from the velocity limit; the
    // merge below repairs the approach.
    int r = hi.clamped ? grid.max_row[k + 1] : std::min(snap_down(grid, hi.sdot), grid.max_row[k + 1]);
    // Slide down onto the highest admissible state.
    while (r >= 0 && !detail::state_ok(grid, dp, cs, k + 1, r)) --r;
    if (r < 0) throw PlannerError("forward pass found no admissible next state", k + 1);
    rows[k + 1] = r;
  }
  return rows;
}

inline std::vector<int> backward_pass(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs) {
  const std::size_t n = grid.columns();
  std::vector<int> rows(n, 0);
  if (!detail::state_ok(grid, dp, cs, n - 1, 0)) throw PlannerError("end state is infeasible", n - 1);
  for (std::size_t k = n - 1; k-- > 0;) {
    const double v1 = grid.level(rows[k + 1]);
    const AccelInterval later = accel_bounds(dp[k + 1], cs, std::min(v1, grid.bound[k + 1]));
    if (later.empty()) throw PlannerError("backward pass reached a dead state", k + 1);
    const double rad = v1 * v1 - 2.0 * later.sddot_min * grid.ds(k);
    int r = std::min(snap_down(grid, std::sqrt(std::max(0.0, rad))), grid.max_row[k]);
    // The deceleration above was taken at the later point; make sure the
    // segment is also admissible at its start.
    auto admissible = [&](int row) {
      if (!detail::state_ok(grid, dp, cs, k, row)) return false;
      const double v = grid.level(row);
      const AccelInterval iv = accel_bounds(dp[k], cs, std::min(v, grid.bound[k]));
      if (iv.empty()) return false;
      const Reach hi = reachable_sdot(v, iv.sddot_max, grid.ds(k));
      return !hi.clamped && snap_up(grid, reachable_sdot(v, iv.sddot_min, grid.ds(k)).sdot) <= rows[k + 1];
    };
    while (r >= 0 && !admissible(r)) --r;
    if (r < 0) throw PlannerError("backward pass found no admissible previous state", k);
    rows[k] = r;
  }
  return rows;
}

// Pointwise minimum of both sweeps, then a forward sweep that keeps every
// transition inside its action range: a row the current state overshoots is
// lowered, and where the current state cannot brake down to the next row the
// preceding rows are lowered backwards until the approach is admissible.
inline Trajectory plan_nigm(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs) {
  const auto fwd = forward_pass(grid, dp, cs);
  const auto bwd = backward_pass(grid, dp, cs);
  const std::size_t n = grid.columns();
  std::vector<int> rows(n);
  for (std::size_t k = 0; k < n; ++k) rows[k] = std::min(fwd[k], bwd[k]);

  auto range_at = [&](std::size_t k) { return action_range(grid, dp, cs, {k, rows[k]}); };
  for (std::size_t k = 0; k + 1 < n; ++k) {
    ActionRange ar = range_at(k);
    if (!ar.empty() && rows[k + 1] > ar.row_max) {
      int next = ar.row_max;
      while (next >= ar.row_min && !detail::state_ok(grid, dp, cs, k + 1, next)) --next;
      if (next < ar.row_min) throw PlannerError("merged profile enters an infeasible state", k + 1);
      rows[k + 1] = next;
      continue;
    }
    if (ar.contains(rows[k + 1])) continue;
    // Too fast at k to reach rows[k+1]: brake earlier.
    for (std::size_t j = k;; --j) {
      int r = rows[j] - 1;
      for (; r >= 0; --r) {
        if (!detail::state_ok(grid, dp, cs, j, r)) continue;
        if (action_range(grid, dp, cs, {j, r}).contains(rows[j + 1])) break;
      }
      if (r < 0 || (j == 0 && r != 0)) throw PlannerError("merged profile cannot decelerate in time", j);
      rows[j] = r;
      if (j == 0 || range_at(j - 1).contains(rows[j])) break;
    }
  }
  return make_trajectory(grid, dp, cs, std::move(rows));
}

inline Trajectory plan_nigm(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs, TorqueMode mode) {
  return plan_nigm(grid, dp, cs.with_mode(mode));
}

// Relative tolerance on the executed pseudo-acceleration when classifying a
// trajectory against an interval.
inline bool sddot_admissible(const AccelInterval& iv, double sddot) {
  const double tol = 1e-9 * std::max({1.0, std::abs(sddot), std::abs(iv.sddot_min), std::abs(iv.sddot_max)});
  return iv.contains(sddot, tol);
}

struct PriorClassification {
  std::vector<bool> violates;   // per point
  std::size_t terminal_begin = 0;  // first column of the clean suffix (== size when empty)
  std::size_t violations() const { return static_cast<std::size_t>(std::count(violates.begin(), violates.end(), true)); }
};

// Evaluates each point of a (conservatively planned) trajectory against
// `cs`: a point violates when its state is infeasible or its executed
// pseudo-acceleration falls outside the admissible interval. The longest
// clean suffix becomes the terminal polyline.
inline PriorClassification classify_prior(const Trajectory& traj, const PhaseGrid& grid, const DiscretePath& dp,
                                          const ConstraintSet& cs) {
  const std::size_t n = traj.size();
  PriorClassification pc;
  pc.violates.assign(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = traj.sdot[k];
    bool bad = v > grid.bound[k] * (1.0 + kVelocitySlack) || !check_state(dp[k], cs, v);
    if (!bad && k + 1 < n) {
      const AccelInterval iv = accel_bounds(dp[k], cs, std::min(v, grid.bound[k]));
      bad = !sddot_admissible(iv, traj.sddot[k]);
    }
    pc.violates[k] = bad;
  }
  pc.terminal_begin = n;
  while (pc.terminal_begin > 0 && !pc.violates[pc.terminal_begin - 1]) --pc.terminal_begin;
  return pc;
}

}  // namespace phaseplan
