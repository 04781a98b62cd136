#pragma once

#include <algorithm>
#include <vector>

#include "phaseplan/constraints.hpp"
#include "phaseplan/discretizer.hpp"
#include "phaseplan/phase_grid.hpp"

namespace phaseplan {

// Velocity profile on the grid, one row per column, plus derived motion and
// torque data. sddot[k] and dt[k] describe segment k -> k+1; the last entry
// holds the rest state (dt = 0, sddot chosen inside the admissible interval
// closest to zero).
struct Trajectory {
  std::vector<int> rows;
  std::vector<double> s, sdot, sddot, dt;
  std::vector<Vector> tau;
  std::vector<bool> violation;
  double return_value = 0.0;
  double exec_time = 0.0;

  std::size_t size() const { return rows.size(); }
};

// Sum of pseudo-velocities over all columns.
inline double trajectory_return(const PhaseGrid& grid, const std::vector<int>& rows) {
  double g = 0.0;
  for (int r : rows) g += grid.level(r);
  return g;
}

inline Trajectory make_trajectory(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs,
                                  std::vector<int> rows) {
  const std::size_t n = rows.size();
  if (n != grid.columns()) throw InputError("trajectory length differs from grid column count");
  Trajectory t;
  t.rows = std::move(rows);
  t.s = grid.s;
  t.sdot.resize(n);
  t.sddot.assign(n, 0.0);
  t.dt.assign(n, 0.0);
  t.violation.assign(n, false);
  for (std::size_t k = 0; k < n; ++k) t.sdot[k] = grid.level(t.rows[k]);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    t.sddot[k] = implied_sddot(t.sdot[k], t.sdot[k + 1], grid.ds(k));
    t.dt[k] = t.sdot[k] + t.sdot[k + 1] > 0.0 ? segment_time(t.sdot[k], t.sdot[k + 1], grid.ds(k)) : kInf;
    t.exec_time += t.dt[k];
  }
  if (n > 0) {
    const AccelInterval iv = accel_bounds(dp[n - 1], cs, std::min(t.sdot[n - 1], grid.bound[n - 1]));
    if (!iv.empty()) t.sddot[n - 1] = std::clamp(0.0, iv.sddot_min, iv.sddot_max);
  }
  for (std::size_t k = 0; k < n; ++k) t.tau.push_back(parametric_torque(dp[k].co, t.sdot[k], t.sddot[k]));
  t.return_value = trajectory_return(grid, t.rows);
  return t;
}

struct AuditReport {
  bool pass = true;
  double max_torque_excess = 0.0;
  double max_velocity_excess = 0.0;
  std::size_t worst_column = 0;
  std::vector<bool> violation;
};

// Pointwise torque and velocity check of a trajectory against `cs`.
inline AuditReport audit_trajectory(const Trajectory& t, const DiscretePath& dp, const ConstraintSet& cs,
                                    double torque_tol = 1e-9) {
  AuditReport a;
  a.violation.assign(t.size(), false);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double vb = velocity_bound(dp[k], cs);
    const double vex = std::isfinite(vb) ? std::max(0.0, t.sdot[k] - vb) : 0.0;
    const double tex = torque_excess(dp[k], cs, std::min(t.sdot[k], vb), t.sddot[k]);
    const bool bad = tex > torque_tol || vex > kVelocitySlack * std::max(1.0, vb);
    a.violation[k] = bad;
    if (tex > a.max_torque_excess) {
      a.max_torque_excess = tex;
      a.worst_column = k;
    }
    a.max_velocity_excess = std::max(a.max_velocity_excess, vex);
    a.pass = a.pass && !bad;
  }
  return a;
}

}  // namespace phaseplan
