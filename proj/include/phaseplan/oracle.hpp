#pragma once

#include <string>
#include <vector>

#include "phaseplan/rl_engine.hpp"

namespace phaseplan {

inline constexpr std::size_t kOracleStateCap = 100000;

struct OracleResult {
  bool feasible = false;
  std::vector<int> rows;
  Trajectory trajectory;
  double return_value = 0.0;
};

// Exact maximiser of the return over all grid profiles from (0, 0) to
// (N-1, 0) whose transitions stay inside the environment's action ranges.
// Backward value iteration over columns; ties go to the higher row.
inline OracleResult dp_oracle(const Environment& env) {
  const PhaseGrid& grid = env.grid();
  const std::size_t n = grid.columns();
  if (n * static_cast<std::size_t>(grid.rows()) > kOracleStateCap)
    throw InputError("dp_oracle: grid has more than " + std::to_string(kOracleStateCap) + " states");

  const int rows = grid.rows();
  std::vector<std::vector<double>> value(n, std::vector<double>(rows, -kInf));
  std::vector<std::vector<int>> choice(n, std::vector<int>(rows, -1));
  if (env.feasible({n - 1, 0})) value[n - 1][0] = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    for (int r = 0; r <= grid.max_row[k]; ++r) {
      if (!env.feasible({k, r})) continue;
      const ActionRange& ar = env.range({k, r});
      for (int a = ar.row_max; a >= ar.row_min; --a) {
        if (value[k + 1][a] > value[k][r]) {
          value[k][r] = value[k + 1][a];
          choice[k][r] = a;
        }
      }
      if (choice[k][r] >= 0) value[k][r] += grid.level(r);
    }
  }

  OracleResult res;
  if (choice[0][0] < 0 && n > 1) return res;
  res.rows.push_back(0);
  for (std::size_t k = 0; k + 1 < n; ++k) res.rows.push_back(choice[k][res.rows.back()]);
  res.feasible = true;
  res.trajectory = make_trajectory(grid, env.path(), env.constraints(), res.rows);
  res.return_value = res.trajectory.return_value;
  return res;
}

}  // namespace phaseplan
