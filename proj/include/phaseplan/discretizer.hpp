#pragma once

#include <algorithm>
#include <vector>

#include "phaseplan/constraints.hpp"
#include "phaseplan/dynamics.hpp"
#include "phaseplan/path.hpp"

namespace phaseplan {

struct DiscretizerParams {
  double eps = 0.01;    // max inf-norm change of q' between neighbours
  double sigma = 0.1;   // max inf-norm change of q''
  double ds_max = 0.02;
  int candidates = 10001;
};

struct DiscretePath {
  std::vector<PathPoint> points;
  DiscretizerParams params;

  std::size_t size() const { return points.size(); }
  const PathPoint& operator[](std::size_t k) const { return points[k]; }
  double ds(std::size_t k) const { return points[k + 1].s - points[k].s; }
};

inline double inf_norm_diff(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

// Greedy single scan over uniform candidates. A candidate is accepted when
// its q' or q'' differs from the last accepted point by more than eps or
// sigma, or when the next candidate would exceed ds_max. Both endpoints are
// always accepted.
inline DiscretePath discretize(const DynamicsModel& model, const JointPath& path, const DiscretizerParams& params) {
  if (!(params.eps > 0.0) || !(params.sigma > 0.0) || !(params.ds_max > 0.0) || params.candidates < 2)
    throw InputError("discretize: eps, sigma, ds_max must be positive and candidates >= 2");
  if (path.dof() != model.dof) throw InputError("discretize: path and model dof differ");

  const int count = params.candidates;
  const double step = 1.0 / (count - 1);
  if (step > params.ds_max * (1.0 + 1e-9)) throw InputError("discretize: candidate spacing exceeds ds_max");
  auto cand = [count](int j) { return j == count - 1 ? 1.0 : static_cast<double>(j) / (count - 1); };

  DiscretePath dp;
  dp.params = params;
  dp.points.push_back(make_path_point(model, path, 0.0));
  Vector last_dq = dp.points.back().dq, last_ddq = dp.points.back().ddq;
  double last_s = 0.0;

  for (int j = 1; j < count - 1; ++j) {
    const double s = cand(j);
    const Vector dq = path.dq(s);
    const Vector ddq = path.ddq(s);
    if (!dq.allFinite() || !ddq.allFinite()) throw PathError("non-finite path derivatives at s=" + std::to_string(s));
    const bool curvature = inf_norm_diff(dq, last_dq) > params.eps;
    const bool rate = inf_norm_diff(ddq, last_ddq) > params.sigma;
    const bool spacing = (s - last_s) + step > params.ds_max * (1.0 + 1e-9);
    if (curvature || rate || spacing) {
      dp.points.push_back(make_path_point(model, path, s));
      last_dq = dq;
      last_ddq = ddq;
      last_s = s;
    }
  }
  dp.points.push_back(make_path_point(model, path, 1.0));
  return dp;
}

// N evenly spaced points; the control arm of the discretization comparison.
inline DiscretePath discretize_uniform(const DynamicsModel& model, const JointPath& path, std::size_t n) {
  if (n < 2) throw InputError("uniform discretization needs at least two points");
  DiscretePath dp;
  dp.params.candidates = static_cast<int>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k + 1 == n ? 1.0 : static_cast<double>(k) / static_cast<double>(n - 1);
    dp.points.push_back(make_path_point(model, path, s));
  }
  dp.params.ds_max = 1.0 / static_cast<double>(n - 1);
  return dp;
}

struct PathStats {
  std::size_t n = 0;
  double max_dq_change = 0.0;   // max |delta q'|_inf between neighbours
  double max_ddq_change = 0.0;  // max |delta q''|_inf
  double max_ds = 0.0;
};

inline PathStats path_stats(const DiscretePath& dp) {
  PathStats st;
  st.n = dp.size();
  for (std::size_t k = 0; k + 1 < dp.size(); ++k) {
    st.max_dq_change = std::max(st.max_dq_change, inf_norm_diff(dp[k + 1].dq, dp[k].dq));
    st.max_ddq_change = std::max(st.max_ddq_change, inf_norm_diff(dp[k + 1].ddq, dp[k].ddq));
    st.max_ds = std::max(st.max_ds, dp.ds(k));
  }
  return st;
}

}  // namespace phaseplan
