#pragma once

#include <random>
#include <vector>

#include "phaseplan/experiment.hpp"

namespace phaseplan::fixtures {

// Unit mass on a unit straight line with |tau| <= 1. The motor speed limit
// of 1 puts the grid top at sdot = 1; `cap` adds a joint speed limit.
struct BangBang {
  DynamicsModel model;
  JointPath path;
  ConstraintSet cs;
  DiscretePath dp;
};

inline BangBang bang_bang(std::size_t n, double cap = kInf) {
  BangBang b{point_mass_model(1.0), linear_path(Vector::Zero(1), Vector::Ones(1)), {}, {}};
  b.cs.motors = {flat_characteristic(1.0, 1.0)};
  b.cs.limits = KinematicLimits::unbounded(1);
  if (std::isfinite(cap)) {
    b.cs.limits.qdot_max[0] = cap;
    b.cs.limits.qdot_min[0] = -cap;
  }
  b.dp = discretize_uniform(b.model, b.path, n);
  return b;
}

// Small random two-link instance on a cubic path with flat motors.
struct TinyInstance {
  DynamicsModel model;
  JointPath path;
  ConstraintSet cs;
  DiscretePath dp;
  int m = 0;
};

inline TinyInstance tiny_instance(std::uint64_t seed, std::size_t n, int m) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PlanarLink l1{1.0, 1.0 + u(rng), 0.5, 0.05};
  const PlanarLink l2{0.8, 0.5 + u(rng), 0.4, 0.02};
  PolySegment seg;
  seg.coeffs = {{u(rng) - 0.5, 0.5 + u(rng), u(rng) - 0.5, -0.5 * u(rng)},
                {u(rng), -0.5 - u(rng), 2.0 * u(rng) - 1.0, u(rng) - 0.5}};
  TinyInstance t{planar_two_link_model(l1, l2, 9.81), polynomial_path({seg}), {}, {}, m};
  t.cs.motors = {flat_characteristic(40.0 + 20.0 * u(rng), 3.0), flat_characteristic(15.0 + 10.0 * u(rng), 4.0)};
  t.cs.limits = KinematicLimits::unbounded(2);
  t.dp = discretize_uniform(t.model, t.path, n);
  return t;
}

// The first `count` instances (N <= 12, M <= 8) that admit at least one
// complete grid profile.
struct FeasibleTiny {
  TinyInstance inst;
  std::shared_ptr<Environment> env;
  OracleResult oracle;
  int index = 0;
};

inline std::vector<FeasibleTiny> feasible_tiny_instances(int count, std::uint64_t master = 12345) {
  std::vector<FeasibleTiny> out;
  for (int i = 0; static_cast<int>(out.size()) < count && i < 10 * count; ++i) {
    const std::size_t n = 6 + static_cast<std::size_t>(i % 7);
    const int m = 4 + i % 5;
    TinyInstance t = tiny_instance(split_seed(master, static_cast<std::uint64_t>(i)), n, m);
    auto env = std::make_shared<Environment>(build_grid(t.dp, t.cs, m), t.dp, t.cs);
    OracleResult o = dp_oracle(*env);
    if (!o.feasible) continue;
    out.push_back({std::move(t), env, std::move(o), i});
  }
  return out;
}

}  // namespace phaseplan::fixtures
