#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "phaseplan/dynamics.hpp"
#include "phaseplan/types.hpp"

namespace phaseplan {

// Piecewise-linear peak-torque envelope of one motor, expressed at the motor
// shaft. Joint torque limit = motor torque * gear_ratio, joint speed = motor
// speed / gear_ratio.
struct MotorCharacteristic {
  struct Breakpoint {
    double speed;   // rad/s, >= 0
    double torque;  // N*m, > 0
  };

  std::vector<Breakpoint> breakpoints;
  double rated_speed = 0.0;  // continuous-duty region boundary; recorded only
  double gear_ratio = 1.0;
  bool symmetric = true;
  // Used for the negative side when symmetric is false (magnitudes).
  std::vector<Breakpoint> negative_breakpoints;

  double max_speed() const { return breakpoints.empty() ? 0.0 : breakpoints.back().speed; }
  double peak_torque() const { return breakpoints.empty() ? 0.0 : breakpoints.front().torque; }

  void validate() const {
    check_envelope(breakpoints);
    if (!symmetric) {
      check_envelope(negative_breakpoints);
      if (negative_breakpoints.back().speed != max_speed())
        throw InputError("negative envelope must end at the same max speed");
    }
    if (!(gear_ratio > 0.0)) throw InputError("gear ratio must be positive");
  }

  // Envelope torque at a motor speed magnitude; throws past max_speed.
  double envelope(double motor_speed, bool negative_side = false) const {
    const auto& bp = (negative_side && !symmetric) ? negative_breakpoints : breakpoints;
    const double v = std::abs(motor_speed);
    if (v > bp.back().speed * (1.0 + 1e-12) + 1e-15)
      throw InfeasibleSpeedError("motor speed " + std::to_string(v) + " beyond max speed " +
                                 std::to_string(bp.back().speed));
    if (v >= bp.back().speed) return bp.back().torque;
    auto it = std::upper_bound(bp.begin(), bp.end(), v,
                               [](double x, const Breakpoint& b) { return x < b.speed; });
    if (it == bp.begin()) return bp.front().torque;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (v - lo.speed) / (hi.speed - lo.speed);
    return lo.torque + t * (hi.torque - lo.torque);
  }

 private:
  static void check_envelope(const std::vector<Breakpoint>& bp) {
    if (bp.size() < 2) throw InputError("motor characteristic needs at least two breakpoints");
    if (bp.front().speed != 0.0) throw InputError("first breakpoint must be at zero speed");
    for (std::size_t i = 0; i < bp.size(); ++i) {
      if (!(bp[i].torque > 0.0)) throw InputError("breakpoint torque must be positive");
      if (i > 0 && !(bp[i].speed > bp[i - 1].speed)) throw InputError("breakpoint speeds must strictly increase");
      if (i > 0 && bp[i].torque > bp[i - 1].torque) throw InputError("breakpoint torques must be non-increasing");
    }
  }
};

// Flat characteristic: constant |tau| <= torque up to max_speed.
inline MotorCharacteristic flat_characteristic(double torque, double max_speed, double gear_ratio = 1.0) {
  MotorCharacteristic mc;
  mc.breakpoints = {{0.0, torque}, {max_speed, torque}};
  mc.rated_speed = max_speed;
  mc.gear_ratio = gear_ratio;
  mc.validate();
  return mc;
}

struct KinematicLimits {
  Vector qdot_min, qdot_max;
  Vector qddot_min, qddot_max;

  // No joint velocity/acceleration limits beyond the motors.
  static KinematicLimits unbounded(int dof) {
    return {Vector::Constant(dof, -kInf), Vector::Constant(dof, kInf), Vector::Constant(dof, -kInf),
            Vector::Constant(dof, kInf)};
  }

  void validate(int dof) const {
    for (const Vector* v : {&qdot_min, &qdot_max, &qddot_min, &qddot_max})
      if (v->size() != dof) throw InputError("kinematic limit vector has wrong length");
    for (int i = 0; i < dof; ++i)
      if (!(qdot_min[i] < 0.0 && qdot_max[i] > 0.0 && qddot_min[i] < 0.0 && qddot_max[i] > 0.0))
        throw InputError("kinematic limits must satisfy min < 0 < max");
  }
};

// Pseudo-acceleration interval; sddot_min > sddot_max encodes infeasibility.
struct AccelInterval {
  double sddot_min = -kInf;
  double sddot_max = kInf;

  bool empty() const { return sddot_min > sddot_max; }
  bool contains(double x, double tol = 0.0) const { return x >= sddot_min - tol && x <= sddot_max + tol; }

  static AccelInterval infeasible() { return {kInf, -kInf}; }
};

enum class TorqueMode { velocity_dependent, conservative };

struct TorqueBounds {
  Vector tau_min, tau_max;
};

inline TorqueBounds torque_bounds(const std::vector<MotorCharacteristic>& motors, const Vector& qdot) {
  const auto n = static_cast<int>(motors.size());
  if (qdot.size() != n) throw InputError("torque_bounds: qdot length differs from motor count");
  TorqueBounds out{Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    const auto& mc = motors[i];
    const double motor_speed = std::abs(qdot[i]) * mc.gear_ratio;
    out.tau_max[i] = mc.envelope(motor_speed) * mc.gear_ratio;
    out.tau_min[i] = mc.symmetric ? -out.tau_max[i] : -mc.envelope(motor_speed, true) * mc.gear_ratio;
  }
  return out;
}

// Speed-independent bounds at the zero-speed peak torque.
inline TorqueBounds conservative_torque_bounds(const std::vector<MotorCharacteristic>& motors) {
  const auto n = static_cast<int>(motors.size());
  TorqueBounds out{Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    const auto& mc = motors[i];
    out.tau_max[i] = mc.peak_torque() * mc.gear_ratio;
    out.tau_min[i] = mc.symmetric ? -out.tau_max[i] : -mc.negative_breakpoints.front().torque * mc.gear_ratio;
  }
  return out;
}

// Everything the planners need to know about the path at one s value.
struct PathPoint {
  double s = 0.0;
  Vector q, dq, ddq;
  ParamCoefficients co;
};

inline PathPoint make_path_point(const DynamicsModel& model, const JointPath& path, double s) {
  PathPoint p;
  p.s = s;
  p.q = path.q(s);
  p.dq = path.dq(s);
  p.ddq = path.ddq(s);
  if (!p.q.allFinite() || !p.dq.allFinite() || !p.ddq.allFinite())
    throw PathError("non-finite path derivatives at s=" + std::to_string(s));
  p.co = project_coefficients(model, p.q, p.dq, p.ddq);
  return p;
}

// Motor set, kinematic limits and which torque envelope to enforce.
struct ConstraintSet {
  std::vector<MotorCharacteristic> motors;
  KinematicLimits limits;
  TorqueMode mode = TorqueMode::velocity_dependent;

  int dof() const { return static_cast<int>(motors.size()); }

  void validate() const {
    if (motors.empty()) throw InputError("constraint set has no motors");
    for (const auto& m : motors) m.validate();
    limits.validate(dof());
  }

  ConstraintSet with_mode(TorqueMode m) const {
    ConstraintSet c = *this;
    c.mode = m;
    return c;
  }

  TorqueBounds torque_at(const Vector& qdot) const {
    return mode == TorqueMode::conservative ? conservative_torque_bounds(motors) : torque_bounds(motors, qdot);
  }
};

// Largest admissible pseudo-velocity at a path point, from joint velocity
// limits and motor max speed. Joints with q'_i = 0 impose nothing; +inf when
// no joint moves.
inline double velocity_bound(const PathPoint& p, const ConstraintSet& cs) {
  double bound = kInf;
  for (int i = 0; i < cs.dof(); ++i) {
    const double d = p.dq[i];
    if (d == 0.0) continue;
    const double kin = d > 0.0 ? cs.limits.qdot_max[i] / d : cs.limits.qdot_min[i] / d;
    const auto& mc = cs.motors[i];
    const double motor = mc.max_speed() / (mc.gear_ratio * std::abs(d));
    bound = std::min({bound, kin, motor});
  }
  return bound;
}

namespace detail {

// Intersect `iv` with {x : lo <= a x + r <= hi}. a = 0 is a pure
// feasibility test on r.
inline void intersect_affine(AccelInterval& iv, double a, double r, double lo, double hi) {
  if (a == 0.0) {
    if (r < lo || r > hi) iv = AccelInterval::infeasible();
    return;
  }
  double x1 = (lo - r) / a;
  double x2 = (hi - r) / a;
  if (a < 0.0) std::swap(x1, x2);
  iv.sddot_min = std::max(iv.sddot_min, x1);
  iv.sddot_max = std::min(iv.sddot_max, x2);
}

}  // namespace detail

// Admissible pseudo-acceleration at (s, sdot) given explicit torque bounds.
inline AccelInterval accel_bounds(const PathPoint& p, const TorqueBounds& tb, const KinematicLimits& lim,
                                  double sdot) {
  if (sdot < 0.0) throw DomainError("pseudo-velocity must be non-negative");
  AccelInterval iv;
  const auto n = static_cast<int>(p.co.m.size());
  const double sd2 = sdot * sdot;
  for (int i = 0; i < n; ++i) {
    const double r = p.co.c[i] * sd2 + p.co.f[i] * sdot + p.co.g[i];
    detail::intersect_affine(iv, p.co.m[i], r, tb.tau_min[i], tb.tau_max[i]);
  }
  for (int i = 0; i < n; ++i) detail::intersect_affine(iv, p.dq[i], p.ddq[i] * sd2, lim.qddot_min[i], lim.qddot_max[i]);
  return iv;
}

inline AccelInterval accel_bounds(const PathPoint& p, const ConstraintSet& cs, double sdot) {
  return accel_bounds(p, cs.torque_at(p.dq * sdot), cs.limits, sdot);
}

// Relative slack used when comparing a pseudo-velocity against its bound.
inline constexpr double kVelocitySlack = 1e-12;

inline bool check_state(const PathPoint& p, const ConstraintSet& cs, double sdot) {
  if (sdot < 0.0) return false;
  const double vb = velocity_bound(p, cs);
  if (sdot > vb * (1.0 + kVelocitySlack)) return false;
  return !accel_bounds(p, cs, std::min(sdot, vb)).empty();
}

// Largest componentwise torque excess beyond the active bounds at (s, sdot,
// sddot); zero when every torque is inside its limits. Speeds beyond the motor
// envelope count as infinite excess.
inline double torque_excess(const PathPoint& p, const ConstraintSet& cs, double sdot, double sddot) {
  const Vector tau = parametric_torque(p.co, sdot, sddot);
  TorqueBounds tb;
  try {
    tb = cs.torque_at(p.dq * sdot);
  } catch (const InfeasibleSpeedError&) {
    return kInf;
  }
  double excess = 0.0;
  for (int i = 0; i < tau.size(); ++i)
    excess = std::max({excess, tau[i] - tb.tau_max[i], tb.tau_min[i] - tau[i]});
  return excess;
}

}  // namespace phaseplan
