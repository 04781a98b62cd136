#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "phaseplan/types.hpp"

namespace phaseplan {

// Joint-space path q(s) on s in [0, 1] with analytic first and second
// derivatives. Concrete shapes are type-erased behind three callables so the
// path can be shared read-only between planners.
class JointPath {
 public:
  using Eval = std::function<Vector(double)>;

  JointPath() = default;
  JointPath(int dof, Eval q, Eval dq, Eval ddq)
      : dof_(dof), q_(std::move(q)), dq_(std::move(dq)), ddq_(std::move(ddq)) {
    if (dof_ <= 0) throw InputError("path dof must be positive");
  }

  int dof() const { return dof_; }

  Vector q(double s) const { return q_(check(s)); }
  Vector dq(double s) const { return dq_(check(s)); }
  Vector ddq(double s) const { return ddq_(check(s)); }

 private:
  static double check(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("path parameter outside [0,1]: " + std::to_string(s));
    return s;
  }

  int dof_ = 0;
  Eval q_, dq_, ddq_;
};

// q' s-dot and q' s-ddot + q'' s-dot^2.
struct JointMotion {
  Vector qdot;
  Vector qddot;
};

inline JointMotion phase_to_joint(const JointPath& path, double s, double sdot, double sddot) {
  if (sdot < 0.0) throw DomainError("pseudo-velocity must be non-negative");
  const Vector dq = path.dq(s);
  const Vector ddq = path.ddq(s);
  return {dq * sdot, dq * sddot + ddq * (sdot * sdot)};
}

// Straight joint-space segment from `start` to `end`.
inline JointPath linear_path(const Vector& start, const Vector& end) {
  if (start.size() != end.size()) throw InputError("linear path endpoints differ in size");
  const Vector delta = end - start;
  const auto n = static_cast<int>(start.size());
  return JointPath(
      n, [start, delta](double s) -> Vector { return start + delta * s; },
      [delta](double) -> Vector { return delta; },
      [n](double) -> Vector { return Vector::Zero(n); });
}

// One segment of a piecewise-polynomial path. Coefficients are ascending
// powers of the local variable u = s - start, one row per joint.
struct PolySegment {
  double start = 0.0;
  double end = 1.0;
  std::vector<std::vector<double>> coeffs;
};

namespace detail {

// Horner evaluation of p(u), p'(u), p''(u).
inline void poly_eval(const std::vector<double>& c, double u, double& p, double& dp, double& ddp) {
  p = dp = ddp = 0.0;
  for (auto i = c.size(); i-- > 0;) {
    ddp = ddp * u + 2.0 * dp;
    dp = dp * u + p;
    p = p * u + c[i];
  }
}

}  // namespace detail

// Piecewise polynomial path. Segments must tile [0, 1] in order.
inline JointPath polynomial_path(std::vector<PolySegment> segments) {
  if (segments.empty()) throw InputError("polynomial path needs at least one segment");
  const auto n = static_cast<int>(segments.front().coeffs.size());
  if (n == 0) throw InputError("polynomial path has no joints");
  constexpr double tol = 1e-12;
  if (std::abs(segments.front().start) > tol || std::abs(segments.back().end - 1.0) > tol)
    throw InputError("polynomial path segments must cover [0,1]");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (!(seg.end > seg.start)) throw InputError("polynomial segment with non-positive length");
    if (static_cast<int>(seg.coeffs.size()) != n) throw InputError("polynomial segment joint count mismatch");
    if (i > 0 && std::abs(seg.start - segments[i - 1].end) > tol)
      throw InputError("polynomial path segments are not contiguous");
    for (const auto& c : seg.coeffs)
      if (c.empty()) throw InputError("polynomial segment has an empty coefficient list");
  }

  auto shared = std::make_shared<const std::vector<PolySegment>>(std::move(segments));
  auto locate = [shared](double s) -> const PolySegment& {
    const auto& segs = *shared;
    for (const auto& seg : segs)
      if (s <= seg.end) return seg;
    return segs.back();
  };
  auto eval = [n, locate](int order) {
    return [n, locate, order](double s) -> Vector {
      const PolySegment& seg = locate(s);
      Vector out(n);
      for (int j = 0; j < n; ++j) {
        double p, dp, ddp;
        detail::poly_eval(seg.coeffs[j], s - seg.start, p, dp, ddp);
        out[j] = order == 0 ? p : (order == 1 ? dp : ddp);
      }
      return out;
    };
  };
  return JointPath(n, eval(0), eval(1), eval(2));
}

// Two-joint path with a smooth but sharp bend in the middle: a drift term
// plus a tanh step on each joint. Used as the default 2-link scenario; the
// step concentrates q' and q'' changes near s = center.
struct BendPathParams {
  Vector offset = (Vector(2) << 0.3, 1.2).finished();
  Vector drift = (Vector(2) << 0.8, -0.4).finished();
  Vector step = (Vector(2) << 0.2, -0.24).finished();
  double center = 0.55;
  double width = 0.02;
};

inline JointPath bend_path(const BendPathParams& p = {}) {
  const auto n = static_cast<int>(p.offset.size());
  if (p.drift.size() != n || p.step.size() != n) throw InputError("bend path parameter size mismatch");
  if (!(p.width > 0.0)) throw InputError("bend width must be positive");
  auto z = [p](double s) { return (s - p.center) / p.width; };
  return JointPath(
      n,
      [p, z](double s) -> Vector {
        return p.offset + p.drift * s + p.step * std::tanh(z(s));
      },
      [p, z](double s) -> Vector {
        const double t = std::tanh(z(s));
        return p.drift + p.step * ((1.0 - t * t) / p.width);
      },
      [p, z](double s) -> Vector {
        const double t = std::tanh(z(s));
        return p.step * (-2.0 * t * (1.0 - t * t) / (p.width * p.width));
      });
}

}  // namespace phaseplan
