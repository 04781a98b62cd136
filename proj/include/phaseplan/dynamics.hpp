#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "phaseplan/path.hpp"
#include "phaseplan/types.hpp"

namespace phaseplan {

// Number of unordered joint pairs, the length of the [qdot qdot] vector.
inline int pair_count(int dof) { return dof * (dof - 1) / 2; }

// [x1 x2, x1 x3, ..., x_{n-1} x_n]
inline Vector pairwise_products(const Vector& x) {
  const auto n = static_cast<int>(x.size());
  Vector out(pair_count(n));
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out[idx++] = x[i] * x[j];
  return out;
}

// Rigid-body model
//   tau = M(q) qdd + B(q)[qd qd] + C(q)[qd^2] + Fv qd + Fc sgn(qd) + G(q)
// B is n x n(n-1)/2 (Coriolis, acting on pairwise products) and C is n x n
// (centrifugal, acting on squares).
struct DynamicsModel {
  using MatrixFn = std::function<Matrix(const Vector&)>;
  using VectorFn = std::function<Vector(const Vector&)>;

  int dof = 0;
  MatrixFn mass;
  MatrixFn coriolis;
  MatrixFn centrifugal;
  Vector viscous;
  Vector coulomb;
  VectorFn gravity;

  void validate() const {
    if (dof <= 0) throw InputError("model dof must be positive");
    if (!mass || !coriolis || !centrifugal || !gravity) throw InputError("model has unset terms");
    if (viscous.size() != dof || coulomb.size() != dof) throw InputError("friction vectors must have length dof");
  }
};

inline Vector joint_torque(const DynamicsModel& model, const Vector& q, const Vector& qdot, const Vector& qddot) {
  const int n = model.dof;
  if (q.size() != n || qdot.size() != n || qddot.size() != n)
    throw InputError("joint_torque: vector length does not match dof");
  Vector tau = model.mass(q) * qddot + model.centrifugal(q) * qdot.cwiseAbs2() +
               model.viscous.cwiseProduct(qdot) + model.gravity(q);
  if (n > 1) tau += model.coriolis(q) * pairwise_products(qdot);
  for (int i = 0; i < n; ++i) tau[i] += model.coulomb[i] * sgn(qdot[i]);
  return tau;
}

// tau(s) = m sdd + c sd^2 + f sd + g
struct ParamCoefficients {
  Vector m, c, f, g;
};

inline Vector parametric_torque(const ParamCoefficients& co, double sdot, double sddot) {
  if (sdot < 0.0) throw DomainError("pseudo-velocity must be non-negative");
  return co.m * sddot + co.c * (sdot * sdot) + co.f * sdot + co.g;
}

// Coefficients from the joint-space terms evaluated along the path:
//   m = M q', c = M q'' + B[q'q'] + C[q'^2], f = Fv q', g = Fc sgn(q') + G.
inline ParamCoefficients project_coefficients(const DynamicsModel& model, const Vector& q, const Vector& dq,
                                              const Vector& ddq) {
  const int n = model.dof;
  if (q.size() != n || dq.size() != n || ddq.size() != n)
    throw InputError("project_coefficients: vector length does not match dof");
  const Matrix mass = model.mass(q);
  ParamCoefficients co;
  co.m = mass * dq;
  co.c = mass * ddq + model.centrifugal(q) * dq.cwiseAbs2();
  if (n > 1) co.c += model.coriolis(q) * pairwise_products(dq);
  co.f = model.viscous.cwiseProduct(dq);
  co.g = model.gravity(q);
  for (int i = 0; i < n; ++i) co.g[i] += model.coulomb[i] * sgn(dq[i]);
  return co;
}

inline ParamCoefficients project_coefficients(const DynamicsModel& model, const JointPath& path, double s) {
  return project_coefficients(model, path.q(s), path.dq(s), path.ddq(s));
}

// ---------------------------------------------------------------------------
// Built-in model families

// Single prismatic/revolute axis with constant inertia and a constant
// gravity load.
inline DynamicsModel point_mass_model(double mass, double viscous = 0.0, double coulomb = 0.0,
                                      double gravity_load = 0.0) {
  if (!(mass > 0.0)) throw InputError("point mass must be positive");
  DynamicsModel m;
  m.dof = 1;
  m.mass = [mass](const Vector&) -> Matrix { return Matrix::Constant(1, 1, mass); };
  m.coriolis = [](const Vector&) -> Matrix { return Matrix::Zero(1, 0); };
  m.centrifugal = [](const Vector&) -> Matrix { return Matrix::Zero(1, 1); };
  m.viscous = Vector::Constant(1, viscous);
  m.coulomb = Vector::Constant(1, coulomb);
  m.gravity = [gravity_load](const Vector&) -> Vector { return Vector::Constant(1, gravity_load); };
  return m;
}

// Constant-matrix model: every term independent of q.
inline DynamicsModel constant_model(const Matrix& mass, const Matrix& coriolis, const Matrix& centrifugal,
                                    const Vector& viscous, const Vector& coulomb, const Vector& gravity) {
  const auto n = static_cast<int>(mass.rows());
  if (mass.cols() != n || centrifugal.rows() != n || centrifugal.cols() != n || gravity.size() != n ||
      coriolis.rows() != n || coriolis.cols() != pair_count(n))
    throw InputError("constant model matrix shapes are inconsistent");
  DynamicsModel m;
  m.dof = n;
  m.mass = [mass](const Vector&) -> Matrix { return mass; };
  m.coriolis = [coriolis](const Vector&) -> Matrix { return coriolis; };
  m.centrifugal = [centrifugal](const Vector&) -> Matrix { return centrifugal; };
  m.viscous = viscous;
  m.coulomb = coulomb;
  m.gravity = [gravity](const Vector&) -> Vector { return gravity; };
  m.validate();
  return m;
}

// Link of a planar revolute chain. Angles are relative, measured from the
// previous link; gravity acts along -y with the base x axis horizontal.
struct PlanarLink {
  double length = 1.0;
  double mass = 1.0;
  double com = 0.5;      // distance from the proximal joint to the centre of mass
  double inertia = 0.0;  // about the centre of mass, perpendicular to the plane
};

// Closed-form two-link planar arm.
inline DynamicsModel planar_two_link_model(const PlanarLink& l1, const PlanarLink& l2, double g,
                                           const Vector& viscous = Vector::Zero(2),
                                           const Vector& coulomb = Vector::Zero(2)) {
  DynamicsModel m;
  m.dof = 2;
  const double a = l1.mass * l1.com * l1.com + l2.mass * (l1.length * l1.length + l2.com * l2.com) + l1.inertia +
                   l2.inertia;
  const double b = l2.mass * l1.length * l2.com;
  const double d = l2.mass * l2.com * l2.com + l2.inertia;
  m.mass = [a, b, d](const Vector& q) -> Matrix {
    const double c2 = std::cos(q[1]);
    Matrix M(2, 2);
    M << a + 2.0 * b * c2, d + b * c2, d + b * c2, d;
    return M;
  };
  m.coriolis = [b](const Vector& q) -> Matrix {
    Matrix B(2, 1);
    B << -2.0 * b * std::sin(q[1]), 0.0;
    return B;
  };
  m.centrifugal = [b](const Vector& q) -> Matrix {
    const double h = -b * std::sin(q[1]);
    Matrix C(2, 2);
    C << 0.0, h, -h, 0.0;
    return C;
  };
  m.viscous = viscous;
  m.coulomb = coulomb;
  const double g1 = (l1.mass * l1.com + l2.mass * l1.length) * g;
  const double g2 = l2.mass * l2.com * g;
  m.gravity = [g1, g2](const Vector& q) -> Vector {
    const double c12 = std::cos(q[0] + q[1]);
    return (Vector(2) << g1 * std::cos(q[0]) + g2 * c12, g2 * c12).finished();
  };
  m.validate();
  return m;
}

// General n-link planar chain. The mass matrix is assembled from link
// Jacobians; Coriolis and centrifugal matrices come from the Christoffel
// symbols of M, whose partial derivatives are available in closed form
// because every link position is a sum of rotated constant vectors.
namespace detail {

struct ChainTerms {
  Matrix mass;
  std::vector<Matrix> dmass;  // dM/dq_k
  Vector gravity;
};

inline ChainTerms chain_terms(const std::vector<PlanarLink>& links, double g, const Vector& q, bool need_dmass) {
  const auto n = static_cast<int>(links.size());
  Vector theta(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) theta[i] = acc += q[i];

  ChainTerms out;
  out.mass = Matrix::Zero(n, n);
  out.gravity = Vector::Zero(n);
  if (need_dmass) out.dmass.assign(n, Matrix::Zero(n, n));

  for (int i = 0; i < n; ++i) {
    // Lever arms of link i's centre of mass, one per upstream link.
    auto lever = [&](int j) { return j < i ? links[j].length : links[i].com; };
    // Jacobian of the COM position (2 x n): column k sums over links j >= k.
    Matrix J = Matrix::Zero(2, n);
    for (int k = 0; k <= i; ++k)
      for (int j = k; j <= i; ++j) {
        J(0, k) -= lever(j) * std::sin(theta[j]);
        J(1, k) += lever(j) * std::cos(theta[j]);
      }
    const double mi = links[i].mass;
    out.mass += mi * J.transpose() * J;
    // Angular velocity of link i is the sum of qdot_0..qdot_i.
    for (int a = 0; a <= i; ++a)
      for (int b = 0; b <= i; ++b) out.mass(a, b) += links[i].inertia;
    // dV/dq_k = m g d(y_com)/dq_k
    for (int k = 0; k <= i; ++k) out.gravity[k] += mi * g * J(1, k);

    if (!need_dmass) continue;
    for (int l = 0; l < n; ++l) {
      // H = dJ/dq_l: column k sums over links j >= max(k, l).
      Matrix H = Matrix::Zero(2, n);
      if (l <= i) {
        for (int k = 0; k <= i; ++k)
          for (int j = std::max(k, l); j <= i; ++j) {
            H(0, k) -= lever(j) * std::cos(theta[j]);
            H(1, k) -= lever(j) * std::sin(theta[j]);
          }
      }
      out.dmass[l] += mi * (H.transpose() * J + J.transpose() * H);
    }
  }
  return out;
}

// Christoffel symbols c_ijk = (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) / 2.
inline double christoffel(const std::vector<Matrix>& dm, int i, int j, int k) {
  return 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k));
}

}  // namespace detail

inline DynamicsModel planar_chain_model(std::vector<PlanarLink> links, double g, const Vector& viscous,
                                        const Vector& coulomb) {
  const auto n = static_cast<int>(links.size());
  if (n == 0) throw InputError("planar chain needs at least one link");
  auto shared = std::make_shared<const std::vector<PlanarLink>>(std::move(links));
  DynamicsModel m;
  m.dof = n;
  m.mass = [shared, g](const Vector& q) -> Matrix { return detail::chain_terms(*shared, g, q, false).mass; };
  m.gravity = [shared, g](const Vector& q) -> Vector { return detail::chain_terms(*shared, g, q, false).gravity; };
  m.centrifugal = [shared, g, n](const Vector& q) -> Matrix {
    const auto t = detail::chain_terms(*shared, g, q, true);
    Matrix C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = detail::christoffel(t.dmass, i, j, j);
    return C;
  };
  m.coriolis = [shared, g, n](const Vector& q) -> Matrix {
    const auto t = detail::chain_terms(*shared, g, q, true);
    Matrix B(n, pair_count(n));
    for (int i = 0; i < n; ++i) {
      int idx = 0;
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) B(i, idx++) = 2.0 * detail::christoffel(t.dmass, i, j, k);
    }
    return B;
  };
  m.viscous = viscous;
  m.coulomb = coulomb;
  m.validate();
  return m;
}

// Numerical check that M(q) is symmetric positive definite and all model
// terms are finite along the path, at `samples` uniform values of s.
inline void validate_model_on_path(const DynamicsModel& model, const JointPath& path, int samples = 64) {
  model.validate();
  if (path.dof() != model.dof) throw InputError("path and model dof differ");
  for (int i = 0; i < samples; ++i) {
    const double s = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    const Vector q = path.q(s);
    const Matrix M = model.mass(q);
    if (!M.allFinite() || !model.gravity(q).allFinite() || !model.centrifugal(q).allFinite())
      throw InputError("model produced non-finite terms at s=" + std::to_string(s));
    if ((M - M.transpose()).norm() > 1e-9 * (1.0 + M.norm()))
      throw InputError("mass matrix is not symmetric at s=" + std::to_string(s));
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) throw InputError("mass matrix is not positive definite at s=" + std::to_string(s));
  }
}

}  // namespace phaseplan
