#pragma once

#include <cmath>

#include <Eigen/Core>

#include "autodiff.hpp"
#include "errors.hpp"

/**
 * Algebra of SO(3) under the R^3 identification.
 *
 * so(3) and so(3)* are both stored as column vectors. The pairing between
 * them is the Euclidean dot product, so Ad_g v = g v and Ad*_g p = g^T p.
 * Every function is a template over the scalar so the stage solver can
 * differentiate through it.
 */
namespace nhrkmk {

using GroupElement = Eigen::Matrix3d;
using AlgebraVector = Eigen::Vector3d;
using CoalgebraVector = Eigen::Vector3d;

template <typename Scalar>
Mat3<Scalar> hat(const Vec3<Scalar>& v)
{
  Mat3<Scalar> m;
  m << Scalar(0), -v(2), v(1),
       v(2), Scalar(0), -v(0),
       -v(1), v(0), Scalar(0);
  return m;
}

/// Inverse of hat. Throws NonSkewInput if ||m + m^T||_F > 1e-10.
template <typename Scalar>
Vec3<Scalar> vee(const Mat3<Scalar>& m)
{
  double asym = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double e = value_of(m(i, j)) + value_of(m(j, i));
      asym += e * e;
    }
  }
  if (asym > 1e-20) {
    throw NonSkewInput("vee: matrix is not skew-symmetric");
  }
  return Vec3<Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

/// Ad_g v
template <typename Scalar>
Vec3<Scalar> adjoint(const Mat3<Scalar>& g, const Vec3<Scalar>& v)
{
  return g * v;
}

/// Ad*_g p, the dual of Ad_g under the Euclidean pairing.
template <typename Scalar>
Vec3<Scalar> coadjoint(const Mat3<Scalar>& g, const Vec3<Scalar>& p)
{
  return g.transpose() * p;
}

/// ad*_xi p = p x xi
template <typename Scalar>
Vec3<Scalar> coad(const Vec3<Scalar>& xi, const Vec3<Scalar>& p)
{
  return p.cross(xi);
}

/// ||g^T g - I||_F
inline double orthogonality_error(const GroupElement& g)
{
  return (g.transpose() * g - Eigen::Matrix3d::Identity()).norm();
}

inline bool is_rotation(const GroupElement& g, double tol = 1e-12)
{
  return orthogonality_error(g) <= tol && std::abs(g.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d rotation_x(double angle);
Eigen::Matrix3d rotation_y(double angle);
Eigen::Matrix3d rotation_z(double angle);

/// R_z(theta3) R_y(theta2) R_x(theta1) for angles = (theta1, theta2, theta3).
GroupElement from_tait_bryan(const Eigen::Vector3d& angles);

struct TaitBryanAngles
{
  Eigen::Vector3d angles;
  // |theta2| within 1e-3 of pi/2; theta1 and theta3 are NaN.
  bool gimbal_lock = false;
};

TaitBryanAngles to_tait_bryan(const GroupElement& g);

}  // namespace nhrkmk
