#pragma once

#include <Eigen/Core>

#include "autodiff.hpp"
#include "so3.hpp"

/**
 * S^2 as the homogeneous space SO(3)/SO(2).
 *
 * The origin is the north pole x0 = (0, 0, 1). The isotropy algebra h is
 * span{x0} and its Euclidean complement m = {eta : eta . x0 = 0} carries the
 * physical velocities. The reduced nonholonomic constraint is phi(eta) = eta_3.
 */
namespace nhrkmk {

using SpherePoint = Eigen::Vector3d;

template <typename Scalar = double>
Vec3<Scalar> origin()
{
  return Vec3<Scalar>(Scalar(0), Scalar(0), Scalar(1));
}

/// sigma(g, x) = g x
template <typename Scalar>
Vec3<Scalar> act(const Mat3<Scalar>& g, const Vec3<Scalar>& x)
{
  return g * x;
}

/// D1 sigma_(e, x)(eta) = eta x x
template <typename Scalar>
Vec3<Scalar> inf_action(const Vec3<Scalar>& eta, const Vec3<Scalar>& x)
{
  return eta.cross(x);
}

template <typename Scalar>
Scalar phi(const Vec3<Scalar>& eta)
{
  return eta(2);
}

/// D phi, constant because phi is linear.
inline Eigen::Vector3d phi_gradient() { return origin(); }

template <typename Scalar>
Vec3<Scalar> project_m(const Vec3<Scalar>& eta)
{
  return Vec3<Scalar>(eta(0), eta(1), Scalar(0));
}

template <typename Scalar>
Vec3<Scalar> project_h(const Vec3<Scalar>& eta)
{
  return Vec3<Scalar>(Scalar(0), Scalar(0), eta(2));
}

}  // namespace nhrkmk
