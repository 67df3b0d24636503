#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <unsupported/Eigen/AutoDiff>

namespace nhrkmk {

/// Largest implicit system handled by the stage solver: 4 stages x (3 velocities + 1 multiplier).
inline constexpr int kMaxUnknowns = 16;

using DerivativeVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxUnknowns, 1>;
using Dual = Eigen::AutoDiffScalar<DerivativeVector>;

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline double value_of(double x) { return x; }

template <typename DerType>
double value_of(const Eigen::AutoDiffScalar<DerType>& x)
{
  return x.value();
}

}  // namespace nhrkmk
