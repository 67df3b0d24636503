#include "nhrkmk/systems.hpp"

namespace nhrkmk {

DiagonalKinetic::DiagonalKinetic(const Eigen::Vector3d& inertia) : inertia_(inertia)
{
  if (!(inertia_.array() != 0.0).all() || !inertia_.allFinite()) {
    throw InvalidConfig("fiber Hessian must be invertible (nonzero finite inertia)");
  }
}

SphericalPendulum::SphericalPendulum(const PendulumParams& params)
    : DiagonalKinetic(Eigen::Vector3d(params.m, params.m, params.M_reg)), params_(params)
{
  if (!(params.m > 0.0)) throw InvalidConfig("pendulum: m must be positive");
}

SphericalKepler::SphericalKepler(const KeplerParams& params)
    : DiagonalKinetic(Eigen::Vector3d(params.m, params.m, params.M_reg)), params_(params)
{
  if (!(params.m > 0.0)) throw InvalidConfig("kepler: m must be positive");
  if (std::abs(params.X.norm() - 1.0) > 1e-12) {
    throw InvalidConfig("kepler: attractor X must be a unit vector");
  }
}

}  // namespace nhrkmk
