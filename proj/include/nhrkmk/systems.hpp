#pragma once

#include <cmath>
#include <concepts>
#include <string>

#include <Eigen/Core>

#include "autodiff.hpp"
#include "errors.hpp"
#include "sphere.hpp"

/**
 * Left-trivialized regularized Lagrangians on SO(3),
 *
 *   l(g, eta) = 1/2 eta^T diag(I) eta - U(g),
 *
 * whose fiber Hessian diag(I) is constant and invertible. `force(g)` returns
 * the left-trivialized configuration gradient of l (= -grad U), i.e. the
 * covector f with d/de l(g exp(e zeta), eta)|_0 = <f, zeta>.
 */
namespace nhrkmk {

template <typename S>
concept LagrangianSystem =
    requires(const S& sys, const Eigen::Matrix3d& g, const Eigen::Vector3d& v,
             const Mat3<Dual>& gd, const Vec3<Dual>& vd) {
      { sys.inertia() } -> std::convertible_to<Eigen::Vector3d>;
      { sys.ell(g, v) } -> std::convertible_to<double>;
      { sys.potential_energy(g) } -> std::convertible_to<double>;
      { sys.energy(g, v) } -> std::convertible_to<double>;
      { sys.force(g) } -> std::convertible_to<Eigen::Vector3d>;
      { sys.force(gd) } -> std::convertible_to<Vec3<Dual>>;
      { sys.momentum(v) } -> std::convertible_to<Eigen::Vector3d>;
      { sys.momentum(vd) } -> std::convertible_to<Vec3<Dual>>;
      { sys.momentum_inv(v) } -> std::convertible_to<Eigen::Vector3d>;
      { sys.momentum_inv(vd) } -> std::convertible_to<Vec3<Dual>>;
    };

/// Kinetic part shared by all systems: 1/2 eta^T diag(inertia) eta.
class DiagonalKinetic
{
public:
  explicit DiagonalKinetic(const Eigen::Vector3d& inertia);

  const Eigen::Vector3d& inertia() const { return inertia_; }

  double kinetic(const Eigen::Vector3d& eta) const
  {
    return 0.5 * eta.dot(inertia_.cwiseProduct(eta));
  }

  template <typename Scalar>
  Vec3<Scalar> momentum(const Vec3<Scalar>& eta) const
  {
    return Vec3<Scalar>(inertia_(0) * eta(0), inertia_(1) * eta(1), inertia_(2) * eta(2));
  }

  template <typename Scalar>
  Vec3<Scalar> momentum_inv(const Vec3<Scalar>& p) const
  {
    return Vec3<Scalar>(p(0) / inertia_(0), p(1) / inertia_(1), p(2) / inertia_(2));
  }

private:
  Eigen::Vector3d inertia_;
};

struct PendulumParams
{
  double m = 1.0;
  double M_reg = 1.0;
  Eigen::Vector3d gamma{0.0, 0.0, -1.0};

  static PendulumParams with_alpha(double m, double M_reg, double alpha)
  {
    return {m, M_reg, Eigen::Vector3d(0.0, 0.0, -alpha)};
  }
};

/// Spherical pendulum: l = m/2 |eta x x0|^2 + M/2 (eta . x0)^2 + gamma . (g x0).
class SphericalPendulum : public DiagonalKinetic
{
public:
  explicit SphericalPendulum(const PendulumParams& params = {});

  const PendulumParams& params() const { return params_; }

  double potential_energy(const Eigen::Matrix3d& g) const
  {
    return -params_.gamma.dot(g * origin());
  }

  double ell(const Eigen::Matrix3d& g, const Eigen::Vector3d& eta) const
  {
    return kinetic(eta) - potential_energy(g);
  }

  double energy(const Eigen::Matrix3d& g, const Eigen::Vector3d& eta) const
  {
    return kinetic(eta) + potential_energy(g);
  }

  /// x0 x (g^T gamma)
  template <typename Scalar>
  Vec3<Scalar> force(const Mat3<Scalar>& g) const
  {
    const Vec3<Scalar> local = g.transpose() * params_.gamma.cast<Scalar>();
    return origin<Scalar>().cross(local);
  }

private:
  PendulumParams params_;
};

struct KeplerParams
{
  double m = 1.0;
  double M_reg = 1.0;
  double rho = 1.0;
  // Unit attractor position; the default is (0.437, 0, 0.899) normalized.
  Eigen::Vector3d X = Eigen::Vector3d(0.437, 0.0, 0.899).normalized();
};

/// Spherical Kepler problem: l = m/2 |eta x x0|^2 + M/2 (eta . x0)^2 + rho c / sqrt(1 - c^2)
/// with c = X . (g x0). Throws NearSingularPotential when |c| >= 1 - 1e-10.
class SphericalKepler : public DiagonalKinetic
{
public:
  explicit SphericalKepler(const KeplerParams& params = {});

  const KeplerParams& params() const { return params_; }

  double potential_energy(const Eigen::Matrix3d& g) const
  {
    const double c = alignment(g);
    return -params_.rho * c / std::sqrt(1.0 - c * c);
  }

  double ell(const Eigen::Matrix3d& g, const Eigen::Vector3d& eta) const
  {
    return kinetic(eta) - potential_energy(g);
  }

  double energy(const Eigen::Matrix3d& g, const Eigen::Vector3d& eta) const
  {
    return kinetic(eta) + potential_energy(g);
  }

  template <typename Scalar>
  Vec3<Scalar> force(const Mat3<Scalar>& g) const
  {
    using std::sqrt;
    const Vec3<Scalar> local = g.transpose() * params_.X.cast<Scalar>();
    const Scalar c = local(2);
    guard(value_of(c));
    const Scalar q = 1.0 - c * c;
    return (params_.rho / (q * sqrt(q))) * origin<Scalar>().cross(local);
  }

  /// X . (g x0)
  double alignment(const Eigen::Matrix3d& g) const
  {
    const double c = params_.X.dot(g * origin());
    guard(c);
    return c;
  }

private:
  static void guard(double c)
  {
    if (std::abs(c) >= 1.0 - 1e-10) {
      throw NearSingularPotential("kepler: trajectory reached the attractor or its antipode (c = " +
                                  std::to_string(c) + ")");
    }
  }

  KeplerParams params_;
};

/// Torque-free body with arbitrary principal inertia. No potential.
class FreeRigidBody : public DiagonalKinetic
{
public:
  explicit FreeRigidBody(const Eigen::Vector3d& inertia) : DiagonalKinetic(inertia) {}

  double potential_energy(const Eigen::Matrix3d&) const { return 0.0; }
  double ell(const Eigen::Matrix3d&, const Eigen::Vector3d& eta) const { return kinetic(eta); }
  double energy(const Eigen::Matrix3d&, const Eigen::Vector3d& eta) const { return kinetic(eta); }

  template <typename Scalar>
  Vec3<Scalar> force(const Mat3<Scalar>&) const
  {
    return Vec3<Scalar>::Zero();
  }
};

static_assert(LagrangianSystem<SphericalPendulum>);
static_assert(LagrangianSystem<SphericalKepler>);
static_assert(LagrangianSystem<FreeRigidBody>);

}  // namespace nhrkmk
