#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include <Eigen/Core>

#include "autodiff.hpp"
#include "so3.hpp"

/**
 * Retractions tau: so(3) -> SO(3) and their left-trivialized tangents.
 *
 * Conventions, for xi, eta, zeta in so(3) ~ R^3:
 *
 *   tau(xi)^{-1} d/de tau(xi + e eta)|_0  = hat(dtauL(xi) eta)
 *   ddtauL(xi, eta, zeta)                 = d/de dtauL(xi + e zeta) eta |_0
 *
 * Exponential (Rodrigues), with s = |xi|^2:
 *   exp(xi)       = I + A(s) X + B(s) X^2,             X = hat(xi)
 *   dtauL(xi)     = I - B(s) X + C(s) X^2
 *   dtauL(xi)^-1  = I + X/2 + D(s) X^2
 *
 * Cayley:
 *   cay(xi)       = I + 4/(4+s) (X + X^2/2)
 *   dtauL(xi)     = 2/(4+s) (2I - X)
 *   dtauL(xi)^-1  = I + X/2 + xi xi^T / 4
 */
namespace nhrkmk {

enum class RetractionKind
{
  Exponential,
  Cayley,
};

std::string_view to_string(RetractionKind kind);
RetractionKind parse_retraction(std::string_view name);

namespace detail {

// Coefficient functions of s = theta^2. Below kSeriesThreshold they switch
// to truncated Taylor series in s; the closed forms lose about eps/s relative
// accuracy to cancellation, which is 1e-15 at the threshold.
inline constexpr double kSeriesThreshold = 0.25;

template <typename Scalar, std::size_t N>
Scalar horner(const Scalar& s, const std::array<double, N>& c)
{
  Scalar acc(c[N - 1]);
  for (std::size_t k = N - 1; k-- > 0;) {
    acc = acc * s + Scalar(c[k]);
  }
  return acc;
}

template <typename Scalar, std::size_t N>
Scalar horner_derivative(const Scalar& s, const std::array<double, N>& c)
{
  Scalar acc(static_cast<double>(N - 1) * c[N - 1]);
  for (std::size_t k = N - 1; k-- > 1;) {
    acc = acc * s + Scalar(static_cast<double>(k) * c[k]);
  }
  return acc;
}

// sin(t)/t
inline constexpr std::array<double, 8> kSeriesA = {
    1.0, -1.0 / 6, 1.0 / 120, -1.0 / 5040, 1.0 / 362880, -1.0 / 39916800,
    1.0 / 6227020800.0, -1.0 / 1307674368000.0};
// (1 - cos t)/t^2
inline constexpr std::array<double, 8> kSeriesB = {
    1.0 / 2, -1.0 / 24, 1.0 / 720, -1.0 / 40320, 1.0 / 3628800, -1.0 / 479001600,
    1.0 / 87178291200.0, -1.0 / 20922789888000.0};
// (t - sin t)/t^3
inline constexpr std::array<double, 8> kSeriesC = {
    1.0 / 6, -1.0 / 120, 1.0 / 5040, -1.0 / 362880, 1.0 / 39916800,
    -1.0 / 6227020800.0, 1.0 / 1307674368000.0, -1.0 / 355687428096000.0};
// (1 - (t/2) cot(t/2))/t^2
inline constexpr std::array<double, 8> kSeriesD = {
    1.0 / 12, 1.0 / 720, 1.0 / 30240, 1.0 / 1209600, 1.0 / 47900160,
    691.0 / 1307674368000.0, 1.0 / 74724249600.0, 3617.0 / 10670622842880000.0};

template <typename Scalar>
Scalar coeff_a(const Scalar& s)
{
  using std::sin;
  using std::sqrt;
  if (value_of(s) < kSeriesThreshold) return horner(s, kSeriesA);
  const Scalar t = sqrt(s);
  return sin(t) / t;
}

template <typename Scalar>
Scalar coeff_b(const Scalar& s)
{
  using std::sin;
  using std::sqrt;
  if (value_of(s) < kSeriesThreshold) return horner(s, kSeriesB);
  const Scalar half = sin(sqrt(s) / 2.0);
  return 2.0 * half * half / s;
}

template <typename Scalar>
Scalar coeff_c(const Scalar& s)
{
  using std::sin;
  using std::sqrt;
  if (value_of(s) < kSeriesThreshold) return horner(s, kSeriesC);
  const Scalar t = sqrt(s);
  return (t - sin(t)) / (t * s);
}

template <typename Scalar>
Scalar coeff_d(const Scalar& s)
{
  using std::sqrt;
  using std::tan;
  if (value_of(s) < kSeriesThreshold) return horner(s, kSeriesD);
  const Scalar t = sqrt(s);
  return (1.0 - (t / 2.0) / tan(t / 2.0)) / s;
}

// dB/ds
template <typename Scalar>
Scalar coeff_b_prime(const Scalar& s)
{
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (value_of(s) < kSeriesThreshold) return horner_derivative(s, kSeriesB);
  const Scalar t = sqrt(s);
  return (t * sin(t) - 2.0 * (1.0 - cos(t))) / (2.0 * s * s);
}

// dC/ds
template <typename Scalar>
Scalar coeff_c_prime(const Scalar& s)
{
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (value_of(s) < kSeriesThreshold) return horner_derivative(s, kSeriesC);
  const Scalar t = sqrt(s);
  return (t * (1.0 - cos(t)) - 3.0 * (t - sin(t))) / (2.0 * s * s * t);
}

}  // namespace detail

template <typename Scalar>
Mat3<Scalar> tau(RetractionKind kind, const Vec3<Scalar>& xi)
{
  const Mat3<Scalar> x = hat(xi);
  const Mat3<Scalar> x2 = x * x;
  const Scalar s = xi.squaredNorm();
  Mat3<Scalar> r = Mat3<Scalar>::Identity();
  if (kind == RetractionKind::Exponential) {
    r += detail::coeff_a(s) * x + detail::coeff_b(s) * x2;
  } else {
    r += (4.0 / (4.0 + s)) * (x + 0.5 * x2);
  }
  return r;
}

/// Chart inverse of tau.
/// Exponential: requires rotation angle < pi - 1e-6. Cayley: requires 1 + tr(g) > 1e-10.
/// Throws OutOfInjectivityDomain otherwise.
AlgebraVector tau_inv(RetractionKind kind, const GroupElement& g);

/// Matrix of eta -> dtauL_xi eta.
template <typename Scalar>
Mat3<Scalar> dtauL_matrix(RetractionKind kind, const Vec3<Scalar>& xi)
{
  const Mat3<Scalar> x = hat(xi);
  const Scalar s = xi.squaredNorm();
  if (kind == RetractionKind::Exponential) {
    return Mat3<Scalar>::Identity() - detail::coeff_b(s) * x + detail::coeff_c(s) * (x * x);
  }
  return (2.0 / (4.0 + s)) * (2.0 * Mat3<Scalar>::Identity() - x);
}

template <typename Scalar>
Mat3<Scalar> dtauL_inv_matrix(RetractionKind kind, const Vec3<Scalar>& xi)
{
  const Mat3<Scalar> x = hat(xi);
  if (kind == RetractionKind::Exponential) {
    return Mat3<Scalar>::Identity() + 0.5 * x + detail::coeff_d(xi.squaredNorm()) * (x * x);
  }
  return Mat3<Scalar>::Identity() + 0.5 * x + 0.25 * (xi * xi.transpose());
}

/// Jacobian of xi -> dtauL_xi eta, i.e. the matrix of zeta -> ddtauL_xi(eta, zeta).
template <typename Scalar>
Mat3<Scalar> ddtauL_matrix(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& eta)
{
  const Scalar s = xi.squaredNorm();
  const Vec3<Scalar> xe = xi.cross(eta);
  if (kind == RetractionKind::Exponential) {
    const Scalar b = detail::coeff_b(s);
    const Scalar c = detail::coeff_c(s);
    const Scalar bp = detail::coeff_b_prime(s);
    const Scalar cp = detail::coeff_c_prime(s);
    const Vec3<Scalar> xxe = xi.cross(xe);
    return (2.0 * cp) * xxe * xi.transpose() - (2.0 * bp) * xe * xi.transpose() + b * hat(eta) -
           c * (hat(xe) + hat(xi) * hat(eta));
  }
  const Scalar k = 2.0 / (4.0 + s);
  const Scalar kp = -2.0 / ((4.0 + s) * (4.0 + s));
  return (2.0 * kp) * (2.0 * eta - xe) * xi.transpose() + k * hat(eta);
}

template <typename Scalar>
Vec3<Scalar> dtauL(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& eta)
{
  return dtauL_matrix(kind, xi) * eta;
}

template <typename Scalar>
Vec3<Scalar> dtauL_inv(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& eta)
{
  return dtauL_inv_matrix(kind, xi) * eta;
}

template <typename Scalar>
Vec3<Scalar> ddtauL(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& eta,
                    const Vec3<Scalar>& zeta)
{
  return ddtauL_matrix(kind, xi, eta) * zeta;
}

template <typename Scalar>
Vec3<Scalar> dtauL_dual(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& p)
{
  return dtauL_matrix(kind, xi).transpose() * p;
}

template <typename Scalar>
Vec3<Scalar> dtauL_inv_dual(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& p)
{
  return dtauL_inv_matrix(kind, xi).transpose() * p;
}

/// The covector zeta -> <p, ddtauL_xi(eta, zeta)>.
template <typename Scalar>
Vec3<Scalar> ddtauL_dual(RetractionKind kind, const Vec3<Scalar>& xi, const Vec3<Scalar>& eta,
                         const Vec3<Scalar>& p)
{
  return ddtauL_matrix(kind, xi, eta).transpose() * p;
}

}  // namespace nhrkmk
