#include "nhrkmk/so3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nhrkmk {

Eigen::Matrix3d rotation_x(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << 1.0, 0.0, 0.0,
       0.0, c, -s,
       0.0, s, c;
  return r;
}

Eigen::Matrix3d rotation_y(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

Eigen::Matrix3d rotation_z(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

GroupElement from_tait_bryan(const Eigen::Vector3d& angles)
{
  return rotation_z(angles(2)) * rotation_y(angles(1)) * rotation_x(angles(0));
}

TaitBryanAngles to_tait_bryan(const GroupElement& g)
{
  // Third row of R_z R_y R_x is (-sin t2, cos t2 sin t1, cos t2 cos t1).
  TaitBryanAngles out;
  const double s2 = std::clamp(-g(2, 0), -1.0, 1.0);
  out.angles(1) = std::asin(s2);
  if (std::abs(out.angles(1)) >= std::numbers::pi / 2 - 1e-3) {
    out.gimbal_lock = true;
    out.angles(0) = std::numeric_limits<double>::quiet_NaN();
    out.angles(2) = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.angles(0) = std::atan2(g(2, 1), g(2, 2));
  out.angles(2) = std::atan2(g(1, 0), g(0, 0));
  return out;
}

}  // namespace nhrkmk
