#include "nhrkmk/retraction.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace nhrkmk {

std::string_view to_string(RetractionKind kind)
{
  return kind == RetractionKind::Exponential ? "exp" : "cay";
}

RetractionKind parse_retraction(std::string_view name)
{
  if (name == "exp" || name == "exponential") return RetractionKind::Exponential;
  if (name == "cay" || name == "cayley") return RetractionKind::Cayley;
  throw InvalidConfig("unknown retraction '" + std::string(name) + "' (expected exp|cay)");
}

namespace {

AlgebraVector log_so3(const GroupElement& g)
{
  // w = sin(theta) n, cos(theta) from the trace.
  const Eigen::Vector3d w(0.5 * (g(2, 1) - g(1, 2)), 0.5 * (g(0, 2) - g(2, 0)),
                          0.5 * (g(1, 0) - g(0, 1)));
  const double c = 0.5 * (g.trace() - 1.0);
  const double sn = w.norm();
  const double theta = std::atan2(sn, c);
  if (theta > std::numbers::pi - 1e-6) {
    throw OutOfInjectivityDomain("tau_inv(exp): rotation angle " + std::to_string(theta) +
                                 " too close to pi; reduce the step size");
  }
  if (c > 0.0) {
    // theta / sin(theta) = 1 / A(theta^2)
    return w / detail::coeff_a(theta * theta);
  }
  // Near pi the skew part is small; read the axis off the symmetric part,
  // (g + g^T)/2 - c I = (1 - c) n n^T.
  const Eigen::Matrix3d sym = 0.5 * (g + g.transpose()) - c * Eigen::Matrix3d::Identity();
  Eigen::Index k = 0;
  sym.diagonal().maxCoeff(&k);
  Eigen::Vector3d n = sym.col(k) / std::sqrt((1.0 - c) * sym(k, k));
  if (n.dot(w) < 0.0) n = -n;
  return theta * n;
}

AlgebraVector cay_inv(const GroupElement& g)
{
  const double denom = 1.0 + g.trace();
  if (denom <= 1e-10) {
    throw OutOfInjectivityDomain("tau_inv(cay): 1 + tr(g) = " + std::to_string(denom) +
                                 " outside the Cayley chart; reduce the step size");
  }
  const Eigen::Vector3d skew(g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1));
  return 2.0 * skew / denom;
}

}  // namespace

AlgebraVector tau_inv(RetractionKind kind, const GroupElement& g)
{
  return kind == RetractionKind::Exponential ? log_so3(g) : cay_inv(g);
}

}  // namespace nhrkmk
