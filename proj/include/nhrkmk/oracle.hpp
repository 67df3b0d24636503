#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"
#include "retraction.hpp"
#include "so3.hpp"
#include "sphere.hpp"
#include "systems.hpp"

/**
 * Reference solutions of the continuous constrained Euler-Poincare equations
 *
 *   d/dt mu = mu x eta + force(g) + lambda x0,   mu = diag(I) eta,
 *   g'      = g hat(eta),                        eta . x0 = 0,
 *
 * with lambda eliminated from the x0-row, integrated by RKMK4 with the
 * exponential map. Used as ground truth for convergence tests.
 */
namespace nhrkmk {

struct ContinuousState
{
  double t = 0.0;
  GroupElement g = GroupElement::Identity();
  AlgebraVector eta = AlgebraVector::Zero();
  double lambda = 0.0;
};

struct ContinuousRhs
{
  AlgebraVector eta_dot;
  double lambda;
};

template <LagrangianSystem System>
ContinuousRhs continuous_rhs(const System& sys, const GroupElement& g, const AlgebraVector& eta)
{
  Eigen::Vector3d w = coad(eta, sys.momentum(eta)) + sys.force(g);
  const double lambda = -phi(w);
  w += lambda * origin();
  return {sys.momentum_inv(w), lambda};
}

struct ReferenceOptions
{
  double h_ref = 1e-3;
  // Max gap between the h_ref and h_ref/2 solutions over all samples.
  double richardson_tol = 1e-12;
  double min_h_ref = 1e-6;
};

struct ReferenceTrajectory
{
  std::vector<ContinuousState> samples;
  double h_ref = 0.0;
  double richardson_gap = 0.0;
};

namespace detail {

template <LagrangianSystem System>
std::vector<ContinuousState> rkmk4_samples(const System& sys, const GroupElement& g0,
                                           const AlgebraVector& eta0, int sample_count,
                                           double sample_dt, int substeps)
{
  constexpr auto kExp = RetractionKind::Exponential;
  const double h = sample_dt / substeps;
  std::vector<ContinuousState> out;
  out.reserve(sample_count + 1);
  GroupElement g = g0;
  Eigen::Vector3d eta = eta0;
  out.push_back({0.0, g, eta, continuous_rhs(sys, g, eta).lambda});

  struct Slope
  {
    Eigen::Vector3d u_dot, eta_dot;
  };
  const auto field = [&](const GroupElement& base, const Eigen::Vector3d& u,
                         const Eigen::Vector3d& v) -> Slope {
    const GroupElement G = base * tau(kExp, u);
    return {dtauL_inv(kExp, u, v), continuous_rhs(sys, G, v).eta_dot};
  };

  for (int k = 1; k <= sample_count; ++k) {
    for (int n = 0; n < substeps; ++n) {
      const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
      const Slope k1 = field(g, zero, eta);
      const Slope k2 = field(g, 0.5 * h * k1.u_dot, eta + 0.5 * h * k1.eta_dot);
      const Slope k3 = field(g, 0.5 * h * k2.u_dot, eta + 0.5 * h * k2.eta_dot);
      const Slope k4 = field(g, h * k3.u_dot, eta + h * k3.eta_dot);
      const Eigen::Vector3d u = (h / 6.0) * (k1.u_dot + 2.0 * k2.u_dot + 2.0 * k3.u_dot + k4.u_dot);
      eta += (h / 6.0) * (k1.eta_dot + 2.0 * k2.eta_dot + 2.0 * k3.eta_dot + k4.eta_dot);
      g = g * tau(kExp, u);
    }
    out.push_back({k * sample_dt, g, eta, continuous_rhs(sys, g, eta).lambda});
  }
  return out;
}

}  // namespace detail

/**
 * Reference trajectory sampled at t = k * sample_dt, k = 0..round(t_end / sample_dt).
 *
 * The substep starts at options.h_ref (rounded down to divide sample_dt) and is
 * halved until the solutions at h and h/2 agree to richardson_tol in g and eta
 * at every sample; the finer one is returned. Throws ToleranceNotReached when
 * the substep would fall below min_h_ref.
 */
template <LagrangianSystem System>
ReferenceTrajectory reference_solve(const System& sys, const GroupElement& g0,
                                    const AlgebraVector& eta0, double t_end, double sample_dt,
                                    const ReferenceOptions& options = {})
{
  if (!(sample_dt > 0.0) || !(t_end >= 0.0)) throw InvalidConfig("reference_solve: bad time grid");
  if (std::abs(phi(eta0)) > 1e-12) {
    throw InvalidConfig("reference_solve: initial velocity violates the constraint");
  }
  const int samples = static_cast<int>(std::lround(t_end / sample_dt));
  int substeps = std::max(1, static_cast<int>(std::ceil(sample_dt / options.h_ref - 1e-9)));

  std::vector<ContinuousState> coarse = detail::rkmk4_samples(sys, g0, eta0, samples, sample_dt, substeps);
  double gap = 0.0;
  while (sample_dt / (2 * substeps) >= options.min_h_ref) {
    std::vector<ContinuousState> fine =
        detail::rkmk4_samples(sys, g0, eta0, samples, sample_dt, 2 * substeps);
    gap = 0.0;
    for (std::size_t k = 0; k < fine.size(); ++k) {
      gap = std::max(gap, (fine[k].g - coarse[k].g).norm());
      gap = std::max(gap, (fine[k].eta - coarse[k].eta).norm());
    }
    substeps *= 2;
    if (gap <= options.richardson_tol) {
      return {std::move(fine), sample_dt / substeps, gap};
    }
    coarse = std::move(fine);
  }
  char msg[96];
  std::snprintf(msg, sizeof msg, "reference_solve: Richardson gap %.3e above tolerance at the smallest substep", gap);
  throw ToleranceNotReached(msg);
}

/// Max |grad(x) . e_k - central difference| over points x in so(3) and basis directions e_k.
template <typename F, typename Grad>
double fd_check_algebra(const F& f, const Grad& grad, const std::vector<Eigen::Vector3d>& points,
                        double eps = 1e-6)
{
  double worst = 0.0;
  for (const auto& x : points) {
    const Eigen::Vector3d g = grad(x);
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
      const double fd = (f(Eigen::Vector3d(x + eps * e)) - f(Eigen::Vector3d(x - eps * e))) / (2 * eps);
      worst = std::max(worst, std::abs(g(k) - fd));
    }
  }
  return worst;
}

/// Same check for a scalar field on SO(3) against its left-trivialized gradient,
/// differencing along g exp(+-eps e_k).
template <typename F, typename Grad>
double fd_check_group(const F& f, const Grad& grad, const std::vector<GroupElement>& points,
                      double eps = 1e-6)
{
  constexpr auto kExp = RetractionKind::Exponential;
  double worst = 0.0;
  for (const auto& g : points) {
    const Eigen::Vector3d gr = grad(g);
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
      const GroupElement gp = g * tau(kExp, Eigen::Vector3d(eps * e));
      const GroupElement gm = g * tau(kExp, Eigen::Vector3d(-eps * e));
      const double fd = (f(gp) - f(gm)) / (2 * eps);
      worst = std::max(worst, std::abs(gr(k) - fd));
    }
  }
  return worst;
}

}  // namespace nhrkmk
