#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "nhrkmk/experiment.hpp"
#include "nhrkmk/oracle.hpp"
#include "test_support.hpp"

namespace nhrkmk {
namespace {

constexpr double kPi = std::numbers::pi;

GroupElement kepler_g0()
{
  return from_tait_bryan(Eigen::Vector3d(0.940125174120388, -0.693184358892293, 3.007331043590061));
}

TEST(ContinuousRhs, EquilibriumAtPole)
{
  const auto rhs = continuous_rhs(SphericalPendulum{}, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  EXPECT_EQ(rhs.eta_dot, Eigen::Vector3d::Zero());
  EXPECT_EQ(rhs.lambda, 0.0);
}

TEST(ContinuousRhs, MatchesPendulumComponentEquations)
{
  testing::Sampler rng(3);
  for (int i = 0; i < 300; ++i) {
    const double m = rng.uniform(0.5, 2), M = rng.uniform(0.5, 2), alpha = rng.uniform(0.1, 3);
    const SphericalPendulum pendulum(PendulumParams::with_alpha(m, M, alpha));
    const Eigen::Vector3d th(rng.uniform(-kPi, kPi), rng.uniform(-1.5, 1.5), rng.uniform(-kPi, kPi));
    const GroupElement g = from_tait_bryan(th);
    const Eigen::Vector3d eta = rng.horizontal(2.0);
    const auto rhs = continuous_rhs(pendulum, g, eta);
    const double e1 = ((m - M) * eta(2) * eta(1) + alpha * std::sin(th(0)) * std::cos(th(1))) / m;
    const double e2 = (-(m - M) * eta(2) * eta(0) + alpha * std::sin(th(1))) / m;
    EXPECT_NEAR(rhs.eta_dot(0), e1, 1e-13);
    EXPECT_NEAR(rhs.eta_dot(1), e2, 1e-13);
    EXPECT_EQ(rhs.eta_dot(2), 0.0);
    EXPECT_LE(std::abs(rhs.lambda), 1e-15);
  }
}

TEST(ReferenceSolve, EquilibriumIsConstant)
{
  const auto ref = reference_solve(SphericalPendulum{}, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), 2.0, 0.5);
  ASSERT_EQ(ref.samples.size(), 5u);
  for (const auto& s : ref.samples) {
    EXPECT_EQ(s.g, Eigen::Matrix3d::Identity());
    EXPECT_EQ(s.eta, Eigen::Vector3d::Zero());
  }
  EXPECT_DOUBLE_EQ(ref.samples.back().t, 2.0);
}

TEST(ReferenceSolve, UniformRotationWithoutField)
{
  const SphericalPendulum no_field({1.0, 3.0, Eigen::Vector3d::Zero()});
  const GroupElement g0 = from_tait_bryan(Eigen::Vector3d(0.2, 0.4, -0.3));
  const Eigen::Vector3d eta0(0.7, -0.5, 0.0);
  const auto ref = reference_solve(no_field, g0, eta0, 3.0, 0.25);
  for (const auto& s : ref.samples) {
    const GroupElement exact = g0 * tau(RetractionKind::Exponential, Eigen::Vector3d(s.t * eta0));
    EXPECT_LE((s.g - exact).norm(), 1e-12) << s.t;
    EXPECT_LE((s.eta - eta0).norm(), 1e-14);
  }
}

template <typename System>
void expect_conservation(const System& sys, const GroupElement& g0, const Eigen::Vector3d& eta0,
                         double richardson_tol)
{
  ReferenceOptions opt;
  opt.richardson_tol = richardson_tol;
  const auto ref = reference_solve(sys, g0, eta0, 10.0, 0.1, opt);
  const double e0 = sys.energy(g0, eta0);
  double worst_e = 0, worst_phi = 0, worst_orth = 0;
  for (const auto& s : ref.samples) {
    worst_e = std::max(worst_e, std::abs(sys.energy(s.g, s.eta) - e0));
    worst_phi = std::max(worst_phi, std::abs(phi(s.eta)));
    worst_orth = std::max(worst_orth, orthogonality_error(s.g));
  }
  EXPECT_LE(worst_e, 1e-10);
  EXPECT_LE(worst_phi, 1e-10);
  EXPECT_LE(worst_orth, 1e-12);
  EXPECT_LE(ref.richardson_gap, richardson_tol);
}

TEST(ReferenceSolve, ConservesEnergyAndConstraintForPendulum)
{
  expect_conservation(SphericalPendulum{}, from_tait_bryan(Eigen::Vector3d(0, kPi / 3, 0)), Eigen::Vector3d(1.0 / 3, 0, 0), 1e-12);
}

TEST(ReferenceSolve, ConservesEnergyAndConstraintForKepler)
{
  // Close passes to the attractor accumulate roundoff near 1e-10 over ten time units.
  expect_conservation(SphericalKepler{}, kepler_g0(), Eigen::Vector3d(1.534184084268850, 0, 0), 1e-9);
}

TEST(ReferenceSolve, FourthOrderSelfConsistency)
{
  const SphericalPendulum pendulum;
  const GroupElement g0 = from_tait_bryan(Eigen::Vector3d(0, kPi / 3, 0));
  const Eigen::Vector3d eta0(1.0 / 3, 0, 0);
  const int fine = 2048;
  const auto truth = detail::rkmk4_samples(pendulum, g0, eta0, 1, 2.0, fine);
  std::vector<double> h, err;
  for (int n : {8, 16, 32, 64}) {
    const auto run = detail::rkmk4_samples(pendulum, g0, eta0, 1, 2.0, n);
    h.push_back(2.0 / n);
    err.push_back((run.back().g - truth.back().g).norm());
  }
  EXPECT_NEAR(loglog_slope(h, err, 1e-14), 4.0, 0.2);
}

TEST(ReferenceSolve, ReportsUnreachableTolerance)
{
  ReferenceOptions opt;
  opt.h_ref = 0.1;
  opt.min_h_ref = 0.05;
  EXPECT_THROW(reference_solve(SphericalPendulum{}, from_tait_bryan(Eigen::Vector3d(0, 1, 0)),
                               Eigen::Vector3d(0.3, 0, 0), 5.0, 0.1, opt),
               ToleranceNotReached);
}

TEST(ReferenceSolve, RejectsInconsistentInitialData)
{
  EXPECT_THROW(reference_solve(SphericalPendulum{}, Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 0.1), 1.0, 0.1),
               InvalidConfig);
  EXPECT_THROW(reference_solve(SphericalPendulum{}, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), 1.0, 0.0),
               InvalidConfig);
}

TEST(FdCheck, Examples)
{
  testing::Sampler rng(5);
  std::vector<Eigen::Vector3d> xs;
  std::vector<GroupElement> gs;
  for (int i = 0; i < 50; ++i) {
    xs.push_back(rng.vector(2.0));
    gs.push_back(rng.rotation());
  }

  const Eigen::Vector3d a(0.3, -1.2, 2.0);
  std::vector<Eigen::Vector3d> near_origin;
  for (int i = 0; i < 50; ++i) near_origin.push_back(rng.vector(1e-3));
  EXPECT_LE(fd_check_algebra([&](const Eigen::Vector3d& x) { return a.dot(x); },
                             [&](const Eigen::Vector3d&) { return a; }, near_origin),
            1e-12);

  const SphericalPendulum pendulum;
  EXPECT_LE(fd_check_group([&](const GroupElement& g) { return -pendulum.potential_energy(g); },
                           [&](const GroupElement& g) { return pendulum.force(g); }, gs),
            1e-6);

  const SphericalPendulum shaped({1.5, 0.3, {0, 0, -1}});
  EXPECT_LE(fd_check_algebra([&](const Eigen::Vector3d& x) { return shaped.kinetic(x); },
                             [&](const Eigen::Vector3d& x) { return shaped.momentum(x); }, xs),
            1e-8);

  // A wrong gradient is detected.
  EXPECT_GT(fd_check_algebra([&](const Eigen::Vector3d& x) { return a.dot(x); },
                             [&](const Eigen::Vector3d&) { return Eigen::Vector3d(a + Eigen::Vector3d(0, 0, 1e-3)); }, xs),
            1e-4);
}

}  // namespace
}  // namespace nhrkmk
