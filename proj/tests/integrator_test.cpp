#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "nhrkmk/experiment.hpp"
#include "nhrkmk/integrator.hpp"
#include "nhrkmk/oracle.hpp"
#include "test_support.hpp"

namespace nhrkmk {
namespace {

constexpr double kPi = std::numbers::pi;

// Constant force with a component along x0, to exercise the multiplier formula.
class TiltedForceSystem : public DiagonalKinetic
{
public:
  explicit TiltedForceSystem(const Eigen::Vector3d& f) : DiagonalKinetic(Eigen::Vector3d(1, 1, 1)), f_(f) {}

  double potential_energy(const Eigen::Matrix3d&) const { return 0.0; }
  double ell(const Eigen::Matrix3d&, const Eigen::Vector3d& eta) const { return kinetic(eta); }
  double energy(const Eigen::Matrix3d&, const Eigen::Vector3d& eta) const { return kinetic(eta); }

  template <typename Scalar>
  Vec3<Scalar> force(const Mat3<Scalar>&) const
  {
    return f_.cast<Scalar>();
  }

private:
  Eigen::Vector3d f_;
};

GroupElement pendulum_g0() { return from_tait_bryan(Eigen::Vector3d(0, kPi / 3, 0)); }
Eigen::Vector3d pendulum_eta0() { return Eigen::Vector3d(1.0 / 3, 0, 0); }

SolverConfig with_retraction(RetractionKind kind)
{
  SolverConfig c;
  c.retraction = kind;
  return c;
}

struct Case
{
  int stages;
  RetractionKind kind;
  Closure closure;
};

std::string case_name(const ::testing::TestParamInfo<Case>& info)
{
  std::string n = "s" + std::to_string(info.param.stages) + "_" + std::string(to_string(info.param.kind)) + "_" +
                  std::string(to_string(info.param.closure));
  for (char& ch : n) {
    if (ch == '-') ch = '_';
  }
  return n;
}

class Trajectory : public ::testing::TestWithParam<Case>
{
};

std::vector<Case> all_cases()
{
  std::vector<Case> out;
  for (int s : {2, 3, 4}) {
    for (auto kind : {RetractionKind::Cayley, RetractionKind::Exponential}) {
      for (auto closure : {Closure::Concatenation, Closure::ZeroFirst, Closure::WeightedZeroSum}) {
        out.push_back({s, kind, closure});
      }
    }
  }
  return out;
}

INSTANTIATE_TEST_SUITE_P(Pendulum, Trajectory, ::testing::ValuesIn(all_cases()), case_name);

TEST_P(Trajectory, StructuralInvariantsHoldOnEveryStep)
{
  const auto [s, kind, closure] = GetParam();
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(s), 0.1, with_retraction(kind));
  const ButcherTableau tab = lobatto(s);
  StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0());
  for (int k = 0; k < 100; ++k) {
    const StepResult r = integrator.step(x, closure);
    const auto& st = r.stages.stages;
    ASSERT_EQ(static_cast<int>(st.size()), s);
    EXPECT_EQ(st.front().xi, Eigen::Vector3d::Zero());
    EXPECT_EQ(st.front().G, x.g);
    EXPECT_EQ(st.back().G, r.state.g);
    EXPECT_LE((st.back().xi - tau_inv(kind, Eigen::Matrix3d(x.g.transpose() * r.state.g))).norm(), 1e-12);
    EXPECT_LE((st.front().M0 - x.mu).norm(), 1e-12);
    EXPECT_LE((st.back().M0 - r.state.mu).norm(), 1e-12);
    EXPECT_LE(r.stages.constraint_max, 10 * integrator.config().newton_tol);
    EXPECT_LE(r.stages.residual, integrator.config().newton_tol);

    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    for (int j = 0; j < s; ++j) xi += 0.1 * tab.b(j) * st[j].xidot;
    EXPECT_LE((xi - st.back().xi).norm(), 1e-15);

    switch (closure) {
      case Closure::Concatenation:
        EXPECT_DOUBLE_EQ(st.front().lambda, x.lambda_carry);
        break;
      case Closure::ZeroFirst:
        EXPECT_LE(std::abs(st.front().lambda), 1e-14);
        break;
      case Closure::WeightedZeroSum: {
        double sum = 0;
        for (int j = 0; j < s; ++j) sum += tab.b(j) * st[j].lambda;
        EXPECT_LE(std::abs(sum), 1e-12);
        break;
      }
    }
    EXPECT_EQ(r.state.lambda_carry, st.back().lambda);
    EXPECT_NEAR(r.state.t, x.t + 0.1, 1e-12);
    x = r.state;
  }
}

TEST_P(Trajectory, RecoveredMomentaMatchStages)
{
  const auto [s, kind, closure] = GetParam();
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(s), 0.1, with_retraction(kind));
  StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0());
  for (int k = 0; k < 20; ++k) {
    const StepResult r = integrator.step(x, closure);
    const auto rec = recover_inner_momenta(integrator.system(), integrator.tableau(), 0.1, kind, x, r.stages);
    EXPECT_EQ(rec.front().first, x.mu);
    EXPECT_LE((rec.back().first - r.state.mu).norm(), 1e-15);
    for (int i = 0; i < s; ++i) {
      EXPECT_LE((rec[i].first - r.stages.stages[i].M0).norm(), 1e-15);
      EXPECT_LE((rec[i].second - r.stages.stages[i].H).norm(), 1e-15);
    }
    x = r.state;
  }
}

TEST(Step, EquilibriumIsBitStable)
{
  for (int s : {2, 3, 4}) {
    for (auto closure : {Closure::Concatenation, Closure::ZeroFirst, Closure::WeightedZeroSum}) {
      const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(s), 0.1);
      StepState x = integrator.initial_state(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
      EXPECT_EQ(x.lambda_carry, 0.0);
      for (int k = 0; k < 10; ++k) {
        const StepResult r = integrator.step(x, closure);
        EXPECT_EQ(r.state.g, Eigen::Matrix3d::Identity());
        EXPECT_EQ(r.state.mu, Eigen::Vector3d::Zero());
        for (const auto& st : r.stages.stages) EXPECT_EQ(st.lambda, 0.0);
        x = r.state;
      }
    }
  }
}

TEST(Step, ZeroDynamicsStaysPut)
{
  const SphericalPendulum free_pendulum({1.0, 1.0, Eigen::Vector3d::Zero()});
  const Integrator<SphericalPendulum> integrator(free_pendulum, lobatto(3), 0.2);
  const GroupElement g0 = from_tait_bryan(Eigen::Vector3d(0.3, 0.2, -0.1));
  StepState x = integrator.initial_state(g0, Eigen::Vector3d::Zero());
  const StepResult r = integrator.step(x);
  EXPECT_EQ(r.state.g, g0);
  EXPECT_EQ(r.state.mu, Eigen::Vector3d::Zero());
}

TEST(Step, RejectsInconsistentInitialData)
{
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(2), 0.1);
  const StepState x = integrator.initial_state(pendulum_g0(), Eigen::Vector3d(0.3, 0, 1e-6));
  EXPECT_THROW(integrator.step(x), InvalidConfig);
}

TEST(Step, RejectsBadConfiguration)
{
  EXPECT_THROW(Integrator<SphericalPendulum>(SphericalPendulum{}, lobatto(2), 0.0), InvalidConfig);
  SolverConfig bad;
  bad.newton_tol = 0.0;
  EXPECT_THROW(Integrator<SphericalPendulum>(SphericalPendulum{}, lobatto(2), 0.1, bad), InvalidConfig);
  ButcherTableau not_stiff = lobatto(2);
  not_stiff.a(1, 0) = 0.25;
  not_stiff.a(1, 1) = 0.75;
  EXPECT_THROW(Integrator<SphericalPendulum>(SphericalPendulum{}, not_stiff, 0.1), InvalidConfig);
}

TEST(Step, ReportsNewtonDivergence)
{
  SolverConfig cfg;
  cfg.max_iter = 1;
  cfg.newton_tol = 1e-300;
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(3), 0.1, cfg);
  const StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0());
  try {
    integrator.step(x);
    FAIL() << "expected NewtonDivergence";
  } catch (const NewtonDivergence& e) {
    EXPECT_EQ(e.iterations(), 1);
    EXPECT_GE(e.residual(), 0.0);
  }
}

TEST(Step, SmallStepVelocitiesApproachInitialVelocity)
{
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(2), 1e-6);
  const StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0());
  const StepResult r = integrator.step(x);
  for (const auto& st : r.stages.stages) EXPECT_LE((st.xidot - pendulum_eta0()).norm(), 1e-5);
}

TEST(Step, FiniteDifferenceJacobianGivesSameStep)
{
  for (int s : {2, 3, 4}) {
    SolverConfig fd;
    fd.jacobian = JacobianMode::FiniteDifference;
    const Integrator<SphericalPendulum> analytic(SphericalPendulum{}, lobatto(s), 0.1);
    const Integrator<SphericalPendulum> numeric(SphericalPendulum{}, lobatto(s), 0.1, fd);
    StepState a = analytic.initial_state(pendulum_g0(), pendulum_eta0());
    StepState b = a;
    for (int k = 0; k < 20; ++k) {
      a = analytic.step(a).state;
      b = numeric.step(b).state;
    }
    EXPECT_LE((a.g - b.g).norm(), 1e-11) << s;
    EXPECT_LE((a.mu - b.mu).norm(), 1e-11) << s;
  }
}

TEST(Step, AnalyticJacobianMatchesFiniteDifferences)
{
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(3), 0.1);
  const StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0());
  const NonholonomicModel model{Closure::Concatenation, x.lambda_carry};
  testing::Sampler rng(3);
  Eigen::VectorXd z = integrator.initial_guess(x, model);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += rng.uniform(-0.1, 0.1);
  const auto f = [&](const auto& v) { return integrator.residual(x, model, v); };
  const Eigen::MatrixXd ja = detail::jacobian(f, z, JacobianMode::Analytic);
  const Eigen::MatrixXd jf = detail::jacobian(f, z, JacobianMode::FiniteDifference);
  EXPECT_LE((ja - jf).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Step, ResidualVanishesAtSolution)
{
  const Integrator<SphericalKepler> integrator(SphericalKepler{}, lobatto(4), 0.01,
                                               with_retraction(RetractionKind::Exponential));
  const StepState x = integrator.initial_state(from_tait_bryan(Eigen::Vector3d(0.94, -0.69, 3.0)),
                                               Eigen::Vector3d(1.5, 0, 0));
  const StepResult r = integrator.step(x);
  Eigen::VectorXd z(16);
  for (int j = 0; j < 4; ++j) {
    z.segment<3>(3 * j) = r.stages.stages[j].xidot;
    z(12 + j) = r.stages.stages[j].lambda;
  }
  const VecX<double> res = integrator.residual(x, NonholonomicModel{Closure::Concatenation, x.lambda_carry}, VecX<double>(z));
  EXPECT_LE(res.lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_EQ(integrator.residual(x, FreeModel{}, VecX<double>(z.head(12))).size(), 12);
}

TEST(AssembleN0, Examples)
{
  const SphericalPendulum pendulum;
  EXPECT_EQ(assemble_n0(pendulum, Eigen::Matrix3d(Eigen::Matrix3d::Identity()), 0.0), Eigen::Vector3d::Zero());
  const FreeRigidBody body(Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(assemble_n0(body, pendulum_g0(), 2.0), Eigen::Vector3d(0, 0, 2));
}

TEST(InitialMultiplier, VanishesForPendulumAndKepler)
{
  testing::Sampler rng(5);
  const SphericalPendulum pendulum({1.3, 0.4, {0.2, -0.1, -1}});
  const SphericalKepler kepler;
  for (int i = 0; i < 200; ++i) {
    const GroupElement g = rng.rotation();
    const Eigen::Vector3d eta = rng.horizontal(2.0);
    EXPECT_LE(std::abs(initial_multiplier(pendulum, g, eta)), 1e-15);
    if (std::abs(kepler.alignment(g)) < 0.9) {
      EXPECT_LE(std::abs(initial_multiplier(kepler, g, eta)), 1e-14);
    }
  }
  const GroupElement g0 = from_tait_bryan(Eigen::Vector3d(0.940125174120388, -0.693184358892293, 3.007331043590061));
  EXPECT_LE(std::abs(initial_multiplier(kepler, g0, Eigen::Vector3d(1.534184084268850, 0, 0))), 1e-15);
}

TEST(InitialMultiplier, CancelsForceAlongIsotropy)
{
  const TiltedForceSystem sys(Eigen::Vector3d(0.1, 0.2, 0.7));
  EXPECT_DOUBLE_EQ(initial_multiplier(sys, Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.5, -0.3, 0)), -0.7);
  const auto rhs = continuous_rhs(sys, Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.5, -0.3, 0));
  EXPECT_DOUBLE_EQ(rhs.lambda, -0.7);
  EXPECT_EQ(rhs.eta_dot(2), 0.0);
}

TEST(FreeStep, SpatialMomentumIsTransportedExactly)
{
  const FreeRigidBody body(Eigen::Vector3d(1.0, 2.0, 3.5));
  for (int s : {2, 3, 4}) {
    for (auto kind : {RetractionKind::Cayley, RetractionKind::Exponential}) {
      const Integrator<FreeRigidBody> integrator(body, lobatto(s), 0.1, with_retraction(kind));
      StepState x = integrator.initial_state(pendulum_g0(), Eigen::Vector3d(0.7, -0.4, 0.9), 0.0);
      const Eigen::Vector3d pi0 = x.g * x.mu;
      for (int k = 0; k < 200; ++k) {
        const StepResult r = integrator.step_free(x);
        EXPECT_LE((r.state.g * r.state.mu - x.g * x.mu).norm(), 1e-12);
        for (const auto& st : r.stages.stages) {
          EXPECT_LE((st.G * st.M0 - x.g * x.mu).norm(), 1e-12);
          EXPECT_EQ(st.lambda, 0.0);
        }
        x = r.state;
      }
      EXPECT_LE((x.g * x.mu - pi0).norm(), 1e-11);
    }
  }
}

TEST(HolonomicStep, BeadStaysOnLatitude)
{
  const LatitudeConstraint latitude{kPi / 3};
  const GroupElement g0 = rotation_y(kPi / 3);
  ASSERT_LE(std::abs(latitude.value(g0)), 1e-15);
  const Eigen::Vector3d grad = latitude.gradient(g0);
  const Eigen::Vector3d eta0 = 0.5 * grad.cross(Eigen::Vector3d(0, 0, 1)).normalized();
  ASSERT_LE(std::abs(grad.dot(eta0)), 1e-15);

  for (int s : {2, 3}) {
    const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(s), 0.1);
    StepState x = integrator.initial_state(g0, eta0, 0.0);
    std::vector<double> t, e;
    const double e0 = integrator.system().energy(x.g, eta0);
    for (int k = 0; k < 1000; ++k) {
      const StepResult r = integrator.step_holonomic(x, latitude);
      x = r.state;
      ASSERT_LE(std::abs(latitude.value(x.g)), 1e-10) << "step " << k;
      EXPECT_LE(r.stages.constraint_max, 1e-10);
      const Eigen::Vector3d eta = integrator.system().momentum_inv(x.mu);
      EXPECT_LE(std::abs(latitude.gradient(x.g).dot(eta)), 1e-10);
      t.push_back(x.t);
      e.push_back(integrator.system().energy(x.g, eta) - e0);
    }
    double amp = 0;
    for (double v : e) amp = std::max(amp, std::abs(v));
    EXPECT_LE(amp, 1e-3) << s;
    EXPECT_LE(std::abs(fit_slope(t, e)) * t.back(), 1e-9 + 0.1 * amp) << s;
  }
}

// Local error of one step against the reference solver: slope p + 1.
TEST(Step, LocalErrorOrder)
{
  const SphericalPendulum pendulum;
  const std::vector<double> hs = {0.2, 0.1, 0.05, 0.025};
  const int expected[] = {3, 5, 7};
  for (int s : {2, 3, 4}) {
    std::vector<double> err;
    for (double h : hs) {
      const Integrator<SphericalPendulum> integrator(pendulum, lobatto(s), h,
                                                     with_retraction(RetractionKind::Exponential));
      const StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0());
      const GroupElement g1 = integrator.step(x).state.g;
      ReferenceOptions opt;
      opt.h_ref = h / 1000;
      const auto ref = reference_solve(pendulum, pendulum_g0(), pendulum_eta0(), h, h, opt);
      err.push_back((g1 - ref.samples.back().g).norm());
    }
    int used = 0;
    // The reference agrees with itself to about 1e-13; smaller errors are not resolved.
    const double slope = loglog_slope(hs, err, 1e-13, &used);
    EXPECT_GE(used, 2) << s;
    EXPECT_NEAR(slope, expected[s - 2], 0.35) << "s=" << s;
  }
}

TEST(WeightedZero, RankDeficientSystemPicksSmallMultipliers)
{
  const Integrator<SphericalPendulum> integrator(SphericalPendulum{}, lobatto(3), 0.1);
  StepState x = integrator.initial_state(pendulum_g0(), pendulum_eta0(), 0.0);
  double worst = 0;
  for (int k = 0; k < 300; ++k) {
    const StepResult r = integrator.step(x, Closure::WeightedZeroSum);
    for (const auto& st : r.stages.stages) worst = std::max(worst, std::abs(st.lambda));
    x = r.state;
  }
  EXPECT_LE(worst, 1e-2);
}

TEST(Closure, ParsesNames)
{
  EXPECT_EQ(parse_closure("concat"), Closure::Concatenation);
  EXPECT_EQ(parse_closure("zero-first"), Closure::ZeroFirst);
  EXPECT_EQ(parse_closure("weighted-zero"), Closure::WeightedZeroSum);
  EXPECT_EQ(to_string(Closure::WeightedZeroSum), "weighted-zero");
  EXPECT_THROW(parse_closure("sum"), InvalidConfig);
  EXPECT_EQ(parse_jacobian("fd"), JacobianMode::FiniteDifference);
  EXPECT_THROW(parse_jacobian("exact"), InvalidConfig);
}

}  // namespace
}  // namespace nhrkmk
