#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "autodiff.hpp"
#include "errors.hpp"
#include "retraction.hpp"
#include "so3.hpp"
#include "sphere.hpp"
#include "systems.hpp"
#include "tableau.hpp"

/**
 * Nonholonomic partitioned RKMK integrator on SO(3), left-trivialized.
 *
 * One step from (g_k, mu_k) solves for the stage velocities Xidot^j and the
 * stage multipliers Lambda^j:
 *
 *   Xi^i      = h sum_j a_ij Xidot^j,      G^i = g_k tau(Xi^i),   xi = Xi^s
 *   N0^i      = force(G^i) + Lambda^i x0
 *   Pi0^i     = momentum(dtauL_{Xi^i} Xidot^i)
 *   (N^i, Pi^i) = T*dtauL (N0^i, Pi0^i)
 *   mu_{k+1}  = tau(xi)^T [mu_k + h sum_j b_j tau(Xi^j) N0^j]
 *   0 = dtauL_xi^{-T} Pi^i - mu_{k+1} + h sum_j (b_j a_ji / b_i) dtauL_xi^{-T} N^j
 *   M0^i      = tau(Xi^i)^T [mu_k + h sum_j a_ij tau(Xi^j) N0^j]
 *   0 = phi(momentum_inv(M0^i)),  i = 2..s
 *   0 = closure(Lambda)
 *
 * The tableau must have a_1j = 0 and a_sj = b_j exactly (Lobatto IIIA), so
 * that G^1 = g_k, G^s = g_{k+1}, M0^1 = mu_k and M0^s = mu_{k+1}.
 */
namespace nhrkmk {

enum class Closure
{
  Concatenation,    // Lambda^1_k = Lambda^s_{k-1}
  ZeroFirst,        // Lambda^1_k = 0
  WeightedZeroSum,  // sum_j b_j Lambda^j_k = 0
};

std::string_view to_string(Closure closure);
Closure parse_closure(std::string_view name);

enum class JacobianMode
{
  Analytic,  // forward-mode differentiation of the residual
  FiniteDifference,
};

std::string_view to_string(JacobianMode mode);
JacobianMode parse_jacobian(std::string_view name);

struct SolverConfig
{
  double newton_tol = 1e-12;
  int max_iter = 50;
  JacobianMode jacobian = JacobianMode::Analytic;
  RetractionKind retraction = RetractionKind::Cayley;
};

struct StepState
{
  GroupElement g = GroupElement::Identity();
  CoalgebraVector mu = CoalgebraVector::Zero();
  // Lambda^s of the previous step; the first multiplier under concatenation.
  double lambda_carry = 0.0;
  double t = 0.0;
};

struct Stage
{
  AlgebraVector xi = AlgebraVector::Zero();        // Xi^i
  AlgebraVector xidot = AlgebraVector::Zero();     // Xidot^i
  AlgebraVector velocity = AlgebraVector::Zero();  // dtauL_{Xi^i} Xidot^i
  GroupElement G = GroupElement::Identity();
  double lambda = 0.0;
  CoalgebraVector N0 = CoalgebraVector::Zero();
  CoalgebraVector M0 = CoalgebraVector::Zero();
  AlgebraVector H = AlgebraVector::Zero();  // momentum_inv(M0^i)
};

struct StageSolution
{
  std::vector<Stage> stages;
  int iterations = 0;
  double residual = 0.0;
  // max over i = 2..s of |phi(H^i)| (nonholonomic) or |Phi(G^i)| (holonomic).
  double constraint_max = 0.0;
};

struct StepResult
{
  StepState state;
  StageSolution stages;
};

/// Scalar holonomic constraint Phi: SO(3) -> R with its left-trivialized gradient.
template <typename C>
concept HolonomicConstraint = requires(const C& c, const Eigen::Matrix3d& g, const Mat3<Dual>& gd) {
  { c.value(g) } -> std::convertible_to<double>;
  { c.value(gd) } -> std::convertible_to<Dual>;
  { c.gradient(g) } -> std::convertible_to<Eigen::Vector3d>;
  { c.gradient(gd) } -> std::convertible_to<Vec3<Dual>>;
};

/// Phi(g) = x0 . (g x0) - cos(polar_angle): the point g x0 stays on a circle of latitude.
struct LatitudeConstraint
{
  double polar_angle = std::numbers::pi / 3;

  template <typename Scalar>
  Scalar value(const Mat3<Scalar>& g) const
  {
    return g(2, 2) - std::cos(polar_angle);
  }

  template <typename Scalar>
  Vec3<Scalar> gradient(const Mat3<Scalar>& g) const
  {
    const Vec3<Scalar> local = g.transpose() * origin<Scalar>();
    return origin<Scalar>().cross(local);
  }
};

static_assert(HolonomicConstraint<LatitudeConstraint>);

/// Constraint models selecting the extra unknowns and rows of the stage system.
struct FreeModel
{
};

struct NonholonomicModel
{
  Closure closure = Closure::Concatenation;
  double lambda_carry = 0.0;
};

template <HolonomicConstraint C>
struct HolonomicModel
{
  const C* constraint;
};

namespace detail {

template <typename Model>
constexpr bool has_multipliers = !std::is_same_v<Model, FreeModel>;

template <typename Scalar>
struct StageWork
{
  std::vector<Vec3<Scalar>> xidot, xi, velocity, n0, transported, m0;
  std::vector<Mat3<Scalar>> rot, G;
  std::vector<Scalar> lambda;
};

}  // namespace detail

/// Inner momentum M0^i from stage rotations and transported forces.
template <typename Scalar>
Vec3<Scalar> inner_momentum(const ButcherTableau& tab, double h, const Eigen::Vector3d& mu,
                            const Mat3<Scalar>& rot_i, const std::vector<Vec3<Scalar>>& transported,
                            int i)
{
  Vec3<Scalar> acc = mu.cast<Scalar>();
  for (int j = 0; j < tab.stages; ++j) {
    acc += (h * tab.a(i, j)) * transported[j];
  }
  return rot_i.transpose() * acc;
}

/// N0^i = force(G^i) + Lambda^i Dphi, with Dphi = x0.
template <LagrangianSystem System, typename Scalar>
Vec3<Scalar> assemble_n0(const System& sys, const Mat3<Scalar>& G, const Scalar& lambda)
{
  return sys.force(G) + lambda * origin<Scalar>();
}

/// Residual of the stage system at unknowns z = (Xidot^1..s, [Lambda^1..s]).
template <typename Scalar, LagrangianSystem System, typename Model>
VecX<Scalar> stage_residual(const System& sys, const ButcherTableau& tab, double h,
                            RetractionKind kind, const StepState& state, const Model& model,
                            const VecX<Scalar>& z, detail::StageWork<Scalar>* work_out = nullptr)
{
  const int s = tab.stages;
  constexpr bool constrained = detail::has_multipliers<Model>;
  const int rows = constrained ? 4 * s : 3 * s;

  detail::StageWork<Scalar> w;
  w.xidot.resize(s);
  w.xi.resize(s);
  w.velocity.resize(s);
  w.n0.resize(s);
  w.transported.resize(s);
  w.m0.resize(s);
  w.rot.resize(s);
  w.G.resize(s);
  w.lambda.assign(s, Scalar(0.0));

  for (int j = 0; j < s; ++j) {
    w.xidot[j] = z.template segment<3>(3 * j);
    if constexpr (constrained) w.lambda[j] = z(3 * s + j);
  }

  const Mat3<Scalar> gk = state.g.cast<Scalar>();
  std::vector<Mat3<Scalar>> dtau(s);
  std::vector<Vec3<Scalar>> pi(s), n(s);
  for (int i = 0; i < s; ++i) {
    Vec3<Scalar> xi = Vec3<Scalar>::Zero();
    for (int j = 0; j < s; ++j) xi += (h * tab.a(i, j)) * w.xidot[j];
    w.xi[i] = xi;
    w.rot[i] = tau(kind, xi);
    w.G[i] = gk * w.rot[i];
    dtau[i] = dtauL_matrix(kind, xi);
    w.velocity[i] = dtau[i] * w.xidot[i];

    const Vec3<Scalar> pi0 = sys.momentum(w.velocity[i]);
    if constexpr (std::is_same_v<Model, NonholonomicModel>) {
      w.n0[i] = assemble_n0(sys, w.G[i], w.lambda[i]);
    } else if constexpr (constrained) {
      w.n0[i] = sys.force(w.G[i]) + w.lambda[i] * model.constraint->gradient(w.G[i]);
    } else {
      w.n0[i] = sys.force(w.G[i]);
    }
    w.transported[i] = w.rot[i] * w.n0[i];

    pi[i] = dtau[i].transpose() * pi0;
    n[i] = dtau[i].transpose() * w.n0[i] + ddtauL_matrix(kind, xi, w.xidot[i]).transpose() * pi0;
  }
  for (int i = 0; i < s; ++i) {
    w.m0[i] = inner_momentum(tab, h, state.mu, w.rot[i], w.transported, i);
  }
  const Vec3<Scalar>& mu_next = w.m0[s - 1];
  const Mat3<Scalar> dinv_t = dtauL_inv_matrix(kind, w.xi[s - 1]).transpose();

  VecX<Scalar> r(rows);
  for (int i = 0; i < s; ++i) {
    Vec3<Scalar> rhs = mu_next;
    for (int j = 0; j < s; ++j) {
      rhs -= (h * tab.b(j) * tab.a(j, i) / tab.b(i)) * (dinv_t * n[j]);
    }
    r.template segment<3>(3 * i) = dinv_t * pi[i] - rhs;
  }

  if constexpr (std::is_same_v<Model, NonholonomicModel>) {
    for (int i = 1; i < s; ++i) {
      r(3 * s + i - 1) = phi(sys.momentum_inv(w.m0[i]));
    }
    switch (model.closure) {
      case Closure::Concatenation:
        r(4 * s - 1) = w.lambda[0] - model.lambda_carry;
        break;
      case Closure::ZeroFirst:
        r(4 * s - 1) = w.lambda[0];
        break;
      case Closure::WeightedZeroSum: {
        Scalar acc(0.0);
        for (int j = 0; j < s; ++j) acc += tab.b(j) * w.lambda[j];
        r(4 * s - 1) = acc;
        break;
      }
    }
  } else if constexpr (constrained) {
    for (int i = 1; i < s; ++i) {
      r(3 * s + i - 1) = model.constraint->value(w.G[i]);
    }
    // Tangency at the step end point, with the velocity read off mu_{k+1}.
    const Vec3<Scalar> eta_next = sys.momentum_inv(mu_next);
    r(4 * s - 1) = model.constraint->gradient(w.G[s - 1]).dot(eta_next);
  }

  if (work_out != nullptr) *work_out = std::move(w);
  return r;
}

struct NewtonReport
{
  Eigen::VectorXd z;
  int iterations = 0;
  double residual = 0.0;
  // Newton matrix at the root was numerically singular; the root is one of a family.
  bool rank_deficient = false;
};

namespace detail {

template <typename Residual>
Eigen::MatrixXd jacobian(const Residual& f, const Eigen::VectorXd& z, JacobianMode mode)
{
  const Eigen::Index n = z.size();
  Eigen::MatrixXd J(n, n);
  if (mode == JacobianMode::Analytic) {
    VecX<Dual> zd(n);
    for (Eigen::Index i = 0; i < n; ++i) zd(i) = Dual(z(i), n, i);
    const VecX<Dual> r = f(zd);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r(i).derivatives().size() == n) {
        J.row(i) = r(i).derivatives().transpose();
      } else {
        J.row(i).setZero();
      }
    }
    return J;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = 1e-6 * std::max(1.0, std::abs(z(j)));
    Eigen::VectorXd zp = z, zm = z;
    zp(j) += d;
    zm(j) -= d;
    J.col(j) = (f(zp) - f(zm)) / (2.0 * d);
  }
  return J;
}

// LU factorization of the Newton matrix. When the matrix is numerically
// rank deficient the step is the minimum-norm least-squares correction.
class NewtonLinearization
{
public:
  explicit NewtonLinearization(const Eigen::MatrixXd& J) : lu_(J)
  {
    if (!(lu_.rcond() >= kRcondFloor)) {
      cod_.emplace(J.rows(), J.cols());
      cod_->setThreshold(kRankThreshold);
      cod_->compute(J);
    }
  }

  bool rank_deficient() const { return cod_.has_value(); }

  static constexpr double kRcondFloor = 1e-12;
  static constexpr double kRankThreshold = 1e-10;

  Eigen::VectorXd solve(const Eigen::VectorXd& r) const
  {
    return cod_ ? Eigen::VectorXd(cod_->solve(r)) : Eigen::VectorXd(lu_.solve(r));
  }

private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::optional<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> cod_;
};

}  // namespace detail

/**
 * Damped Newton iteration on f(z) = 0, f generic in the scalar type.
 *
 * Converged once ||f||_inf <= newton_tol; one extra correction with the last
 * factorization is then applied so the returned root sits at roundoff level.
 * A trial step is halved up to 8 times while the residual increases.
 * Rank-deficient systems take minimum-norm steps.
 */
template <typename Residual>
NewtonReport solve_newton(const Residual& f, Eigen::VectorXd z, const SolverConfig& cfg)
{
  Eigen::VectorXd r = f(z);
  double rn = r.template lpNorm<Eigen::Infinity>();
  std::optional<detail::NewtonLinearization> lu;
  for (int iter = 0; iter <= cfg.max_iter; ++iter) {
    if (!std::isfinite(rn)) break;
    if (rn <= cfg.newton_tol) {
      if (rn > 0.0) {
        lu.emplace(detail::jacobian(f, z, cfg.jacobian));
        const Eigen::VectorXd zp = z - lu->solve(r);
        const Eigen::VectorXd rp = f(zp);
        const double rpn = rp.template lpNorm<Eigen::Infinity>();
        if (zp.allFinite() && rpn <= rn) {
          z = zp;
          rn = rpn;
        }
      } else if (!lu) {
        lu.emplace(detail::jacobian(f, z, cfg.jacobian));
      }
      return {std::move(z), iter, rn, lu->rank_deficient()};
    }
    if (iter == cfg.max_iter) break;

    lu.emplace(detail::jacobian(f, z, cfg.jacobian));
    const Eigen::VectorXd dz = -lu->solve(r);
    if (!dz.allFinite()) {
      throw NewtonDivergence("stage solver: singular Jacobian", rn, iter);
    }
    double alpha = 1.0;
    Eigen::VectorXd trial = z + dz;
    Eigen::VectorXd rt = f(trial);
    double rtn = rt.template lpNorm<Eigen::Infinity>();
    for (int halving = 0; halving < 8 && !(rtn <= rn); ++halving) {
      alpha *= 0.5;
      trial = z + alpha * dz;
      rt = f(trial);
      rtn = rt.template lpNorm<Eigen::Infinity>();
    }
    z = std::move(trial);
    r = std::move(rt);
    rn = rtn;
  }
  throw NewtonDivergence("stage solver did not converge", rn, cfg.max_iter);
}

/**
 * Moves a root of a rank-deficient system along the null space of its Newton
 * matrix to the member with the smallest multipliers, the trailing
 * `multipliers` entries of z, and re-converges.
 */
template <typename Residual>
NewtonReport select_smallest_multipliers(const Residual& f, NewtonReport root, int multipliers,
                                         const SolverConfig& cfg)
{
  for (int pass = 0; pass < 3 && root.rank_deficient; ++pass) {
    const Eigen::MatrixXd J = detail::jacobian(f, root.z, cfg.jacobian);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
    svd.setThreshold(detail::NewtonLinearization::kRankThreshold);
    const Eigen::Index nullity = J.cols() - svd.rank();
    if (nullity == 0) break;
    const Eigen::MatrixXd kernel = svd.matrixV().rightCols(nullity);
    const Eigen::MatrixXd along = kernel.bottomRows(multipliers);
    const Eigen::VectorXd c =
        along.completeOrthogonalDecomposition().solve(-root.z.tail(multipliers));
    if (c.norm() <= 1e-15) break;
    const int iterations = root.iterations;
    root = solve_newton(f, root.z + kernel * c, cfg);
    root.iterations += iterations;
  }
  return root;
}

/// Continuous multiplier at (g0, eta0): solves the h-row of the Euler-Poincare
/// equations for lambda so that d/dt phi(eta) = 0.
template <LagrangianSystem System>
double initial_multiplier(const System& sys, const GroupElement& g0, const AlgebraVector& eta0)
{
  const Eigen::Vector3d mu = sys.momentum(eta0);
  return -phi(Eigen::Vector3d(coad(eta0, mu) + sys.force(g0)));
}

/// Inner momenta M0^i and velocities H^i = momentum_inv(M0^i) from a converged stage
/// solution (uses the stored G^i, Xi^i and N0^i).
template <LagrangianSystem System>
std::vector<std::pair<CoalgebraVector, AlgebraVector>> recover_inner_momenta(
    const System& sys, const ButcherTableau& tab, double h, RetractionKind kind,
    const StepState& state, const StageSolution& sol)
{
  const int s = tab.stages;
  std::vector<Eigen::Vector3d> transported(s);
  std::vector<Eigen::Matrix3d> rot(s);
  for (int j = 0; j < s; ++j) {
    rot[j] = tau(kind, sol.stages[j].xi);
    transported[j] = rot[j] * sol.stages[j].N0;
  }
  std::vector<std::pair<CoalgebraVector, AlgebraVector>> out;
  out.reserve(s);
  for (int i = 0; i < s; ++i) {
    const Eigen::Vector3d m0 = inner_momentum(tab, h, state.mu, rot[i], transported, i);
    out.emplace_back(m0, sys.momentum_inv(m0));
  }
  return out;
}

/// Integrator for one system, tableau and step size.
template <LagrangianSystem System>
class Integrator
{
public:
  Integrator(System system, ButcherTableau tableau, double h, SolverConfig config = {})
      : system_(std::move(system)), tableau_(std::move(tableau)), h_(h), config_(config)
  {
    if (!(h_ > 0.0)) throw InvalidConfig("step size must be positive");
    if (!(config_.newton_tol > 0.0)) throw InvalidConfig("newton_tol must be positive");
    if (tableau_.stages < 2 || tableau_.stages > 4) {
      throw UnsupportedStageCount("integrator supports 2 to 4 stages");
    }
    for (const auto& v : validate(tableau_)) {
      if (v.condition == TableauCondition::FirstRowZero ||
          v.condition == TableauCondition::StiffAccuracy ||
          v.condition == TableauCondition::PositiveWeights || v.condition == TableauCondition::Shape) {
        throw InvalidConfig("integrator needs a stiffly accurate tableau with a_1j = 0 and b > 0: " +
                            v.detail);
      }
    }
  }

  const System& system() const { return system_; }
  const ButcherTableau& tableau() const { return tableau_; }
  double step_size() const { return h_; }
  const SolverConfig& config() const { return config_; }

  /// State at t = 0 with mu_0 = momentum(eta0); lambda0 defaults to the continuous multiplier.
  StepState initial_state(const GroupElement& g0, const AlgebraVector& eta0,
                          std::optional<double> lambda0 = std::nullopt) const
  {
    StepState st;
    st.g = g0;
    st.mu = system_.momentum(eta0);
    st.lambda_carry = lambda0 ? *lambda0 : initial_multiplier(system_, g0, eta0);
    st.t = 0.0;
    return st;
  }

  /// Nonholonomic step with the reduced constraint phi(eta) = eta . x0.
  StepResult step(const StepState& state, Closure closure = Closure::Concatenation) const
  {
    const double phi0 = phi(system_.momentum_inv(state.mu));
    if (std::abs(phi0) > 1e-10) {
      throw InvalidConfig("step: initial data violate the constraint (phi = " +
                          std::to_string(phi0) + ")");
    }
    return solve(state, NonholonomicModel{closure, state.lambda_carry});
  }

  /// Purely variational step: no multipliers, no constraint rows.
  StepResult step_free(const StepState& state) const { return solve(state, FreeModel{}); }

  /// Holonomically constrained step, Phi(G^i) = 0 for i = 2..s plus tangency at g_{k+1}.
  template <HolonomicConstraint C>
  StepResult step_holonomic(const StepState& state, const C& constraint) const
  {
    return solve(state, HolonomicModel<C>{&constraint});
  }

  template <typename Model, typename Scalar>
  VecX<Scalar> residual(const StepState& state, const Model& model, const VecX<Scalar>& z) const
  {
    return stage_residual<Scalar>(system_, tableau_, h_, config_.retraction, state, model, z);
  }

  /// Newton starting point: constant velocity momentum_inv(mu_k), multipliers at the carry.
  /// Under WeightedZeroSum the multipliers start at 0, so that a rank-deficient
  /// stage system resolves to the smallest multipliers.
  template <typename Model>
  Eigen::VectorXd initial_guess(const StepState& state, const Model& model) const
  {
    const int s = tableau_.stages;
    const int n = detail::has_multipliers<Model> ? 4 * s : 3 * s;
    Eigen::VectorXd z(n);
    const Eigen::Vector3d eta = system_.momentum_inv(state.mu);
    for (int j = 0; j < s; ++j) z.segment<3>(3 * j) = eta;
    if constexpr (detail::has_multipliers<Model>) {
      double lambda0 = state.lambda_carry;
      if constexpr (std::is_same_v<Model, NonholonomicModel>) {
        if (model.closure == Closure::WeightedZeroSum) lambda0 = 0.0;
      }
      z.tail(s).setConstant(lambda0);
    }
    return z;
  }

private:
  template <typename Model>
  StepResult solve(const StepState& state, const Model& model) const
  {
    const int s = tableau_.stages;
    const auto f = [&](const auto& z) { return residual(state, model, z); };
    NewtonReport report = solve_newton(f, initial_guess(state, model), config_);
    if constexpr (detail::has_multipliers<Model>) {
      if (report.rank_deficient) report = select_smallest_multipliers(f, std::move(report), s, config_);
    }

    detail::StageWork<double> w;
    stage_residual<double>(system_, tableau_, h_, config_.retraction, state, model, report.z, &w);

    StepResult out;
    out.stages.iterations = report.iterations;
    out.stages.residual = report.residual;
    out.stages.stages.resize(s);
    for (int i = 0; i < s; ++i) {
      Stage& st = out.stages.stages[i];
      st.xi = w.xi[i];
      st.xidot = w.xidot[i];
      st.velocity = w.velocity[i];
      st.G = w.G[i];
      st.lambda = w.lambda[i];
      st.N0 = w.n0[i];
      st.M0 = w.m0[i];
      st.H = system_.momentum_inv(w.m0[i]);
      if (config_.retraction == RetractionKind::Exponential &&
          st.xi.norm() >= std::numbers::pi - 1e-6) {
        throw RetractionDomainExceeded("stage rotation exceeds the exponential chart; reduce h");
      }
    }
    double cmax = 0.0;
    for (int i = 1; i < s; ++i) {
      if constexpr (std::is_same_v<Model, NonholonomicModel>) {
        cmax = std::max(cmax, std::abs(phi(out.stages.stages[i].H)));
      } else if constexpr (detail::has_multipliers<Model>) {
        cmax = std::max(cmax, std::abs(model.constraint->value(out.stages.stages[i].G)));
      }
    }
    out.stages.constraint_max = cmax;

    out.state.g = w.G[s - 1];
    out.state.mu = w.m0[s - 1];
    out.state.lambda_carry = w.lambda[s - 1];
    out.state.t = state.t + h_;
    return out;
  }

  System system_;
  ButcherTableau tableau_;
  double h_;
  SolverConfig config_;
};

/// Free-function form of a nonholonomic step.
template <LagrangianSystem System>
StepResult step(const StepState& state, const System& system, const ButcherTableau& tableau,
                double h, const SolverConfig& config, Closure closure)
{
  return Integrator<System>(system, tableau, h, config).step(state, closure);
}

template <LagrangianSystem System, HolonomicConstraint C>
StepResult step_holonomic(const StepState& state, const System& system, const C& constraint,
                          const ButcherTableau& tableau, double h, const SolverConfig& config)
{
  return Integrator<System>(system, tableau, h, config).step_holonomic(state, constraint);
}

}  // namespace nhrkmk
