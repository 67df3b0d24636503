#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "batch.hpp"
#include "integrator.hpp"
#include "retraction.hpp"
#include "so3.hpp"
#include "systems.hpp"

/**
 * Experiment drivers behind the command line tool: trajectory simulation,
 * convergence-order studies against the reference solver, and long-run
 * energy / multiplier studies. All outputs are CSV.
 */
namespace nhrkmk {

enum class SystemKind
{
  Pendulum,
  Kepler,
};

std::string_view to_string(SystemKind kind);
SystemKind parse_system(std::string_view name);

enum class IcFormat
{
  TaitBryan,  // R_z(c) R_y(b) R_x(a) for (a, b, c)
  ExpCoords,  // exp(hat(v))
};

std::string_view to_string(IcFormat format);
IcFormat parse_ic_format(std::string_view name);

enum class Command
{
  Simulate,
  OrderStudy,
  EnergyStudy,
};

struct InitialCondition
{
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  Eigen::Vector3d eta = Eigen::Vector3d::Zero();
  // Unset means the continuous multiplier of (g0, eta0).
  std::optional<double> lambda;
  IcFormat format = IcFormat::TaitBryan;

  GroupElement group_element() const;
};

struct ExperimentConfig
{
  Command command = Command::Simulate;
  SystemKind system = SystemKind::Pendulum;
  // simulate and energy-study take exactly one entry.
  std::vector<int> stages{2};
  RetractionKind retraction = RetractionKind::Cayley;
  Closure closure = Closure::Concatenation;
  double h = 0.1;
  double t_end = 20.0;
  // order-study only; strictly decreasing, at least 4 values.
  std::vector<double> h_list;
  InitialCondition ic;
  std::map<std::string, std::string> params;
  SolverConfig solver;
  Execution execution = Execution::Parallel;
  std::string output;
  std::string plot_script;

  /// Throws InvalidConfig on any violated invariant.
  void validate() const;
};

using Setting = std::pair<std::string, std::string>;

/// Defaults for a command and system, before any setting is applied.
ExperimentConfig default_config(Command command, SystemKind system);

/**
 * Applies one setting. Keys are the long flag names without dashes:
 * system, stages, retraction, closure, h, t-end, h-list, out, plot-script,
 * param (value "key=value"), ic-g, ic-eta, ic-lambda, ic-format, jacobian,
 * newton-tol, max-iter, execution.
 */
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat key=value lines; blank lines and lines starting with '#' are skipped.
std::vector<Setting> read_settings(std::istream& in);
std::vector<Setting> read_settings_file(const std::string& path);

/// Defaults for the `system` named last in (file, flags), then file settings, then flags.
ExperimentConfig make_config(Command command, const std::vector<Setting>& file_settings,
                             const std::vector<Setting>& flag_settings);

using AnySystem = std::variant<SphericalPendulum, SphericalKepler>;

/// Pendulum params: m, M_reg, alpha, gamma (a,b,c). Kepler params: m, M_reg, rho, X (a,b,c).
AnySystem make_system(SystemKind kind, const std::map<std::string, std::string>& params);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

struct TrajectoryRow
{
  double t = 0.0;
  GroupElement g = GroupElement::Identity();
  TaitBryanAngles angles;
  Eigen::Vector3d eta = Eigen::Vector3d::Zero();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double energy_error = 0.0;
  double lambda_s = 0.0;
  double phi_max = 0.0;
};

/// ceil(t_end / h) steps; row 0 is the initial state.
std::vector<TrajectoryRow> simulate(const ExperimentConfig& config);
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows);

struct OrderPoint
{
  int stages = 0;
  double h = 0.0;
  // ||g_N - g_ref(t_N)||_F at t_N = round(t_end / h) h.
  double global_error = 0.0;
  // max_k |Lambda^s_k - lambda_ref(t_k)|.
  double lambda_error = 0.0;
};

struct OrderFit
{
  int stages = 0;
  // NaN when fewer than two points lie above the floor.
  double g_slope = 0.0;
  double lambda_slope = 0.0;
  int g_points = 0;
  int lambda_points = 0;
};

struct OrderStudy
{
  std::vector<OrderPoint> points;
  std::vector<OrderFit> fits;
  double reference_gap = 0.0;
};

/// Errors below this are treated as the solver floor and left out of slope fits.
inline constexpr double kOrderFitFloor = 1e-11;

OrderStudy order_study(const ExperimentConfig& config);
void write_order_csv(std::ostream& out, const OrderStudy& study);

struct EnergySample
{
  double t = 0.0;
  double energy_error = 0.0;
  double lambda_s = 0.0;
};

struct EnergyStudy
{
  std::vector<EnergySample> samples;
  double energy_slope = 0.0;
  // Half the peak-to-peak range of E_err.
  double energy_amplitude = 0.0;
  double lambda_slope = 0.0;
  double baseline_lambda_slope = 0.0;
  bool lambda_drift = false;
};

/// Lambda slopes below this magnitude count as no drift when comparing against the baseline.
inline constexpr double kLambdaSlopeFloor = 1e-8;

/// Runs the configured method and, for the drift flag, the same setup with 2 stages.
EnergyStudy energy_study(const ExperimentConfig& config);
void write_energy_csv(std::ostream& out, std::span<const EnergySample> samples);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log(err) against log(h) over the points with err >= floor; NaN with fewer than two.
double loglog_slope(std::span<const double> h, std::span<const double> err, double floor,
                    int* used = nullptr);

/// Small matplotlib script plotting the CSV written by `command`.
std::string plot_script(Command command, const std::string& csv_path);

}  // namespace nhrkmk
