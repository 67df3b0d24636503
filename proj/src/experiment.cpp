#include "nhrkmk/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nhrkmk/oracle.hpp"
#include "nhrkmk/sphere.hpp"
#include "nhrkmk/tableau.hpp"

namespace nhrkmk {

namespace {

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view key, std::string_view text)
{
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidConfig(std::string(key) + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

int parse_int(std::string_view key, std::string_view text)
{
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidConfig(std::string(key) + ": '" + std::string(text) + "' is not an integer");
  }
  return value;
}

std::vector<double> parse_doubles(std::string_view key, std::string_view text)
{
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(parse_double(key, part));
  return out;
}

Eigen::Vector3d parse_vector3(std::string_view key, std::string_view text)
{
  const auto v = parse_doubles(key, text);
  if (v.size() != 3) throw InvalidConfig(std::string(key) + ": expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

struct StepRecord
{
  StepState state;
  double lambda_s = 0.0;
  double phi_max = 0.0;
};

int step_count(double t_end, double h)
{
  if (t_end <= 0.0) return 0;
  return static_cast<int>(std::ceil(t_end / h - 1e-9));
}

template <LagrangianSystem System>
std::vector<StepRecord> integrate(const System& sys, const ExperimentConfig& config, int stages,
                                  double h, int steps)
{
  SolverConfig solver = config.solver;
  solver.retraction = config.retraction;
  const Integrator<System> integrator(sys, lobatto(stages), h, solver);

  std::vector<StepRecord> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  StepState state = integrator.initial_state(config.ic.group_element(), config.ic.eta, config.ic.lambda);
  out.push_back({state, state.lambda_carry, std::abs(phi(config.ic.eta))});
  for (int k = 0; k < steps; ++k) {
    const StepResult r = integrator.step(state, config.closure);
    state = r.state;
    out.push_back({state, r.stages.stages.back().lambda, r.stages.constraint_max});
  }
  return out;
}

int single_stage(const ExperimentConfig& config)
{
  if (config.stages.size() != 1) throw InvalidConfig("this command takes a single --stages value");
  return config.stages.front();
}

}  // namespace

std::string_view to_string(SystemKind kind)
{
  return kind == SystemKind::Pendulum ? "pendulum" : "kepler";
}

SystemKind parse_system(std::string_view name)
{
  if (name == "pendulum") return SystemKind::Pendulum;
  if (name == "kepler") return SystemKind::Kepler;
  throw InvalidConfig("unknown system '" + std::string(name) + "' (expected pendulum|kepler)");
}

std::string_view to_string(IcFormat format)
{
  return format == IcFormat::TaitBryan ? "tait-bryan" : "exp";
}

IcFormat parse_ic_format(std::string_view name)
{
  if (name == "tait-bryan") return IcFormat::TaitBryan;
  if (name == "exp") return IcFormat::ExpCoords;
  throw InvalidConfig("unknown ic format '" + std::string(name) + "' (expected tait-bryan|exp)");
}

GroupElement InitialCondition::group_element() const
{
  if (format == IcFormat::TaitBryan) return from_tait_bryan(g);
  return tau(RetractionKind::Exponential, Eigen::Vector3d(g));
}

void ExperimentConfig::validate() const
{
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidConfig("h must be positive and finite");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidConfig("t-end must be non-negative");
  if (stages.empty()) throw InvalidConfig("at least one stage count is required");
  for (int s : stages) {
    if (s < 2 || s > 4) throw UnsupportedStageCount("stages must be 2, 3 or 4");
  }
  if (command != Command::OrderStudy && stages.size() != 1) {
    throw InvalidConfig("simulate and energy-study take a single --stages value");
  }
  if (command == Command::OrderStudy) {
    if (h_list.size() < 4) throw InvalidConfig("order-study needs at least 4 step sizes");
    for (std::size_t i = 0; i < h_list.size(); ++i) {
      if (!(h_list[i] > 0.0)) throw InvalidConfig("h-list entries must be positive");
      if (i > 0 && !(h_list[i] < h_list[i - 1])) throw InvalidConfig("h-list must be strictly decreasing");
    }
    if (!(t_end > 0.0)) throw InvalidConfig("order-study needs t-end > 0");
  }
  if (!(solver.newton_tol > 0.0)) throw InvalidConfig("newton-tol must be positive");
  if (solver.max_iter < 1) throw InvalidConfig("max-iter must be at least 1");
}

ExperimentConfig default_config(Command command, SystemKind system)
{
  ExperimentConfig c;
  c.command = command;
  c.system = system;
  c.ic.lambda = 0.0;
  if (system == SystemKind::Pendulum) {
    c.ic.g = {0.0, std::numbers::pi / 3.0, 0.0};
    c.ic.eta = {1.0 / 3.0, 0.0, 0.0};
    c.retraction = RetractionKind::Cayley;
    c.h = 0.1;
  } else {
    c.ic.g = {0.940125174120388, -0.693184358892293, 3.007331043590061};
    c.ic.eta = {1.534184084268850, 0.0, 0.0};
    c.retraction = RetractionKind::Exponential;
    c.h = 0.01;
  }
  switch (command) {
    case Command::Simulate:
      c.t_end = 20.0;
      break;
    case Command::EnergyStudy:
      c.t_end = 200.0;
      break;
    case Command::OrderStudy:
      c.stages = {2, 3, 4};
      c.retraction = RetractionKind::Exponential;
      if (system == SystemKind::Pendulum) {
        c.t_end = 5.0;
        c.h_list = {0.2, 0.1, 0.05, 0.025, 0.0125};
      } else {
        c.t_end = 1.0;
        c.h_list = {0.05, 0.025, 0.0125, 0.00625};
      }
      break;
  }
  return c;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value)
{
  key = trim(key);
  value = trim(value);
  if (key == "system") {
    c.system = parse_system(value);
  } else if (key == "stages") {
    c.stages.clear();
    for (auto part : split(value, ',')) c.stages.push_back(parse_int(key, part));
  } else if (key == "retraction") {
    c.retraction = parse_retraction(value);
  } else if (key == "closure") {
    c.closure = parse_closure(value);
  } else if (key == "h") {
    c.h = parse_double(key, value);
  } else if (key == "t-end") {
    c.t_end = parse_double(key, value);
  } else if (key == "h-list") {
    c.h_list = parse_doubles(key, value);
  } else if (key == "out") {
    c.output = std::string(value);
  } else if (key == "plot-script") {
    c.plot_script = std::string(value);
  } else if (key == "param") {
    const auto eq = value.find('=');
    if (eq == std::string_view::npos) throw InvalidConfig("param: expected key=value, got '" + std::string(value) + "'");
    c.params[std::string(trim(value.substr(0, eq)))] = std::string(trim(value.substr(eq + 1)));
  } else if (key == "ic-g") {
    c.ic.g = parse_vector3(key, value);
  } else if (key == "ic-eta") {
    c.ic.eta = parse_vector3(key, value);
  } else if (key == "ic-lambda") {
    if (value == "auto") {
      c.ic.lambda.reset();
    } else {
      c.ic.lambda = parse_double(key, value);
    }
  } else if (key == "ic-format") {
    c.ic.format = parse_ic_format(value);
  } else if (key == "jacobian") {
    c.solver.jacobian = parse_jacobian(value);
  } else if (key == "newton-tol") {
    c.solver.newton_tol = parse_double(key, value);
  } else if (key == "max-iter") {
    c.solver.max_iter = parse_int(key, value);
  } else if (key == "execution") {
    c.execution = parse_execution(value);
  } else {
    throw InvalidConfig("unknown setting '" + std::string(key) + "'");
  }
}

std::vector<Setting> read_settings(std::istream& in)
{
  std::vector<Setting> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidConfig("config line " + std::to_string(number) + ": expected key = value");
    }
    out.emplace_back(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }
  return out;
}

std::vector<Setting> read_settings_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
  return read_settings(in);
}

ExperimentConfig make_config(Command command, const std::vector<Setting>& file_settings,
                             const std::vector<Setting>& flag_settings)
{
  SystemKind system = SystemKind::Pendulum;
  for (const auto* list : {&file_settings, &flag_settings}) {
    for (const auto& [key, value] : *list) {
      if (trim(key) == "system") system = parse_system(trim(value));
    }
  }
  ExperimentConfig c = default_config(command, system);
  for (const auto& [key, value] : file_settings) apply_setting(c, key, value);
  for (const auto& [key, value] : flag_settings) apply_setting(c, key, value);
  c.validate();
  return c;
}

AnySystem make_system(SystemKind kind, const std::map<std::string, std::string>& params)
{
  if (kind == SystemKind::Pendulum) {
    PendulumParams p;
    for (const auto& [key, value] : params) {
      if (key == "m") {
        p.m = parse_double(key, value);
      } else if (key == "M_reg" || key == "M") {
        p.M_reg = parse_double(key, value);
      } else if (key == "alpha") {
        p.gamma = Eigen::Vector3d(0.0, 0.0, -parse_double(key, value));
      } else if (key == "gamma") {
        p.gamma = parse_vector3(key, value);
      } else {
        throw InvalidConfig("unknown pendulum parameter '" + key + "' (m, M_reg, alpha, gamma)");
      }
    }
    return SphericalPendulum(p);
  }
  KeplerParams p;
  for (const auto& [key, value] : params) {
    if (key == "m") {
      p.m = parse_double(key, value);
    } else if (key == "M_reg" || key == "M") {
      p.M_reg = parse_double(key, value);
    } else if (key == "rho") {
      p.rho = parse_double(key, value);
    } else if (key == "X") {
      p.X = parse_vector3(key, value);
    } else {
      throw InvalidConfig("unknown kepler parameter '" + key + "' (m, M_reg, rho, X)");
    }
  }
  return SphericalKepler(p);
}

std::string format_double(double value)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<TrajectoryRow> simulate(const ExperimentConfig& config)
{
  config.validate();
  const int stages = single_stage(config);
  const AnySystem any = make_system(config.system, config.params);
  return std::visit(
      [&](const auto& sys) {
        const auto records = integrate(sys, config, stages, config.h, step_count(config.t_end, config.h));
        std::vector<TrajectoryRow> rows;
        rows.reserve(records.size());
        const StepState& first = records.front().state;
        const double e0 = sys.energy(first.g, sys.momentum_inv(first.mu));
        for (const auto& rec : records) {
          TrajectoryRow row;
          row.t = rec.state.t;
          row.g = rec.state.g;
          row.angles = to_tait_bryan(rec.state.g);
          row.eta = sys.momentum_inv(rec.state.mu);
          row.position = rec.state.g * origin();
          row.energy_error = sys.energy(rec.state.g, row.eta) - e0;
          row.lambda_s = rec.lambda_s;
          row.phi_max = rec.phi_max;
          rows.push_back(row);
        }
        return rows;
      },
      any);
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows)
{
  out << "t,g00,g01,g02,g10,g11,g12,g20,g21,g22,theta1,theta2,theta3,eta1,eta2,eta3,x1,x2,x3,"
         "E_err,lambda_s,phi_max,gimbal\n";
  for (const auto& r : rows) {
    out << format_double(r.t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out << ',' << format_double(r.g(i, j));
    }
    for (int i = 0; i < 3; ++i) out << ',' << format_double(r.angles.angles(i));
    for (int i = 0; i < 3; ++i) out << ',' << format_double(r.eta(i));
    for (int i = 0; i < 3; ++i) out << ',' << format_double(r.position(i));
    out << ',' << format_double(r.energy_error) << ',' << format_double(r.lambda_s) << ','
        << format_double(r.phi_max) << ',' << (r.angles.gimbal_lock ? 1 : 0) << '\n';
  }
}

OrderStudy order_study(const ExperimentConfig& config)
{
  config.validate();
  const AnySystem any = make_system(config.system, config.params);
  return std::visit(
      [&](const auto& sys) {
        const GroupElement g0 = config.ic.group_element();
        const std::size_t nh = config.h_list.size();
        std::vector<int> steps(nh);
        for (std::size_t i = 0; i < nh; ++i) {
          steps[i] = static_cast<int>(std::lround(config.t_end / config.h_list[i]));
        }

        const auto references = run_cases<ReferenceTrajectory>(
            nh,
            [&](std::size_t i) {
              ReferenceOptions opts;
              opts.h_ref = config.h_list[i] / 1000.0;
              return reference_solve(sys, g0, config.ic.eta, steps[i] * config.h_list[i],
                                     config.h_list[i], opts);
            },
            config.execution);

        OrderStudy study;
        for (const auto& ref : references) study.reference_gap = std::max(study.reference_gap, ref.richardson_gap);

        const std::size_t ns = config.stages.size();
        study.points = run_cases<OrderPoint>(
            ns * nh,
            [&](std::size_t c) {
              const std::size_t si = c / nh;
              const std::size_t hi = c % nh;
              const auto records = integrate(sys, config, config.stages[si], config.h_list[hi], steps[hi]);
              const auto& ref = references[hi].samples;
              OrderPoint p;
              p.stages = config.stages[si];
              p.h = config.h_list[hi];
              p.global_error = (records.back().state.g - ref.back().g).norm();
              for (std::size_t k = 1; k < records.size(); ++k) {
                p.lambda_error = std::max(p.lambda_error, std::abs(records[k].lambda_s - ref[k].lambda));
              }
              return p;
            },
            config.execution);

        for (std::size_t si = 0; si < ns; ++si) {
          std::vector<double> hs, ge, le;
          for (std::size_t hi = 0; hi < nh; ++hi) {
            const OrderPoint& p = study.points[si * nh + hi];
            hs.push_back(p.h);
            ge.push_back(p.global_error);
            le.push_back(p.lambda_error);
          }
          OrderFit fit;
          fit.stages = config.stages[si];
          fit.g_slope = loglog_slope(hs, ge, kOrderFitFloor, &fit.g_points);
          fit.lambda_slope = loglog_slope(hs, le, kOrderFitFloor, &fit.lambda_points);
          study.fits.push_back(fit);
        }
        return study;
      },
      any);
}

void write_order_csv(std::ostream& out, const OrderStudy& study)
{
  out << "stages,h,global_error,lambda_error\n";
  for (const auto& p : study.points) {
    out << p.stages << ',' << format_double(p.h) << ',' << format_double(p.global_error) << ','
        << format_double(p.lambda_error) << '\n';
  }
}

EnergyStudy energy_study(const ExperimentConfig& config)
{
  config.validate();
  const int stages = single_stage(config);
  const AnySystem any = make_system(config.system, config.params);
  const int steps = step_count(config.t_end, config.h);

  const auto lambda_slope_of = [](const std::vector<StepRecord>& records) {
    std::vector<double> t, l;
    for (std::size_t k = 1; k < records.size(); ++k) {
      t.push_back(records[k].state.t);
      l.push_back(records[k].lambda_s);
    }
    return t.size() < 2 ? 0.0 : fit_slope(t, l);
  };

  return std::visit(
      [&](const auto& sys) {
        const std::vector<int> runs = stages == 2 ? std::vector<int>{2} : std::vector<int>{stages, 2};
        const auto records = run_cases<std::vector<StepRecord>>(
            runs.size(), [&](std::size_t i) { return integrate(sys, config, runs[i], config.h, steps); },
            config.execution);

        EnergyStudy study;
        const auto& main = records.front();
        const StepState& first = main.front().state;
        const double e0 = sys.energy(first.g, sys.momentum_inv(first.mu));
        std::vector<double> t, e;
        double lo = 0.0, hi = 0.0;
        for (const auto& rec : main) {
          const double err = sys.energy(rec.state.g, sys.momentum_inv(rec.state.mu)) - e0;
          study.samples.push_back({rec.state.t, err, rec.lambda_s});
          t.push_back(rec.state.t);
          e.push_back(err);
          lo = std::min(lo, err);
          hi = std::max(hi, err);
        }
        study.energy_slope = t.size() < 2 ? 0.0 : fit_slope(t, e);
        study.energy_amplitude = 0.5 * (hi - lo);
        study.lambda_slope = lambda_slope_of(main);
        study.baseline_lambda_slope = lambda_slope_of(records.back());
        study.lambda_drift = std::abs(study.lambda_slope) >
                             10.0 * std::max(std::abs(study.baseline_lambda_slope), kLambdaSlopeFloor);
        return study;
      },
      any);
}

void write_energy_csv(std::ostream& out, std::span<const EnergySample> samples)
{
  out << "t,E_err,lambda_s\n";
  for (const auto& s : samples) {
    out << format_double(s.t) << ',' << format_double(s.energy_error) << ',' << format_double(s.lambda_s)
        << '\n';
  }
}

double fit_slope(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size() || x.size() < 2) throw InvalidConfig("fit_slope needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double loglog_slope(std::span<const double> h, std::span<const double> err, double floor, int* used)
{
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size() && i < err.size(); ++i) {
    if (err[i] >= floor && err[i] > 0.0) {
      lx.push_back(std::log(h[i]));
      ly.push_back(std::log(err[i]));
    }
  }
  if (used != nullptr) *used = static_cast<int>(lx.size());
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_slope(lx, ly);
}

std::string plot_script(Command command, const std::string& csv_path)
{
  std::ostringstream s;
  s << "import csv\nimport matplotlib.pyplot as plt\n\n"
    << "with open(" << '"' << csv_path << '"' << ") as f:\n"
    << "    rows = list(csv.DictReader(f))\n"
    << "col = lambda k: [float(r[k]) for r in rows]\n\n";
  switch (command) {
    case Command::Simulate:
      s << "fig, ax = plt.subplots(1, 3, figsize=(13, 4))\n"
        << "ax[0].plot(col('x1'), col('x2'))\nax[0].set_xlabel('x1')\nax[0].set_ylabel('x2')\n"
        << "ax[1].plot(col('t'), col('E_err'))\nax[1].set_xlabel('t')\nax[1].set_ylabel('E(t) - E(0)')\n"
        << "ax[2].plot(col('t'), col('lambda_s'))\nax[2].set_xlabel('t')\nax[2].set_ylabel('Lambda^s')\n";
      break;
    case Command::EnergyStudy:
      s << "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
        << "ax[0].plot(col('t'), col('E_err'))\nax[0].set_xlabel('t')\nax[0].set_ylabel('E(t) - E(0)')\n"
        << "ax[1].plot(col('t'), col('lambda_s'))\nax[1].set_xlabel('t')\nax[1].set_ylabel('Lambda^s')\n";
      break;
    case Command::OrderStudy:
      s << "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
        << "for s in sorted({r['stages'] for r in rows}):\n"
        << "    sel = [r for r in rows if r['stages'] == s]\n"
        << "    h = [float(r['h']) for r in sel]\n"
        << "    ax[0].loglog(h, [float(r['global_error']) for r in sel], 'o-', label=f's={s}')\n"
        << "    ax[1].loglog(h, [float(r['lambda_error']) for r in sel], 'o-', label=f's={s}')\n"
        << "ax[0].set_ylabel('global error')\nax[1].set_ylabel('multiplier error')\n"
        << "for a in ax:\n    a.set_xlabel('h')\n    a.legend()\n";
      break;
  }
  s << "plt.tight_layout()\nplt.show()\n";
  return s.str();
}

}  // namespace nhrkmk
