#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nhrkmk/errors.hpp"
#include "nhrkmk/experiment.hpp"

namespace {

using nhrkmk::Command;
using nhrkmk::Setting;

struct Flags
{
  std::string config;
};

// Every option is a string; the experiment layer parses and validates values.
void add_options(CLI::App& app, Flags& flags, std::map<std::string, std::string>& values,
                 std::vector<std::string>& params)
{
  static const char* names[][2] = {
      {"system", "pendulum|kepler"},
      {"stages", "2|3|4 (order-study accepts a list, e.g. 2,3,4)"},
      {"retraction", "exp|cay"},
      {"closure", "concat|zero-first|weighted-zero"},
      {"h", "step size"},
      {"t-end", "duration"},
      {"h-list", "order-study step sizes, strictly decreasing"},
      {"out", "output CSV path (stdout when omitted)"},
      {"plot-script", "also write a matplotlib script for the CSV"},
      {"ic-g", "initial attitude a,b,c"},
      {"ic-eta", "initial body velocity a,b,c"},
      {"ic-lambda", "initial multiplier, or 'auto' for the continuous value"},
      {"ic-format", "tait-bryan|exp"},
      {"jacobian", "analytic|fd"},
      {"newton-tol", "stage solver residual tolerance"},
      {"max-iter", "stage solver iteration cap"},
      {"execution", "serial|parallel"},
  };
  for (const auto& [name, help] : names) {
    app.add_option(std::string("--") + name, values[name], help);
  }
  app.add_option("--param", params, "system parameter override key=value (repeatable)");
  app.add_option("--config", flags.config, "key=value config file; flags override it");
}

std::vector<Setting> collect(const CLI::App& app, const std::map<std::string, std::string>& values,
                             const std::vector<std::string>& params)
{
  std::vector<Setting> out;
  for (const auto& [name, value] : values) {
    if (app.count("--" + name) > 0) out.emplace_back(name, value);
  }
  for (const auto& p : params) out.emplace_back("param", p);
  return out;
}

template <typename Write>
void emit(const std::string& path, const Write& write)
{
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw nhrkmk::InvalidConfig("cannot open output file '" + path + "'");
  write(out);
}

std::ostream& summary_stream(const nhrkmk::ExperimentConfig& c)
{
  return (c.output.empty() || c.output == "-") ? std::cerr : std::cout;
}

void write_plot_script(const nhrkmk::ExperimentConfig& c)
{
  if (c.plot_script.empty()) return;
  std::ofstream out(c.plot_script);
  if (!out) throw nhrkmk::InvalidConfig("cannot open plot script path '" + c.plot_script + "'");
  out << nhrkmk::plot_script(c.command, c.output.empty() ? "trajectory.csv" : c.output);
}

int run(Command command, const Flags& flags, const std::vector<Setting>& settings)
{
  const auto file = flags.config.empty() ? std::vector<Setting>{} : nhrkmk::read_settings_file(flags.config);
  const nhrkmk::ExperimentConfig c = nhrkmk::make_config(command, file, settings);

  switch (command) {
    case Command::Simulate: {
      const auto rows = nhrkmk::simulate(c);
      emit(c.output, [&](std::ostream& os) { nhrkmk::write_trajectory_csv(os, rows); });
      break;
    }
    case Command::OrderStudy: {
      const auto study = nhrkmk::order_study(c);
      emit(c.output, [&](std::ostream& os) { nhrkmk::write_order_csv(os, study); });
      std::ostream& os = summary_stream(c);
      for (const auto& fit : study.fits) {
        os << "stages=" << fit.stages << " g_slope=" << nhrkmk::format_double(fit.g_slope) << " ("
           << fit.g_points << " pts) lambda_slope=" << nhrkmk::format_double(fit.lambda_slope) << " ("
           << fit.lambda_points << " pts)\n";
      }
      os << "reference_gap=" << nhrkmk::format_double(study.reference_gap) << '\n';
      break;
    }
    case Command::EnergyStudy: {
      const auto study = nhrkmk::energy_study(c);
      emit(c.output, [&](std::ostream& os) { nhrkmk::write_energy_csv(os, study.samples); });
      std::ostream& os = summary_stream(c);
      os << "energy_slope=" << nhrkmk::format_double(study.energy_slope)
         << " energy_amplitude=" << nhrkmk::format_double(study.energy_amplitude)
         << " lambda_slope=" << nhrkmk::format_double(study.lambda_slope)
         << " baseline_lambda_slope=" << nhrkmk::format_double(study.baseline_lambda_slope)
         << " lambda_drift=" << (study.lambda_drift ? "yes" : "no") << '\n';
      break;
    }
  }
  write_plot_script(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Nonholonomic partitioned RKMK integrators on the sphere"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help message and exit");

  struct Sub
  {
    Command command;
    CLI::App* app;
    Flags flags;
    std::map<std::string, std::string> values;
    std::vector<std::string> params;
  };
  std::vector<Sub> subs(3);
  const std::pair<Command, const char*> defs[] = {
      {Command::Simulate, "simulate"},
      {Command::OrderStudy, "order-study"},
      {Command::EnergyStudy, "energy-study"},
  };
  const char* help[] = {
      "integrate one trajectory and write per-step CSV",
      "global and multiplier error against the reference solver for each h",
      "energy error and multiplier evolution with drift slopes",
  };
  for (int i = 0; i < 3; ++i) {
    subs[i].command = defs[i].first;
    subs[i].app = app.add_subcommand(defs[i].second, help[i]);
    subs[i].app->set_help_flag("--help", "print this help message and exit");
    add_options(*subs[i].app, subs[i].flags, subs[i].values, subs[i].params);
  }

  CLI11_PARSE(app, argc, argv);

  int status = 0;
  for (auto& sub : subs) {
    if (!sub.app->parsed()) continue;
    try {
      status = run(sub.command, sub.flags, collect(*sub.app, sub.values, sub.params));
    } catch (const nhrkmk::NewtonDivergence& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 2;
    } catch (const nhrkmk::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
    }
  }
  return status;
}
