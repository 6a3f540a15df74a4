// dpmkit: convergence sweeps, method comparisons, sampling and plan inspection.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dpmkit/cli/commands.hpp"
#include "dpmkit/cli/config.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace dpmkit::cli;

  CLI::App app{"Exponential-integrator solvers for diffusion ODEs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  auto add_config_command = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--output", output, "CSV output path (overrides the config)");
    return sub;
  };
  CLI::App* convergence = add_config_command("convergence", "error vs step count for one solver");
  CLI::App* compare = add_config_command("compare", "all methods at shared NFE budgets");
  CLI::App* sample = add_config_command("sample", "solve from seeded N(0, I) initial states");

  CLI::App* plan = app.add_subcommand("plan", "print the step plan for an NFE budget");
  int budget = 0;
  std::string schedule = "linear";
  double T = 0.0;
  double eps = 0.0;
  plan->add_option("--nfe", budget, "NFE budget K")->required();
  plan->add_option("--schedule", schedule, "linear or cosine");
  plan->add_option("--T", T, "start time (default t_max)");
  plan->add_option("--eps", eps, "end time (default 1e-3 for K <= 15, else 1e-4)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (plan->parsed()) {
      if (budget < 1) throw ConfigError("--nfe must be at least 1");
      RunConfig cfg;
      cfg.schedule = schedule;
      const auto sched = cfg.make_schedule();
      const double t0 = T > 0.0 ? T : sched.t_max();
      const double t1 = eps > 0.0 ? eps : cfg.end_time(budget);
      if (t0 > sched.t_max() || !(t1 < t0)) throw ConfigError("need 0 < eps < T <= t_max");
      cmd_plan(budget, sched, t0, t1, std::cout);
      return 0;
    }

    RunConfig cfg = load_config(config_path);
    if (!output.empty()) cfg.output = output;
    if (convergence->parsed()) {
      const auto report = cmd_convergence(cfg, std::cerr);
      if (cfg.output.empty()) write_csv(std::cout, report.rows);
    } else if (compare->parsed()) {
      const auto rows = cmd_compare(cfg, std::cerr);
      if (cfg.output.empty()) write_csv(std::cout, rows);
    } else if (sample->parsed()) {
      cmd_sample(cfg, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
