#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Coupled Boltzmann transport solver and treatment planner"};
  app.require_subcommand(1);
  bte::cli::Flags flags;

  struct Cmd {
    const char* name;
    const char* help;
    std::function<int(const bte::cli::Flags&)> run;
    bool config_required;
  };
  const Cmd cmds[] = {
      {"validate-xs", "check sub-criticality of the cross sections", bte::cli::cmd_validate_xs, true},
      {"solve", "stationary coupled solve; writes flux and dose", bte::cli::cmd_solve, true},
      {"evolve", "time-dependent evolution; writes a trajectory", bte::cli::cmd_evolve, true},
      {"dose", "stationary solve followed by the dose map", bte::cli::cmd_dose, true},
      {"plan-init", "initial tracking problem via the optimality fixed point", bte::cli::cmd_plan_init, true},
      {"optimize", "projected-gradient planning in phases", bte::cli::cmd_optimize, true},
      {"probe-regularity", "L^p norms of the closed-form flux gradient on shrinking balls",
       bte::cli::cmd_probe_regularity, false},
      {"oracle-mc", "analog Monte Carlo dose with standard errors", bte::cli::cmd_oracle_mc, true},
  };
  std::map<CLI::App*, const Cmd*> by_app;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    auto* opt = sub->add_option("config", flags.config, "scenario file");
    if (c.config_required) opt->required();
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::Range(1, 4096));
    sub->add_option("--tol", flags.tol, "source-iteration tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", flags.max_iter, "source-iteration cap")->check(CLI::Range(1, 100000000));
    sub->add_option("--seed", flags.seed, "Monte Carlo seed");
    sub->add_option("--particles", flags.particles, "Monte Carlo histories")->check(CLI::PositiveNumber);
    if (std::string(c.name) == "optimize")
      sub->add_option("--phase", flags.phase, "init, convex or dv")->check(CLI::IsMember({"init", "convex", "dv"}));
    if (std::string(c.name) == "probe-regularity")
      sub->add_option("--p", flags.p, "exponent 1, 2 or 3")->check(CLI::Range(1, 3));
    by_app[sub] = &c;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (const auto& [sub, cmd] : by_app)
    if (sub->parsed()) return cmd->run(flags);
  return 2;
}
