// ddprm: simulate rating data, fit the mixture model, compare fits
#include <CLI11.hpp>
#include <iostream>

#include "ddprm/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet process rating model toolkit"};
  app.require_subcommand(1);

  ddprm::SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "generate rating data");
  simulate->add_option("--preset", sim.preset,
                       "scenario (paper-sim, small-dif)");
  simulate->add_option("--examinees", sim.examinees, "examinee count");
  simulate->add_option("--items", sim.items, "item count");
  simulate->add_option("--seed", sim.seed, "generator seed");
  simulate->add_option("--out", sim.out_dir, "output directory");

  ddprm::FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "run the sampler");
  fit_cmd->add_option("--config", fit.config_path, "config file");
  fit_cmd->add_option("--preset", fit.preset,
                      "config preset (paper-sim, verbal-aggression)");
  fit_cmd->add_option("--data", fit.data_path, "rating CSV");
  fit_cmd->add_option("--iterations", fit.iterations, "total iterations");
  fit_cmd->add_option("--burnin", fit.burnin, "burn-in iterations");
  fit_cmd->add_option("--thin", fit.thin, "thinning stride");
  fit_cmd->add_option("--seed", fit.seed, "chain seed");
  fit_cmd->add_option("--chains", fit.chains, "independent chains");
  fit_cmd->add_option("--out", fit.out_dir, "output directory");
  fit_cmd->add_option("--set", fit.overrides,
                      "config override key=value (repeatable)");

  ddprm::CompareArgs cmp;
  CLI::App* compare = app.add_subcommand("compare", "rank fitted models");
  compare->add_option("inputs", cmp.inputs,
                      "[label=]path to archive .bin or prediction .csv");
  compare->add_option("--report", cmp.report_path, "write JSON report");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return ddprm::cmd_simulate(sim, std::cout, std::cerr);
  }
  if (fit_cmd->parsed()) return ddprm::cmd_fit(fit, std::cout, std::cerr);
  return ddprm::cmd_compare(cmp, std::cout, std::cerr);
}
