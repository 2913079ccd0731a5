#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chns/cli.hpp"

namespace {

// Errors go to stderr as a single line: "error: <where>: <message>".
int fail(const std::string& where, const std::string& what) {
  std::cerr << "error: " << where << ": " << what << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DG Cahn-Hilliard-Navier-Stokes solver"};
  app.require_subcommand(1);

  std::string config_path, output;
  std::uint64_t seed = 0;
  std::vector<int> levels;

  auto* run = app.add_subcommand("run", "run one configuration");
  run->add_option("--config", config_path, "key = value configuration file")->required();
  auto* out_opt = run->add_option("--output", output, "output directory (overrides the config)");
  auto* seed_opt = run->add_option("--seed", seed, "random seed (overrides the config)");

  auto* conv = app.add_subcommand("convergence", "mesh refinement study of a manufactured problem");
  conv->add_option("--config", config_path, "base configuration")->required();
  conv->add_option("--levels", levels, "cells per axis, comma separated")->required()->delimiter(',');
  auto* conv_out = conv->add_option("--output", output, "output directory (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  chns::RunConfig cfg;
  try {
    cfg = chns::load_config(config_path);
  } catch (const chns::ConfigError& e) {
    return fail(config_path, e.what());
  } catch (const std::exception& e) {
    return fail("config", e.what());
  }
  if (*seed_opt) cfg.seed = seed;
  if (*out_opt || *conv_out) cfg.output = output;

  if (run->parsed()) {
    try {
      const chns::RunOutcome r = chns::run_config(cfg, cfg.output, &std::cout);
      if (!r.result.ok()) return fail("run", r.result.error);
      if (r.errors)
        std::cout << "l2 errors: c " << r.errors->c << " u " << r.errors->u << " p " << r.errors->p << "\n";
    } catch (const std::exception& e) {
      return fail("run", e.what());
    }
    return 0;
  }

  try {
    const chns::ConvergenceOutcome c = chns::run_convergence(cfg, levels, cfg.output, &std::cout);
    std::cout << chns::convergence_csv(c.rows);
    if (!c.ok()) return fail("convergence", c.error);
  } catch (const std::exception& e) {
    return fail("convergence", e.what());
  }
  return 0;
}
