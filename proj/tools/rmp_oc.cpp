// Command-line front end: run, validate and list scenario files.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rmp/cli/config.hpp"
#include "rmp/cli/recipes.hpp"
#include "rmp/cli/run.hpp"

namespace {

using namespace rmp::cli;

ScenarioFile load(const std::string& config, const std::string& recipe, const Overrides& ov) {
  if (!recipe.empty()) {
    const auto* r = find_recipe(recipe);
    if (!r) throw ConfigError("recipe '" + recipe + "' not found (see 'recipes')");
    return parse_scenario(std::string(r->document), ov);
  }
  return load_scenario(config, ov);
}

Overrides merged_overrides(std::optional<std::uint64_t> seed, std::optional<std::uint64_t> reps) {
  Overrides ov = env_overrides();
  if (seed) ov.seed = seed;
  if (reps) ov.reps = reps;
  if (ov.reps && *ov.reps == 0) throw ConfigError("--reps: must be >= 1");
  return ov;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operating characteristics of robust mixture priors"};
  app.require_subcommand(1);

  std::string config, recipe, out_dir = "oc_out";
  std::optional<std::uint64_t> seed, reps;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run every sweep of a scenario file or recipe");
  auto* cfg_opt = run->add_option("--config", config, "Scenario JSON file")->check(CLI::ExistingFile);
  run->add_option("--recipe", recipe, "Built-in recipe name")->excludes(cfg_opt);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--reps", reps, "Override Monte Carlo replications")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  std::string validate_config, validate_recipe;
  auto* validate = app.add_subcommand("validate", "Check a scenario file and estimate its cost");
  auto* vcfg = validate->add_option("--config", validate_config, "Scenario JSON file");
  validate->add_option("--recipe", validate_recipe, "Built-in recipe name")->excludes(vcfg);

  std::string show;
  auto* list = app.add_subcommand("recipes", "List built-in recipes");
  list->add_option("--show", show, "Print the scenario document of one recipe");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (config.empty() && recipe.empty()) throw ConfigError("run: give --config or --recipe");
      const auto file = load(config, recipe, merged_overrides(seed, reps));
      const auto outcome = run_scenario(file, out_dir, rmp::Exec{.threads = threads}, std::cout);
      std::cout << "wrote " << outcome.csv.string() << " and " << outcome.sidecar.string() << '\n';
      return 0;
    }
    if (*validate) {
      if (validate_config.empty() && validate_recipe.empty()) throw ConfigError("validate: give --config or --recipe");
      const auto file = load(validate_config, validate_recipe, env_overrides());
      std::uint64_t cells = 0, mc = 0;
      for (const auto& s : file.sweeps) {
        validate_sweep(s);
        const auto c = estimate_cost(s);
        std::cout << s.id << " [" << analysis_name(s.analysis) << "]: " << c.cells << " cells, " << c.mc_reps
                  << " simulated trials\n";
        cells += c.cells;
        mc += c.mc_reps;
      }
      std::cout << "OK: " << file.sweeps.size() << " sweeps, " << cells << " cells, " << mc
                << " simulated trials (cells x reps)\n";
      return 0;
    }
    if (*list) {
      if (!show.empty()) {
        const auto* r = find_recipe(show);
        if (!r) throw ConfigError("recipe '" + show + "' not found");
        std::cout << r->document << '\n';
        return 0;
      }
      for (const auto& r : recipes()) std::cout << r.name << "  " << r.summary << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
