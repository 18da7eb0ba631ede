// Command-line front end: run bundled or file-based scenarios, validate
// them without computing, and list what ships with the engine.
//
// Exit codes: 0 all verdicts pass, 1 verdict failure, 2 parse error,
// 3 validation error, 4 numerical abort.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stoq/runner.hpp"
#include "stoq/scenario.hpp"

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("STOQ_OUT_DIR");
  return env ? env : ".";
}

int cmd_run(const std::string& scenario_arg, const std::string& out_dir,
            std::optional<std::uint64_t> seed, int threads) {
  stoq::Scenario sc;
  try {
    sc = stoq::load_scenario(scenario_arg);
  } catch (const stoq::ScenarioParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const stoq::ScenarioValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  }

  stoq::RunOptions opt;
  opt.out_dir = out_dir;
  opt.seed = seed;
  opt.threads = threads;
  try {
    const stoq::RunManifest man = stoq::run_scenario(sc, opt);
    for (const auto& v : man.verdicts)
      std::printf("[%s] %-55s value=%.6g tol=%.6g\n",
                  v.pass ? "PASS" : "FAIL", v.name.c_str(), v.value,
                  v.tolerance);
    std::printf("manifest: %s/manifest.json\n", out_dir.c_str());
    return man.all_pass() ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 4;
  }
}

int cmd_validate(const std::string& scenario_arg) {
  try {
    const stoq::Scenario sc = stoq::load_scenario(scenario_arg);
    std::cout << stoq::validate_report(sc);
    return 0;
  } catch (const stoq::ScenarioParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const stoq::ScenarioValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic quantization engine"};
  app.require_subcommand(1);

  std::string scenario_arg;
  std::string out_dir = default_out_dir();
  std::optional<std::uint64_t> seed;
  std::uint64_t seed_raw = 0;
  int threads = 1;

  auto* run = app.add_subcommand("run", "execute a scenario");
  run->add_option("scenario", scenario_arg,
                  "bundled scenario name or path to a scenario file")
      ->required();
  run->add_option("--out", out_dir, "output directory (env: STOQ_OUT_DIR)");
  auto* seed_opt =
      run->add_option("--seed", seed_raw, "override the scenario master seed");
  run->add_option("--threads", threads, "worker threads for ensembles");

  auto* validate = app.add_subcommand("validate",
                                      "parse and validate without computing");
  validate->add_option("scenario", scenario_arg, "scenario name or file")
      ->required();

  auto* list = app.add_subcommand("list", "list bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& n : stoq::list_scenarios()) std::cout << n << "\n";
    return 0;
  }
  if (validate->parsed()) return cmd_validate(scenario_arg);
  if (seed_opt->count() > 0) seed = seed_raw;
  return cmd_run(scenario_arg, out_dir, seed, threads);
}
