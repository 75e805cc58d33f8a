#include <iostream>

#include <CLI11.hpp>

#include "estkit/cli/commands.hpp"

using namespace estkit::cli;

int main(int argc, char** argv) {
  CLI::App app{"estkit: Kalman-family state estimation with oracle cross-checks"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* config = sub->add_option("--config", opts.config, "Scenario document (JSON)");
    if (needs_config) config->required()->check(CLI::ExistingFile);
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
  };

  auto* simulate = app.add_subcommand("simulate", "Sample a ground-truth trajectory to CSV");
  add_common(simulate, true);
  simulate->add_option("--out", opts.out, "Output CSV (default: stdout)");
  simulate->add_option("--seed", seed, "Override the document's seed");

  auto* run = app.add_subcommand("run", "Run one filter over a simulated trajectory");
  add_common(run, true);
  run->add_option("--out", opts.out, "Output CSV (default: stdout)");
  run->add_option("--seed", seed, "Override the document's seed");
  run->add_option("--filter", opts.filters, "Filter id: kf, kf1d, ekf, iekf, eskf, ieskf, dr")->expected(1);

  auto* compare = app.add_subcommand("compare", "Run several filters on one shared trajectory");
  add_common(compare, true);
  compare->add_option("--out", opts.out, "Output CSV (default: stdout)");
  compare->add_option("--seed", seed, "Override the document's seed");
  compare->add_option("--filter", opts.filters, "Comma-separated filter ids")->delimiter(',');

  auto* validate = app.add_subcommand("validate", "Run an oracle validation suite");
  validate->add_option("--suite", opts.suite, "grid-vs-kf, gn-vs-iekf, cost-vs-ieskf, linear-collapse, jacobians")
      ->required();
  validate->add_flag("--quiet", opts.quiet, "Print failing checks only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json(kExitUsage, "usage", e.what()) << '\n';
    return kExitUsage;
  }

  for (auto* sub : {simulate, run, compare}) {
    if (sub->parsed() && sub->count("--seed") > 0) opts.seed = seed;
  }
  if (simulate->parsed()) return cmd_simulate(opts, std::cout, std::cerr);
  if (run->parsed()) return cmd_run(opts, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(opts, std::cout, std::cerr);
  return cmd_validate(opts, std::cout, std::cerr);
}
