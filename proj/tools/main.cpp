#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "fermiwalk/acceptance.hpp"
#include "fermiwalk/config.hpp"
#include "fermiwalk/driver.hpp"
#include "fermiwalk/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: out)");
  cmd->add_option("--seed", args.seed, "override the walk / sampling seed");
  cmd->add_option("--threads", args.threads, "worker count (default: 1)");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermionic quantum walk coupled to a traced bosonic reservoir"};
  app.require_subcommand(1);

  CommonArgs prop, spec, conv, gen;
  add_common(app.add_subcommand("propagate",
                                "evolve an observable over a (lambda, t) grid"),
             prop);
  add_common(app.add_subcommand(
                 "spectral", "peripheral/decaying split and assumption checks"),
             spec);
  add_common(app.add_subcommand("converge",
                                "distance of an evolved state to its limit"),
             conv);
  add_common(
      app.add_subcommand("genericity", "Haar sampling of minors and checks"),
      gen);
  app.add_subcommand("verify", "run the full acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto run = [](const CommonArgs& args,
                  void (*runner)(const fqw::ExperimentConfig&,
                                 const std::string&)) {
      if (args.out_dir.empty())
        throw fqw::InvalidInput("--out: must not be empty");
      fqw::ConfigOverrides ov;
      ov.seed = args.seed;
      ov.threads = args.threads;
      runner(fqw::load_config(args.config_path, ov), args.out_dir);
    };
    if (app.got_subcommand("propagate")) run(prop, fqw::run_propagate);
    if (app.got_subcommand("spectral")) run(spec, fqw::run_spectral);
    if (app.got_subcommand("converge")) run(conv, fqw::run_converge);
    if (app.got_subcommand("genericity")) run(gen, fqw::run_genericity);
    if (app.got_subcommand("verify"))
      return fqw::run_acceptance(std::cout) == 0 ? 0 : 1;
  } catch (const fqw::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fqw::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const fqw::HypothesisViolation& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
