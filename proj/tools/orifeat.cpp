#include <cstdlib>
#include <iostream>

#include "commands.hpp"

using namespace orifeat::cli;

namespace {

constexpr int kUsageError = 2;
constexpr int kRunError = 1;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orifeat: rotation-aware backbone features and comparative trajectory analysis"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand name.
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags override it");
  app.get_config_ptr()->check(CLI::ExistingFile);

  Globals globals;
  app.add_option("--seed", globals.seed, "seed for every randomized step")->configurable();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides ORIFEAT_THREADS)")->check(CLI::PositiveNumber);

  std::vector<Command> commands = {add_featurize(app), add_kinetics(app), add_similarity(app), add_cluster(app),
                                   add_correlate(app), add_associate(app), add_profile(app),  add_synth(app)};

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (threads > 0) setenv("ORIFEAT_THREADS", std::to_string(threads).c_str(), 1);

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      cmd.run(globals);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << cmd.app->get_name() << ": " << e.what() << '\n';
    }
    return kRunError;
  }
  return kUsageError;
}
