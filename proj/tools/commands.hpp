#pragma once

#include <functional>

#include "cli_support.hpp"

namespace orifeat::cli {

using Runner = std::function<void(const Globals&)>;

struct Command {
  CLI::App* app = nullptr;
  Runner run;
};

Command add_featurize(CLI::App& root);
Command add_kinetics(CLI::App& root);
Command add_similarity(CLI::App& root);
Command add_cluster(CLI::App& root);
Command add_correlate(CLI::App& root);
Command add_associate(CLI::App& root);
Command add_profile(CLI::App& root);
Command add_synth(CLI::App& root);

}  // namespace orifeat::cli
