// Copyright 2026 The photonvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using photonvae::cli::Overrides;

struct Subcommand {
  const char* name;
  const char* description;
  std::function<int(const Overrides&)> run;
  bool bin_sizes;
  bool efficiencies;
  bool base_checkpoint;
};

int run_guarded(const std::function<int(const Overrides&)>& run, const Overrides& o,
                const CLI::App& sub) {
  using namespace photonvae;
  try {
    return run(o);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << sub.help();
    return cli::kUsage;
  } catch (const PhysicsError& e) {
    std::cerr << "physics error: " << e.what() << '\n';
    return cli::kPhysics;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return cli::kCheckpointMismatch;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return cli::kDimensionMismatch;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = photonvae::cli;
  CLI::App app{"Photon-statistics simulation and VAE light-source classifier"};
  app.require_subcommand(1);

  const std::vector<Subcommand> commands{
      {"gen", "Generate a binned click-statistics dataset", cli::cmd_gen, true, true, false},
      {"train", "Train a model on a dataset", cli::cmd_train, false, false, false},
      {"finetune", "Continue training a checkpoint on another dataset", cli::cmd_finetune,
       false, false, true},
      {"eval", "Evaluate a checkpoint and write report CSVs", cli::cmd_eval, true, true,
       false},
      {"export-latent", "Write latent means of a dataset as CSV", cli::cmd_export_latent,
       false, false, false},
      {"sweep", "Run a full workflow (algorithm1, algorithm2, mixed_grid)", cli::cmd_sweep,
       true, true, false},
  };

  Overrides o;
  std::uint64_t seed = 0;
  std::string out, base;
  std::vector<int> bin_sizes;
  std::vector<double> etas;
  std::vector<std::pair<CLI::App*, const Subcommand*>> subs;

  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.description);
    sub->add_option("--config", o.config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "Global seed (overrides PHOTONVAE_SEED and config)");
    sub->add_option("--out", out, "Output directory");
    sub->add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
    if (c.bin_sizes)
      sub->add_option("--bin-sizes", bin_sizes, "Comma-separated bin sizes")->delimiter(',');
    if (c.efficiencies)
      sub->add_option("--eta", etas, "Comma-separated quantum efficiencies")->delimiter(',');
    if (c.base_checkpoint)
      sub->add_option("--base-checkpoint", base, "Checkpoint to start from");
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  for (const auto& [sub, command] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--out")) o.out = out;
    if (command->bin_sizes && sub->count("--bin-sizes")) o.bin_sizes = bin_sizes;
    if (command->efficiencies && sub->count("--eta")) o.efficiencies = etas;
    if (command->base_checkpoint && sub->count("--base-checkpoint")) o.base_checkpoint = base;
    return run_guarded(command->run, o, *sub);
  }
  return cli::kUsage;
}
