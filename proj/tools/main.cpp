// ftlab: desk-scale laboratory for studying fine-tuning stability of a toy
// BERT-shaped encoder under the ADAM bias-correction/warmup regime.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftlab/commands.hpp"
#include "ftlab/version.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config file (INI sections)")->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out_dir, "Output directory (overrides output.dir)");
  cmd->add_option("--set", flags.sets, "Override a config value: dotted.path=value (repeatable)");
  cmd->add_option("--seed", flags.seed, "Override run.seed")->each([&](const std::string&) { flags.seed_given = true; });
  cmd->add_option("--workers", flags.workers, "Worker thread count (overrides sweep.workers)");
}

ftlab::ExperimentConfig resolve_config(const CommonFlags& flags) {
  ftlab::ExperimentConfig config;
  if (!flags.config_path.empty()) config = ftlab::load_config(flags.config_path);
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    ftlab::require(eq != std::string::npos, "--set expects dotted.path=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed_given) config.run.seed = flags.seed;
  if (flags.workers > 0) config.sweep.workers = flags.workers;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (const char* root = std::getenv("FTLAB_OUT_ROOT"); root && *root)
    config.out_dir = (std::filesystem::path(root) / config.out_dir).string();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ftlab - fine-tuning stability laboratory (v" + std::string(ftlab::kVersion) + ")"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string report_input;

  auto* pretrain = app.add_subcommand("pretrain", "Masked-LM pre-training on the synthetic corpus");
  auto* finetune = app.add_subcommand("finetune", "One fine-tuning run on the synthetic task");
  auto* sweep = app.add_subcommand("sweep", "Multi-seed, multi-config sweep with report emission");
  auto* surface = app.add_subcommand("surface", "2D loss / gradient-norm surface scan");
  auto* forgetting = app.add_subcommand("forgetting", "Top-k layer substitution perplexity curve");
  auto* report = app.add_subcommand("report", "Summarize artifacts from a directory");
  for (auto* cmd : {pretrain, finetune, sweep, surface, forgetting}) add_common(cmd, flags);
  add_common(report, flags);
  report->add_option("input", report_input, "Directory holding artifacts")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ftlab::ExperimentConfig config = resolve_config(flags);
    if (pretrain->parsed()) ftlab::command_pretrain(config);
    else if (finetune->parsed()) ftlab::command_finetune(config);
    else if (sweep->parsed()) ftlab::command_sweep(config);
    else if (surface->parsed()) ftlab::command_surface(config);
    else if (forgetting->parsed()) ftlab::command_forgetting(config);
    else if (report->parsed()) ftlab::command_report(report_input, config.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "ftlab-error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
