#pragma once

#include <filesystem>

#include "ftlab/config.hpp"
#include "ftlab/train.hpp"

namespace ftlab {

// Thin deterministic wrappers wiring the modules together. Each writes its
// artifacts plus a manifest (input hashes, tool version) under the config's
// output directory and throws ftlab::Error on any failure.

void command_pretrain(const ExperimentConfig& config);
void command_finetune(const ExperimentConfig& config);
void command_sweep(const ExperimentConfig& config);
void command_surface(const ExperimentConfig& config);
void command_forgetting(const ExperimentConfig& config);
void command_report(const std::filesystem::path& input_dir, const std::filesystem::path& out_dir);

// Builds the run config view shared by the run-style commands.
RunConfig run_config_from(const ExperimentConfig& config);

}  // namespace ftlab
