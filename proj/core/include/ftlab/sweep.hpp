#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftlab/stats.hpp"
#include "ftlab/train.hpp"

namespace ftlab {

struct SweepCell {
  std::string id;
  std::vector<std::pair<std::string, std::string>> overrides;  // dotted path -> value
};

struct SweepPlan {
  std::string name;
  std::vector<SweepCell> cells;
  std::vector<std::uint64_t> seeds;

  void validate() const;
};

// The central contrast: the paper's recommended recipe against the
// historical default (3 epochs, no bias correction).
SweepPlan contrast_plan(std::vector<std::uint64_t> seeds);
// Cartesian ablation grid over (epochs, learning rate, bias correction).
SweepPlan ablation_plan(const std::vector<std::int64_t>& epochs, const std::vector<double>& lrs,
                        const std::vector<bool>& bias_correction, std::vector<std::uint64_t> seeds);
// Cartesian product of generic (path, values) axes.
SweepPlan axes_plan(const std::string& name,
                    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                    std::vector<std::uint64_t> seeds);

std::vector<std::uint64_t> default_seeds(std::size_t count);

// Applies one "path=value" override to a run config; unknown paths are
// rejected with the offending path named.
void apply_run_override(RunConfig& config, const std::string& path, const std::string& value);

struct CellResult {
  SweepCell cell;
  std::vector<RunRecord> runs;  // seed order
  std::vector<double> metrics() const;
  std::size_t failed_count() const;
};

struct SweepResult {
  std::string plan_name;
  std::vector<std::uint64_t> seeds;
  std::vector<CellResult> cells;
};

SweepResult run_sweep(const SweepPlan& plan, const RunConfig& base, const TaskDataset& train, const TaskDataset& dev,
                      const Checkpoint& init, std::size_t workers = 1);

// Epochs needed for a subset to match the full dataset's optimizer steps:
// ceil(ceil(N/b)*e / ceil(n/b)).
std::int64_t iterations_matched_epochs(std::int64_t full_train_size, std::int64_t full_epochs,
                                       std::int64_t batch_size, std::int64_t subset_size);

struct StabilityComparison {
  double W = 0.0;
  double p = 1.0;
  bool significant = false;  // p < 0.001
};

StabilityComparison compare_stability(const std::vector<double>& cell_a, const std::vector<double>& cell_b);

// Writes summary.csv, boxplot.csv, scatter.csv, boxplot.svg, and
// sweep_manifest.txt into out_dir; byte-deterministic for a given result.
void emit_report(const SweepResult& result, const std::filesystem::path& out_dir);

}  // namespace ftlab
