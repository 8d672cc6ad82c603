#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftlab/data.hpp"
#include "ftlab/model.hpp"
#include "ftlab/optim.hpp"

namespace ftlab {

// Single plain-text configuration document (INI-style key-value sections).
// Every field is addressable by dotted path for --set overrides; unknown
// keys are rejected.
struct ExperimentConfig {
  ModelConfig model;

  struct Data {
    std::size_t num_states = 8;
    double self_loop = 0.6;
    double emit_noise = 0.2;
    double label_threshold = 0.5;
    std::uint64_t table_seed = 17;
    std::uint64_t task_seed = 1;
    // RTE-shaped split sizes by default
    std::size_t train_size = 2491;
    std::size_t dev_size = 278;
    std::string metric = "accuracy";
    std::uint64_t corpus_seed = 2;
    std::size_t corpus_size = 8192;
    std::size_t heldout_count = 512;
    std::size_t downsample_n = 0;  // 0 = full training set
    std::uint64_t downsample_seed = 3;
    bool match_iterations = false;  // keep full-run iteration count when downsampling
  } data;

  struct Optim {
    std::string preset = "bert-like";  // bert-like | roberta-like | albert-like | custom
    double lr = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-6;
    double weight_decay = 0.01;
    bool bias_correction = false;
    double clip_norm = 1.0;
  } optim;

  double warmup_ratio = 0.1;

  struct Run {
    std::uint64_t seed = 1;
    std::int64_t epochs = 3;
    std::int64_t total_iterations = 0;
    std::int64_t batch_size = 16;
    std::int64_t eval_every = 10;
    std::string init_checkpoint;
    std::string provenance;
  } run;

  struct Sweep {
    std::string plan = "contrast";  // contrast | ablation | axes
    std::size_t seed_count = 25;
    std::string seed_list;  // space-separated; overrides seed_count when set
    std::string axes;       // "path=v1|v2;path2=v1|v2" for plan = axes
    std::size_t workers = 1;
  } sweep;

  struct Surface {
    double a_min = -1.5, a_max = 1.5, b_min = -1.5, b_max = 1.5;
    std::size_t resolution = 40;
    std::size_t batch_size = 128;
    std::string quantity = "loss";  // loss | grad-norm
    std::string checkpoint_pretrained, checkpoint_failed, checkpoint_success;
    bool svg = true;
  } surface;

  struct Probe {
    std::string checkpoint_finetuned, checkpoint_pretrained;
    std::uint64_t mask_seed = 7;
    std::size_t eval_size = 256;
    bool svg = true;
  } probe;

  std::string out_dir = "out";

  // dotted-path access; unknown paths are rejected with the path named
  void set(const std::string& path, const std::string& value);
  std::string get(const std::string& path) const;
  static const std::vector<std::string>& known_paths();

  std::string serialize() const;  // canonical INI echo

  // typed views
  GrammarSpec grammar_spec() const;
  AdamConfig adam_config() const;
  std::vector<std::uint64_t> sweep_seeds() const;
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep_axes() const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ftlab
