#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftlab/rng.hpp"

namespace ftlab {

enum class Metric { Accuracy, F1, Mcc };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

// Hidden-state Markov grammar over the vocabulary. Token 0 is reserved as the
// mask token; each latent state prefers a band of the remaining vocabulary
// with a Zipf-shaped distribution inside the band, so masked-token prediction
// is learnable from neighboring context but not trivial. Class labels
// threshold the occupancy of the states below num_states/2.
struct GrammarSpec {
  std::size_t num_states = 8;
  std::size_t vocab_size = 256;
  std::size_t seq_len = 32;
  double self_loop = 0.6;
  double emit_noise = 0.2;       // probability of a uniform off-band emission
  double label_threshold = 0.5;  // occupancy fraction above which label = 1
  std::uint64_t table_seed = 17;

  void validate() const;
};

struct Corpus {
  std::vector<std::vector<std::int32_t>> sequences;
  std::size_t vocab_size = 0;
  GrammarSpec spec;
  std::uint64_t seed = 0;
};

struct TaskExample {
  std::vector<std::int32_t> tokens;
  std::int32_t label = 0;
};

struct TaskDataset {
  std::vector<TaskExample> examples;
  std::size_t num_classes = 2;
  std::size_t vocab_size = 0;
  std::string split;  // "train" or "dev"
  Metric metric = Metric::Accuracy;
};

inline constexpr std::int32_t kMaskToken = 0;

Corpus generate_corpus(const GrammarSpec& spec, std::uint64_t seed, std::size_t size);

struct MaskedSequence {
  std::vector<std::int32_t> tokens;     // with masking policy applied
  std::vector<std::int32_t> targets;    // original tokens at selected positions
  std::vector<std::int32_t> positions;  // selected positions within the sequence
};

struct MaskPolicy {
  double mask_fraction = 0.8;     // replaced by the mask token
  double random_fraction = 0.1;   // replaced by a random non-mask token
  // remainder kept unchanged
};

// BERT-style masking. mask_rate in (0, 1]; rate 1 is the all-select test
// hook. A draw selecting zero positions is re-drawn once, then one position
// is forced.
MaskedSequence mask_tokens(const std::vector<std::int32_t>& sequence, Rng rng, double mask_rate = 0.15,
                           const MaskPolicy& policy = {}, std::size_t vocab_size = 256);

struct TaskPair {
  TaskDataset train;
  TaskDataset dev;
};

// Labels derive from latent state occupancy so that masked-LM pre-training
// transfers to the classification task. The dev split is disjoint from train
// by construction (dev draws colliding with a train sequence are re-drawn).
TaskPair generate_classification_task(const GrammarSpec& spec, std::uint64_t seed, std::size_t train_size,
                                      std::size_t dev_size, std::size_t num_classes = 2,
                                      Metric metric = Metric::Accuracy);

// Metric value of the constant most-frequent-label classifier on `dataset`.
// `forced_majority_label` < 0 takes the majority from the dataset itself;
// the harness passes the training-split majority when scoring dev.
double majority_baseline(const TaskDataset& dataset, std::int32_t forced_majority_label = -1);

std::int32_t majority_label(const TaskDataset& dataset);

// Uniform sample of n examples without replacement, original order kept.
TaskDataset downsample(const TaskDataset& dataset, std::size_t n, std::uint64_t seed);

// CSV export: token ids space-separated plus a label column.
void export_csv(const TaskDataset& dataset, const std::filesystem::path& path);

}  // namespace ftlab
