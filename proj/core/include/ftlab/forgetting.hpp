#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftlab/data.hpp"
#include "ftlab/model.hpp"
#include "ftlab/train.hpp"

namespace ftlab {

// Masked-LM perplexity of hybrids where the top-k encoder layers are restored
// to pre-trained weights, k = 0 .. num_layers.
struct SubstitutionCurve {
  std::vector<std::size_t> k_values;
  std::vector<double> perplexity;
  std::string finetuned_hash, pretrained_hash;
  std::string corpus_hash;
  std::uint64_t mask_seed = 0;
};

// The mask pattern is drawn once from mask_seed and shared across every k,
// so curve differences are attributable to weights alone. Per-k evaluations
// run concurrently.
SubstitutionCurve substitution_curve(const Checkpoint& fine_tuned, const Checkpoint& pre_trained,
                                     const std::vector<std::vector<std::int32_t>>& eval_sequences,
                                     std::uint64_t mask_seed, std::size_t workers = 1);

struct FailureSignature {
  double final_epoch_mean_loss = 0.0;
  double trivial_center = 0.0;  // ln(num_classes)
  double tolerance = 0.05;
  bool trivial_loss = false;
  bool at_or_below_baseline = false;
  bool optimization_failure = false;  // both of the above
};

// Checks the trivial-loss signature of a completed run: final-epoch mean
// training loss within +-tolerance of ln(num_classes), and dev metric at or
// below the majority baseline.
FailureSignature failure_signature(const RunRecord& record, std::size_t num_classes, double tolerance = 0.05);

// curve.csv (k, perplexity) + manifest + optional SVG line plot.
void save_curve(const SubstitutionCurve& curve, const std::filesystem::path& out_dir, bool svg);

}  // namespace ftlab
