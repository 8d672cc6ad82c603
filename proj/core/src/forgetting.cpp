#include "ftlab/forgetting.hpp"

#include <cmath>

#include "ftlab/io.hpp"
#include "ftlab/parallel.hpp"
#include "ftlab/svg.hpp"

namespace ftlab {

SubstitutionCurve substitution_curve(const Checkpoint& fine_tuned, const Checkpoint& pre_trained,
                                     const std::vector<std::vector<std::int32_t>>& eval_sequences,
                                     std::uint64_t mask_seed, std::size_t workers) {
  require(fine_tuned.config == pre_trained.config, "substitution_curve: checkpoint configs differ");
  require(!eval_sequences.empty(), "substitution_curve: empty evaluation corpus");

  const ModelConfig& config = fine_tuned.config;
  const std::size_t layers = config.num_layers;

  // one mask pattern for the whole curve
  const Rng mask_root(mask_seed, "masking");
  constexpr std::size_t kChunk = 32;
  std::vector<MlmBatch> batches;
  std::size_t total_positions = 0;
  for (std::size_t start = 0; start < eval_sequences.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, eval_sequences.size() - start);
    MlmBatch batch;
    batch.batch = n;
    batch.seq = eval_sequences[0].size();
    for (std::size_t i = 0; i < n; ++i) {
      auto masked = mask_tokens(eval_sequences[start + i], mask_root.fork(start + i), 0.15, {}, config.vocab_size);
      const std::size_t row0 = i * batch.seq;
      batch.tokens.insert(batch.tokens.end(), masked.tokens.begin(), masked.tokens.end());
      for (std::size_t j = 0; j < masked.positions.size(); ++j) {
        batch.positions.push_back(static_cast<std::int32_t>(row0) + masked.positions[j]);
        batch.targets.push_back(masked.targets[j]);
      }
    }
    total_positions += batch.positions.size();
    batches.push_back(std::move(batch));
  }

  SubstitutionCurve curve;
  curve.mask_seed = mask_seed;
  curve.finetuned_hash = hex64(content_hash(fine_tuned.params));
  curve.pretrained_hash = hex64(content_hash(pre_trained.params));
  {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& seq : eval_sequences) h = h * 0x100000001b3ull ^ fnv1a_bytes(seq.data(), seq.size() * 4);
    curve.corpus_hash = hex64(h);
  }
  curve.k_values.resize(layers + 1);
  curve.perplexity.assign(layers + 1, 0.0);
  for (std::size_t k = 0; k <= layers; ++k) curve.k_values[k] = k;

  parallel_for(layers + 1, workers, [&](std::size_t k) {
    const Checkpoint hybrid = substitute_top_layers(fine_tuned, pre_trained, k);
    double loss_sum = 0.0;
    for (const auto& batch : batches)
      loss_sum += mlm_loss(hybrid.params, config, batch) * static_cast<double>(batch.positions.size());
    curve.perplexity[k] = std::exp(loss_sum / static_cast<double>(total_positions));
  });
  return curve;
}

FailureSignature failure_signature(const RunRecord& record, std::size_t num_classes, double tolerance) {
  require(num_classes >= 2, "failure_signature: num_classes must be >= 2");
  require(!record.loss.empty(), "failure_signature: run has no loss trace");

  FailureSignature sig;
  sig.tolerance = tolerance;
  sig.trivial_center = std::log(static_cast<double>(num_classes));

  const std::size_t n = record.loss.size();
  const std::size_t window = record.iters_per_epoch > 0
                                 ? std::min<std::size_t>(static_cast<std::size_t>(record.iters_per_epoch), n)
                                 : n;
  double acc = 0.0;
  for (std::size_t i = n - window; i < n; ++i) acc += record.loss[i];
  sig.final_epoch_mean_loss = acc / static_cast<double>(window);

  sig.trivial_loss = std::fabs(sig.final_epoch_mean_loss - sig.trivial_center) <= tolerance;
  sig.at_or_below_baseline = classify_failed_run(record.final_dev_metric, record.baseline);
  sig.optimization_failure = sig.trivial_loss && sig.at_or_below_baseline;
  return sig;
}

void save_curve(const SubstitutionCurve& curve, const std::filesystem::path& out_dir, bool svg) {
  std::filesystem::create_directories(out_dir);

  CsvWriter csv({"k", "perplexity"});
  for (std::size_t i = 0; i < curve.k_values.size(); ++i)
    csv.add_row({std::to_string(curve.k_values[i]), fmt_double(curve.perplexity[i])});
  csv.save(out_dir / "curve.csv");

  Manifest m;
  m.set("finetuned_checkpoint", curve.finetuned_hash);
  m.set("pretrained_checkpoint", curve.pretrained_hash);
  m.set("eval_corpus", curve.corpus_hash);
  m.set("mask_seed", static_cast<std::uint64_t>(curve.mask_seed));
  m.set("points", static_cast<std::int64_t>(curve.k_values.size()));
  m.set("curve_hash", hash_file(out_dir / "curve.csv"));
  m.save(out_dir / "curve_manifest.txt");

  if (svg) {
    std::vector<double> xs(curve.k_values.begin(), curve.k_values.end());
    write_text_file(out_dir / "curve.svg", svg_line_chart(xs, curve.perplexity, "restored top-k layers", "perplexity"));
  }
}

}  // namespace ftlab
