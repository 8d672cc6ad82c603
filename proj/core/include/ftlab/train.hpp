#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftlab/data.hpp"
#include "ftlab/model.hpp"
#include "ftlab/optim.hpp"

namespace ftlab {

struct RunConfig {
  std::uint64_t seed = 1;
  std::int64_t epochs = 3;            // used when total_iterations == 0
  std::int64_t total_iterations = 0;  // explicit override; 0 = derive from epochs
  std::int64_t batch_size = 16;
  std::int64_t eval_every = 10;
  AdamConfig adam;
  double warmup_ratio = 0.1;
  double dropout_override = -1.0;  // < 0 keeps the model config's dropout

  void validate() const;
};

struct EvalPoint {
  std::int64_t iteration = 0;  // 1-based count of completed iterations
  double dev_metric = 0.0;
  double train_loss = 0.0;  // mean training loss since the previous eval
};

// Full trace of one run; a pure function of (config, data, init checkpoint).
struct RunRecord {
  // config echo
  std::uint64_t seed = 0;
  std::int64_t total_iterations = 0;
  std::int64_t iters_per_epoch = 0;
  std::int64_t batch_size = 0;
  double base_lr = 0.0;
  bool bias_correction = false;

  std::vector<double> loss;       // per iteration
  std::vector<double> lr;         // per iteration (scheduled)
  std::vector<double> bc_factor;  // per iteration (1.0 when correction is off)
  std::vector<std::string> grad_groups;
  std::vector<std::vector<double>> grad_norms;  // [group][iteration], pre-clip

  std::vector<EvalPoint> evals;
  double final_dev_metric = 0.0;
  double final_train_loss = 0.0;
  double baseline = 0.0;
  bool failed = false;
  bool diverged = false;
  std::string divergence_reason;

  // measured, not serialized (manifests stay byte-deterministic)
  double wall_seconds = 0.0;
};

struct RunOutput {
  RunRecord record;
  Checkpoint final_checkpoint;
};

// true iff final_metric <= baseline (boundary inclusive).
bool classify_failed_run(double final_metric, double baseline);

enum class NormGranularity { PerLayer, PerMatrix };

// L2 norms of gradients grouped by dotted-name prefix. Per-layer groups are
// embeddings, layer{i}, pooler, classifier; the tied MLM head counts with
// embeddings. Per-matrix groups strip the trailing weight/bias/gain/offset
// component.
std::vector<std::pair<std::string, double>> layer_gradient_norms(const ParamStore<float>& grads,
                                                                 NormGranularity granularity);

// Metric of `params` on a dev split, evaluated in fixed 64-row chunks with
// dropout disabled.
double evaluate_metric(const ParamStore<float>& params, const ModelConfig& config, const TaskDataset& dev);
// Per-example correctness; feeds the per-point stability estimator.
std::vector<bool> evaluate_correctness(const ParamStore<float>& params, const ModelConfig& config,
                                       const TaskDataset& dev);

RunOutput run_finetune(const RunConfig& config, const TaskDataset& train, const TaskDataset& dev,
                       const Checkpoint& init);

// Masked-LM pre-training. The last heldout_count sequences of the corpus are
// held out for perplexity evaluation with a mask pattern fixed per run;
// failed means diverged or no better than uniform prediction.
RunOutput run_pretrain(const RunConfig& config, const Corpus& corpus, std::size_t heldout_count,
                       const Checkpoint& init);

double heldout_perplexity(const ParamStore<float>& params, const ModelConfig& config, const Corpus& corpus,
                          std::size_t heldout_count, std::uint64_t mask_seed);

// Serialization: manifest.txt plus one CSV per trace family
// (train_trace.csv, grad_norms.csv, evals.csv).
void save_run_record(const RunRecord& record, const std::filesystem::path& dir);

}  // namespace ftlab
