#include "ftlab/train.hpp"

#include <chrono>
#include <cmath>

#include "ftlab/io.hpp"
#include "ftlab/stats.hpp"

namespace ftlab {

void RunConfig::validate() const {
  require(batch_size >= 1, "run config: batch_size must be >= 1");
  require(eval_every >= 1, "run config: eval_every must be >= 1");
  const bool by_epochs = epochs >= 1 && total_iterations == 0;
  const bool by_iterations = epochs == 0 && total_iterations >= 1;
  require(by_epochs || by_iterations, "run config: set exactly one of epochs, total_iterations");
}

bool classify_failed_run(double final_metric, double baseline) {
  require(std::isfinite(final_metric) && std::isfinite(baseline), "classify_failed_run: inputs must be finite");
  return final_metric <= baseline;
}

namespace {

std::string group_of(const std::string& name, NormGranularity granularity) {
  if (granularity == NormGranularity::PerMatrix) {
    for (const char* leaf : {".weight", ".bias", ".gain", ".offset"}) {
      const std::string l(leaf);
      if (name.size() > l.size() && name.compare(name.size() - l.size(), l.size(), l) == 0)
        return name.substr(0, name.size() - l.size());
    }
    return name;
  }
  if (name.rfind("layer", 0) == 0) {
    const auto dot = name.find('.');
    return name.substr(0, dot);
  }
  if (name.rfind("embeddings", 0) == 0 || name.rfind("mlm_head", 0) == 0) return "embeddings";
  if (name.rfind("pooler", 0) == 0) return "pooler";
  if (name.rfind("classifier", 0) == 0) return "classifier";
  return name;
}

}  // namespace

std::vector<std::pair<std::string, double>> layer_gradient_norms(const ParamStore<float>& grads,
                                                                 NormGranularity granularity) {
  std::vector<std::pair<std::string, double>> out;  // group -> sum of squares, then sqrt
  auto slot = [&](const std::string& g) -> double& {
    for (auto& [name, v] : out)
      if (name == g) return v;
    out.emplace_back(g, 0.0);
    return out.back().second;
  };
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& [name, t] = grads.item(i);
    double acc = 0.0;
    for (float v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
    slot(group_of(name, granularity)) += acc;
  }
  for (auto& [name, v] : out) v = std::sqrt(v);
  return out;
}

namespace {

ConfusionCounts binary_confusion(const std::vector<std::int32_t>& predictions, const TaskDataset& dev) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < dev.examples.size(); ++i) {
    const bool pos = dev.examples[i].label == 1;
    const bool pred_pos = predictions[i] == 1;
    if (pos && pred_pos) ++c.tp;
    else if (pos && !pred_pos) ++c.fn;
    else if (!pos && pred_pos) ++c.fp;
    else ++c.tn;
  }
  return c;
}

constexpr std::size_t kEvalChunk = 64;

std::vector<std::int32_t> dev_predictions(const ParamStore<float>& params, const ModelConfig& config,
                                          const TaskDataset& dev) {
  std::vector<std::int32_t> preds;
  preds.reserve(dev.examples.size());
  for (std::size_t start = 0; start < dev.examples.size(); start += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, dev.examples.size() - start);
    ClassifyBatch batch;
    batch.batch = count;
    batch.seq = dev.examples[start].tokens.size();
    for (std::size_t i = 0; i < count; ++i) {
      const auto& ex = dev.examples[start + i];
      batch.tokens.insert(batch.tokens.end(), ex.tokens.begin(), ex.tokens.end());
      batch.labels.push_back(ex.label);
    }
    auto counts = classify_eval(params, config, batch);
    preds.insert(preds.end(), counts.predictions.begin(), counts.predictions.end());
  }
  return preds;
}

}  // namespace

double evaluate_metric(const ParamStore<float>& params, const ModelConfig& config, const TaskDataset& dev) {
  require(!dev.examples.empty(), "evaluate_metric: empty dev split");
  const auto preds = dev_predictions(params, config, dev);
  if (dev.metric == Metric::Accuracy) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds[i] == dev.examples[i].label) ++hit;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
  }
  require(dev.num_classes == 2, "evaluate_metric: F1/MCC need a binary task");
  const ConfusionCounts c = binary_confusion(preds, dev);
  return dev.metric == Metric::F1 ? f1_score(c) : mcc(c);
}

std::vector<bool> evaluate_correctness(const ParamStore<float>& params, const ModelConfig& config,
                                       const TaskDataset& dev) {
  const auto preds = dev_predictions(params, config, dev);
  std::vector<bool> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) out[i] = preds[i] == dev.examples[i].label;
  return out;
}

namespace {

struct TraceState {
  RunRecord rec;
  double window_loss_sum = 0.0;
  std::int64_t window_count = 0;
};

void record_iteration(TraceState& ts, double loss, double lr, double factor,
                      const std::vector<std::pair<std::string, double>>& norms) {
  ts.rec.loss.push_back(loss);
  ts.rec.lr.push_back(lr);
  ts.rec.bc_factor.push_back(factor);
  if (ts.rec.grad_groups.empty()) {
    for (const auto& [g, v] : norms) ts.rec.grad_groups.push_back(g);
    ts.rec.grad_norms.resize(norms.size());
  }
  for (std::size_t i = 0; i < norms.size(); ++i) ts.rec.grad_norms[i].push_back(norms[i].second);
  ts.window_loss_sum += loss;
  ts.window_count += 1;
}

double flush_window(TraceState& ts) {
  const double mean = ts.window_count > 0 ? ts.window_loss_sum / static_cast<double>(ts.window_count) : 0.0;
  ts.window_loss_sum = 0.0;
  ts.window_count = 0;
  return mean;
}

}  // namespace

RunOutput run_finetune(const RunConfig& config, const TaskDataset& train, const TaskDataset& dev,
                       const Checkpoint& init) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  init.config.validate();
  require(!train.examples.empty() && !dev.examples.empty(), "run_finetune: empty dataset");
  require(train.vocab_size == init.config.vocab_size,
          "run_finetune: dataset vocab " + std::to_string(train.vocab_size) + " does not match model vocab " +
              std::to_string(init.config.vocab_size));
  require(train.num_classes == init.config.num_classes, "run_finetune: class count mismatch");

  ModelConfig model_cfg = init.config;
  if (config.dropout_override >= 0.0) model_cfg.dropout_p = config.dropout_override;

  const std::int64_t n_train = static_cast<std::int64_t>(train.examples.size());
  const std::int64_t iters_per_epoch = (n_train + config.batch_size - 1) / config.batch_size;
  const std::int64_t total_iters =
      config.total_iterations > 0 ? config.total_iterations : iters_per_epoch * config.epochs;

  ScheduleConfig schedule{total_iters, config.warmup_ratio, config.adam.alpha};
  schedule.validate();

  ParamStore<float> params = init.params;
  AdamState state = AdamState::init(params);

  TraceState ts;
  ts.rec.seed = config.seed;
  ts.rec.total_iterations = total_iters;
  ts.rec.iters_per_epoch = iters_per_epoch;
  ts.rec.batch_size = config.batch_size;
  ts.rec.base_lr = config.adam.alpha;
  ts.rec.bias_correction = config.adam.bias_correction;
  ts.rec.baseline = majority_baseline(dev, majority_label(train));

  const Rng shuffle_root(config.seed, "shuffle");
  const Rng dropout_root(config.seed, "dropout");

  bool have_eval = false;
  std::int64_t iter = 0;
  for (std::int64_t epoch = 0; iter < total_iters; ++epoch) {
    Rng shuffle_rng = shuffle_root.fork(static_cast<std::uint64_t>(epoch));
    const auto order = shuffle_rng.permutation(train.examples.size());
    for (std::int64_t b = 0; b < iters_per_epoch && iter < total_iters; ++b, ++iter) {
      const std::size_t start = static_cast<std::size_t>(b * config.batch_size);
      const std::size_t count = std::min(static_cast<std::size_t>(config.batch_size), train.examples.size() - start);
      ClassifyBatch batch;
      batch.batch = count;
      batch.seq = train.examples[0].tokens.size();
      for (std::size_t i = 0; i < count; ++i) {
        const auto& ex = train.examples[order[start + i]];
        batch.tokens.insert(batch.tokens.end(), ex.tokens.begin(), ex.tokens.end());
        batch.labels.push_back(ex.label);
      }

      Tape<float> tape;
      auto graph = detail::register_params(tape, params, /*include_mlm_head=*/false);
      Rng drng = dropout_root.fork(static_cast<std::uint64_t>(iter));
      auto fw = forward_classify(tape, params, graph, model_cfg, batch, Mode::Train, drng);
      if (!std::isfinite(fw.loss_value) || !tape.finite_ok()) {
        ts.rec.diverged = true;
        ts.rec.divergence_reason = "divergence";
        break;
      }
      tape.backward(fw.loss);
      ParamStore<float> grads = collect_grads(tape, params, graph);
      if (!all_finite(grads)) {
        ts.rec.diverged = true;
        ts.rec.divergence_reason = "divergence";
        break;
      }

      const auto norms = layer_gradient_norms(grads, NormGranularity::PerLayer);
      if (config.adam.clip_norm > 0.0) clip_global_norm(grads, config.adam.clip_norm);
      const double lr = warmup_linear_lr(iter, schedule);
      adam_update(params, grads, state, config.adam, lr);
      const double factor =
          config.adam.bias_correction ? bias_correction_factor(state.step, config.adam.beta1, config.adam.beta2) : 1.0;
      record_iteration(ts, fw.loss_value, lr, factor, norms);

      const bool last = iter + 1 == total_iters;
      if ((iter + 1) % config.eval_every == 0 || last) {
        EvalPoint ep;
        ep.iteration = iter + 1;
        ep.dev_metric = evaluate_metric(params, model_cfg, dev);
        ep.train_loss = flush_window(ts);
        ts.rec.evals.push_back(ep);
        have_eval = true;
      }
    }
    if (ts.rec.diverged) break;
  }

  RunOutput out;
  out.record = std::move(ts.rec);
  if (have_eval) {
    out.record.final_dev_metric = out.record.evals.back().dev_metric;
  } else {
    out.record.final_dev_metric = out.record.baseline;  // diverged before any eval
  }
  out.record.final_train_loss = out.record.loss.empty() ? 0.0 : out.record.loss.back();
  out.record.failed = out.record.diverged || classify_failed_run(out.record.final_dev_metric, out.record.baseline);
  out.final_checkpoint = Checkpoint{model_cfg, std::move(params), "finetuned-seed" + std::to_string(config.seed)};
  out.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

namespace {

struct MaskedEvalSet {
  std::vector<MlmBatch> batches;
  std::size_t total_positions = 0;
};

MaskedEvalSet build_masked_eval(const Corpus& corpus, std::size_t first, std::size_t count, std::uint64_t mask_seed,
                                std::size_t chunk) {
  MaskedEvalSet set;
  const Rng mask_root(mask_seed, "masking");
  for (std::size_t start = 0; start < count; start += chunk) {
    const std::size_t n = std::min(chunk, count - start);
    MlmBatch batch;
    batch.batch = n;
    batch.seq = corpus.sequences[first].size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& seq = corpus.sequences[first + start + i];
      auto masked = mask_tokens(seq, mask_root.fork(start + i), 0.15, {}, corpus.vocab_size);
      const std::size_t row0 = i * batch.seq;
      batch.tokens.insert(batch.tokens.end(), masked.tokens.begin(), masked.tokens.end());
      for (std::size_t j = 0; j < masked.positions.size(); ++j) {
        batch.positions.push_back(static_cast<std::int32_t>(row0) + masked.positions[j]);
        batch.targets.push_back(masked.targets[j]);
      }
    }
    set.total_positions += batch.positions.size();
    set.batches.push_back(std::move(batch));
  }
  return set;
}

double masked_eval_perplexity(const ParamStore<float>& params, const ModelConfig& config, const MaskedEvalSet& set) {
  double loss_sum = 0.0;
  for (const auto& batch : set.batches)
    loss_sum += mlm_loss(params, config, batch) * static_cast<double>(batch.positions.size());
  return std::exp(loss_sum / static_cast<double>(set.total_positions));
}

}  // namespace

double heldout_perplexity(const ParamStore<float>& params, const ModelConfig& config, const Corpus& corpus,
                          std::size_t heldout_count, std::uint64_t mask_seed) {
  require(heldout_count >= 1 && heldout_count <= corpus.sequences.size(), "heldout_perplexity: bad heldout count");
  const std::size_t first = corpus.sequences.size() - heldout_count;
  const auto set = build_masked_eval(corpus, first, heldout_count, mask_seed, 32);
  return masked_eval_perplexity(params, config, set);
}

RunOutput run_pretrain(const RunConfig& config, const Corpus& corpus, std::size_t heldout_count,
                       const Checkpoint& init) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  init.config.validate();
  require(corpus.vocab_size == init.config.vocab_size, "run_pretrain: corpus vocab does not match model vocab");
  require(heldout_count >= 1 && heldout_count < corpus.sequences.size(),
          "run_pretrain: heldout count must leave training sequences");

  ModelConfig model_cfg = init.config;
  if (config.dropout_override >= 0.0) model_cfg.dropout_p = config.dropout_override;

  const std::size_t n_train = corpus.sequences.size() - heldout_count;
  const std::int64_t iters_per_epoch =
      (static_cast<std::int64_t>(n_train) + config.batch_size - 1) / config.batch_size;
  const std::int64_t total_iters =
      config.total_iterations > 0 ? config.total_iterations : iters_per_epoch * config.epochs;

  ScheduleConfig schedule{total_iters, config.warmup_ratio, config.adam.alpha};
  schedule.validate();

  ParamStore<float> params = init.params;
  AdamState state = AdamState::init(params);

  TraceState ts;
  ts.rec.seed = config.seed;
  ts.rec.total_iterations = total_iters;
  ts.rec.iters_per_epoch = iters_per_epoch;
  ts.rec.batch_size = config.batch_size;
  ts.rec.base_lr = config.adam.alpha;
  ts.rec.bias_correction = config.adam.bias_correction;
  ts.rec.baseline = static_cast<double>(model_cfg.vocab_size);  // uniform-prediction perplexity

  const auto eval_set = build_masked_eval(corpus, n_train, heldout_count, Rng(config.seed, "masking-eval").key(), 32);

  const Rng shuffle_root(config.seed, "shuffle");
  const Rng mask_root(config.seed, "masking");
  const Rng dropout_root(config.seed, "dropout");

  bool have_eval = false;
  std::int64_t iter = 0;
  for (std::int64_t epoch = 0; iter < total_iters; ++epoch) {
    Rng shuffle_rng = shuffle_root.fork(static_cast<std::uint64_t>(epoch));
    const auto order = shuffle_rng.permutation(n_train);
    for (std::int64_t b = 0; b < iters_per_epoch && iter < total_iters; ++b, ++iter) {
      const std::size_t start = static_cast<std::size_t>(b * config.batch_size);
      const std::size_t count = std::min(static_cast<std::size_t>(config.batch_size), n_train - start);
      MlmBatch batch;
      batch.batch = count;
      batch.seq = corpus.sequences[0].size();
      Rng mask_rng = mask_root.fork(static_cast<std::uint64_t>(iter));
      for (std::size_t i = 0; i < count; ++i) {
        const auto& seq = corpus.sequences[order[start + i]];
        auto masked = mask_tokens(seq, mask_rng.fork(i), 0.15, {}, corpus.vocab_size);
        const std::size_t row0 = i * batch.seq;
        batch.tokens.insert(batch.tokens.end(), masked.tokens.begin(), masked.tokens.end());
        for (std::size_t j = 0; j < masked.positions.size(); ++j) {
          batch.positions.push_back(static_cast<std::int32_t>(row0) + masked.positions[j]);
          batch.targets.push_back(masked.targets[j]);
        }
      }

      Tape<float> tape;
      auto graph = detail::register_params(tape, params, /*include_mlm_head=*/true);
      Rng drng = dropout_root.fork(static_cast<std::uint64_t>(iter));
      auto fw = forward_mlm(tape, params, graph, model_cfg, batch, Mode::Train, drng);
      if (!std::isfinite(fw.loss_value) || !tape.finite_ok()) {
        ts.rec.diverged = true;
        ts.rec.divergence_reason = "divergence";
        break;
      }
      tape.backward(fw.loss);
      ParamStore<float> grads = collect_grads(tape, params, graph);
      if (!all_finite(grads)) {
        ts.rec.diverged = true;
        ts.rec.divergence_reason = "divergence";
        break;
      }

      const auto norms = layer_gradient_norms(grads, NormGranularity::PerLayer);
      if (config.adam.clip_norm > 0.0) clip_global_norm(grads, config.adam.clip_norm);
      const double lr = warmup_linear_lr(iter, schedule);
      adam_update(params, grads, state, config.adam, lr);
      const double factor =
          config.adam.bias_correction ? bias_correction_factor(state.step, config.adam.beta1, config.adam.beta2) : 1.0;
      record_iteration(ts, fw.loss_value, lr, factor, norms);

      const bool last = iter + 1 == total_iters;
      if ((iter + 1) % config.eval_every == 0 || last) {
        EvalPoint ep;
        ep.iteration = iter + 1;
        ep.dev_metric = masked_eval_perplexity(params, model_cfg, eval_set);
        ep.train_loss = flush_window(ts);
        ts.rec.evals.push_back(ep);
        have_eval = true;
      }
    }
    if (ts.rec.diverged) break;
  }

  RunOutput out;
  out.record = std::move(ts.rec);
  out.record.final_dev_metric = have_eval ? out.record.evals.back().dev_metric : out.record.baseline;
  out.record.final_train_loss = out.record.loss.empty() ? 0.0 : out.record.loss.back();
  out.record.failed = out.record.diverged || out.record.final_dev_metric >= out.record.baseline;
  out.final_checkpoint = Checkpoint{model_cfg, std::move(params), "pretrained-seed" + std::to_string(config.seed)};
  out.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

void save_run_record(const RunRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  Manifest m;
  m.set("seed", static_cast<std::uint64_t>(record.seed));
  m.set("total_iterations", static_cast<std::int64_t>(record.total_iterations));
  m.set("iters_per_epoch", static_cast<std::int64_t>(record.iters_per_epoch));
  m.set("batch_size", static_cast<std::int64_t>(record.batch_size));
  m.set("base_lr", record.base_lr);
  m.set("bias_correction", record.bias_correction);
  m.set("final_dev_metric", record.final_dev_metric);
  m.set("final_train_loss", record.final_train_loss);
  m.set("baseline", record.baseline);
  m.set("failed", record.failed);
  m.set("diverged", record.diverged);
  if (record.diverged) m.set("divergence_reason", record.divergence_reason);
  m.save(dir / "manifest.txt");

  CsvWriter trace({"iteration", "loss", "lr", "bc_factor"});
  for (std::size_t i = 0; i < record.loss.size(); ++i)
    trace.add_row({std::to_string(i), fmt_double(record.loss[i]), fmt_double(record.lr[i]),
                   fmt_double(record.bc_factor[i])});
  trace.save(dir / "train_trace.csv");

  std::vector<std::string> header = {"iteration"};
  for (const auto& g : record.grad_groups) header.push_back(g);
  CsvWriter norms(header);
  for (std::size_t i = 0; i < record.loss.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i)};
    for (const auto& series : record.grad_norms) row.push_back(fmt_double(series[i]));
    norms.add_row(row);
  }
  norms.save(dir / "grad_norms.csv");

  CsvWriter evals({"iteration", "dev_metric", "train_loss"});
  for (const auto& ep : record.evals)
    evals.add_row({std::to_string(ep.iteration), fmt_double(ep.dev_metric), fmt_double(ep.train_loss)});
  evals.save(dir / "evals.csv");
}

}  // namespace ftlab
