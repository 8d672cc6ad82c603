#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ftlab/error.hpp"
#include "ftlab/io.hpp"
#include "ftlab/train.hpp"

using namespace ftlab;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.num_layers = 2;
  c.hidden_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.vocab_size = 32;
  c.max_seq_len = 8;
  c.dropout_p = 0.1;
  c.num_classes = 2;
  return c;
}

GrammarSpec tiny_grammar() {
  GrammarSpec g;
  g.num_states = 4;
  g.vocab_size = 32;
  g.seq_len = 8;
  return g;
}

RunConfig quick_run(std::uint64_t seed, std::int64_t epochs = 1) {
  RunConfig rc;
  rc.seed = seed;
  rc.epochs = epochs;
  rc.batch_size = 8;
  rc.eval_every = 5;
  rc.adam.alpha = 1e-3;
  rc.adam.bias_correction = true;
  rc.adam.weight_decay = 0.01;
  rc.adam.clip_norm = 1.0;
  return rc;
}

struct Fixture {
  ModelConfig config = tiny_config();
  TaskPair task = generate_classification_task(tiny_grammar(), 31, 64, 32);
  Checkpoint init{config, init_params(config, 1), "init"};
};

bool record_equal(const RunRecord& a, const RunRecord& b) {
  return a.loss == b.loss && a.lr == b.lr && a.bc_factor == b.bc_factor && a.grad_norms == b.grad_norms &&
         a.final_dev_metric == b.final_dev_metric && a.failed == b.failed;
}

}  // namespace

TEST_CASE("classify_failed_run boundaries") {
  CHECK(classify_failed_run(0.53, 0.53));       // inclusive boundary
  CHECK_FALSE(classify_failed_run(0.531, 0.53));
  CHECK(classify_failed_run(-0.1, 0.0));        // MCC below the constant classifier
  CHECK_THROWS_AS(classify_failed_run(std::nan(""), 0.5), Error);
}

TEST_CASE("layer_gradient_norms: zeros, 3-4-5, grouping") {
  ParamStore<float> grads;
  grads.add("embeddings.token", Tensor<float>({2, 2}));
  grads.add("layer0.attention.key.weight", Tensor<float>({2}, {3.0f, 0.0f}));
  grads.add("layer0.attention.key.bias", Tensor<float>({1}, {4.0f}));
  grads.add("layer1.ffn.in.weight", Tensor<float>({2}));
  grads.add("pooler.weight", Tensor<float>({1}));
  grads.add("classifier.weight", Tensor<float>({1}));
  grads.add("mlm_head.bias", Tensor<float>({2}));

  const auto per_layer = layer_gradient_norms(grads, NormGranularity::PerLayer);
  // embeddings (+ tied mlm head), layer0, layer1, pooler, classifier
  CHECK(per_layer.size() == 5);
  CHECK(per_layer[0].first == "embeddings");
  CHECK(per_layer[0].second == 0.0);
  CHECK(per_layer[1].first == "layer0");
  CHECK(per_layer[1].second == doctest::Approx(5.0).epsilon(1e-12));  // 3-4-5
  CHECK(per_layer[3].first == "pooler");
  CHECK(per_layer[4].first == "classifier");

  const auto per_matrix = layer_gradient_norms(grads, NormGranularity::PerMatrix);
  bool found = false;
  for (const auto& [g, v] : per_matrix) {
    if (g == "layer0.attention.key") {
      found = true;
      CHECK(v == doctest::Approx(5.0).epsilon(1e-12));
    }
  }
  CHECK(found);
}

TEST_CASE("iteration count follows the ceil arithmetic") {
  Fixture fx;
  RunConfig rc = quick_run(3, 2);
  rc.batch_size = 10;  // 64 examples -> ceil(64/10) = 7 per epoch
  const auto out = run_finetune(rc, fx.task.train, fx.task.dev, fx.init);
  CHECK(out.record.iters_per_epoch == 7);
  CHECK(out.record.total_iterations == 14);
  CHECK(out.record.loss.size() == 14);
}

TEST_CASE("run_finetune is bitwise deterministic") {
  Fixture fx;
  const auto a = run_finetune(quick_run(5), fx.task.train, fx.task.dev, fx.init);
  const auto b = run_finetune(quick_run(5), fx.task.train, fx.task.dev, fx.init);
  CHECK(record_equal(a.record, b.record));
  CHECK(bitwise_equal(a.final_checkpoint.params, b.final_checkpoint.params));
  const auto c = run_finetune(quick_run(6), fx.task.train, fx.task.dev, fx.init);
  CHECK_FALSE(record_equal(a.record, c.record));
}

TEST_CASE("trace completeness: one sample per iteration per family") {
  Fixture fx;
  const auto out = run_finetune(quick_run(7), fx.task.train, fx.task.dev, fx.init);
  const auto n = out.record.loss.size();
  CHECK(n == static_cast<std::size_t>(out.record.total_iterations));
  CHECK(out.record.lr.size() == n);
  CHECK(out.record.bc_factor.size() == n);
  // embeddings + 2 layers + pooler + classifier
  CHECK(out.record.grad_groups.size() == fx.config.num_layers + 3);
  for (const auto& series : out.record.grad_norms) CHECK(series.size() == n);
  // final eval always present
  CHECK(!out.record.evals.empty());
  CHECK(out.record.evals.back().iteration == out.record.total_iterations);
}

TEST_CASE("bias-correction factor series matches the formula; constant 1 when off") {
  Fixture fx;
  RunConfig rc = quick_run(9);
  rc.adam.bias_correction = true;
  const auto on = run_finetune(rc, fx.task.train, fx.task.dev, fx.init);
  for (std::size_t i = 0; i < on.record.bc_factor.size(); ++i)
    CHECK(on.record.bc_factor[i] ==
          doctest::Approx(bias_correction_factor(static_cast<std::int64_t>(i) + 1, rc.adam.beta1, rc.adam.beta2))
              .epsilon(1e-12));
  rc.adam.bias_correction = false;
  const auto off = run_finetune(rc, fx.task.train, fx.task.dev, fx.init);
  for (double f : off.record.bc_factor) CHECK(f == 1.0);
}

TEST_CASE("scheduled lr series follows warmup-linear") {
  Fixture fx;
  RunConfig rc = quick_run(11, 2);
  const auto out = run_finetune(rc, fx.task.train, fx.task.dev, fx.init);
  const ScheduleConfig sched{out.record.total_iterations, rc.warmup_ratio, rc.adam.alpha};
  for (std::size_t i = 0; i < out.record.lr.size(); ++i)
    CHECK(out.record.lr[i] == warmup_linear_lr(static_cast<std::int64_t>(i), sched));
}

TEST_CASE("zero base lr with zero decay is a null optimization") {
  Fixture fx;
  RunConfig rc = quick_run(13);
  rc.adam.alpha = 0.0;
  rc.adam.weight_decay = 0.0;
  const auto out = run_finetune(rc, fx.task.train, fx.task.dev, fx.init);
  for (double lr : out.record.lr) CHECK(lr == 0.0);
  CHECK(bitwise_equal(out.final_checkpoint.params, fx.init.params));
}

TEST_CASE("failed flag recomputes from stored metric and baseline") {
  Fixture fx;
  const auto out = run_finetune(quick_run(15), fx.task.train, fx.task.dev, fx.init);
  CHECK(out.record.failed == (out.record.diverged ||
                              classify_failed_run(out.record.final_dev_metric, out.record.baseline)));
}

TEST_CASE("divergence terminates the run early and flags it") {
  Fixture fx;
  RunConfig rc = quick_run(17);
  rc.adam.alpha = 1e38;  // drives float parameters out of range
  rc.adam.clip_norm = 0.0;
  rc.epochs = 1;
  rc.warmup_ratio = 0.0;  // full lr from the first step
  const auto out = run_finetune(rc, fx.task.train, fx.task.dev, fx.init);
  CHECK(out.record.diverged);
  CHECK(out.record.failed);
  CHECK(out.record.divergence_reason == "divergence");
  CHECK(out.record.loss.size() < static_cast<std::size_t>(out.record.total_iterations));
}

TEST_CASE("run_pretrain: determinism, perplexity anchors") {
  const GrammarSpec g = tiny_grammar();
  const ModelConfig c = tiny_config();
  const Corpus corpus = generate_corpus(g, 41, 96);
  const Checkpoint init{c, init_params(c, 2), "init"};

  // perplexity of the untrained model sits within 10% of vocab size
  const double init_ppl = heldout_perplexity(init.params, c, corpus, 32, 5);
  CHECK(init_ppl > 0.9 * static_cast<double>(c.vocab_size));
  CHECK(init_ppl < 1.1 * static_cast<double>(c.vocab_size));

  RunConfig rc = quick_run(19, 3);
  const auto a = run_pretrain(rc, corpus, 32, init);
  const auto b = run_pretrain(rc, corpus, 32, init);
  CHECK(record_equal(a.record, b.record));
  // held-out perplexity strictly improves over its starting value
  CHECK(a.record.evals.back().dev_metric < a.record.evals.front().dev_metric);
  CHECK(a.record.evals.back().dev_metric < static_cast<double>(c.vocab_size));
}

TEST_CASE("run records serialize deterministically") {
  Fixture fx;
  const auto out = run_finetune(quick_run(21), fx.task.train, fx.task.dev, fx.init);
  const auto dir1 = std::filesystem::temp_directory_path() / "ftlab_rr_1";
  const auto dir2 = std::filesystem::temp_directory_path() / "ftlab_rr_2";
  save_run_record(out.record, dir1);
  save_run_record(out.record, dir2);
  for (const char* f : {"manifest.txt", "train_trace.csv", "grad_norms.csv", "evals.csv"}) {
    CHECK(read_text_file(dir1 / f) == read_text_file(dir2 / f));
  }
  const CsvTable trace = read_csv(dir1 / "train_trace.csv");
  CHECK(trace.rows.size() == out.record.loss.size());
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}
