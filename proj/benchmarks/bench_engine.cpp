#include <benchmark/benchmark.h>

#include "ftlab/model.hpp"
#include "ftlab/optim.hpp"
#include "ftlab/tape.hpp"

namespace {

using namespace ftlab;

Tensor<float> random_tensor(Rng& rng, Shape shape) {
  Tensor<float> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<float>(rng.next_normal());
  return t;
}

void BM_GemmFfn(benchmark::State& state) {
  Rng rng(1, "bench");
  const auto a = random_tensor(rng, {512, 64});
  const auto b = random_tensor(rng, {64, 256});
  Tensor<float> c({512, 256});
  for (auto _ : state) {
    gemm<float>(false, false, 512, 256, 64, a.data.data(), b.data.data(), c.data.data(), false);
    benchmark::DoNotOptimize(c.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * 512 * 256 * 64);
}
BENCHMARK(BM_GemmFfn);

void BM_AttentionForward(benchmark::State& state) {
  Rng rng(2, "bench");
  const auto q = random_tensor(rng, {512, 64});
  for (auto _ : state) {
    Tape<float> tape;
    const auto qi = tape.leaf(q);
    benchmark::DoNotOptimize(tape.multi_head_attention(qi, qi, qi, 16, 32, 4));
  }
}
BENCHMARK(BM_AttentionForward);

ModelConfig bench_config() {
  ModelConfig c;
  c.num_layers = 4;
  c.hidden_dim = 32;
  c.num_heads = 4;
  c.ffn_dim = 128;
  c.vocab_size = 64;
  c.max_seq_len = 16;
  c.num_classes = 2;
  return c;
}

ClassifyBatch bench_batch(const ModelConfig& config) {
  Rng rng(3, "bench");
  ClassifyBatch b;
  b.batch = 16;
  b.seq = config.max_seq_len;
  for (std::size_t i = 0; i < b.batch * b.seq; ++i)
    b.tokens.push_back(static_cast<std::int32_t>(1 + rng.next_below(config.vocab_size - 1)));
  for (std::size_t i = 0; i < b.batch; ++i) b.labels.push_back(static_cast<std::int32_t>(rng.next_below(2)));
  return b;
}

void BM_ForwardEval(benchmark::State& state) {
  const ModelConfig config = bench_config();
  const auto params = init_params(config, 1);
  const auto batch = bench_batch(config);
  for (auto _ : state) benchmark::DoNotOptimize(classify_loss(params, config, batch));
}
BENCHMARK(BM_ForwardEval);

void BM_TrainStep(benchmark::State& state) {
  const ModelConfig config = bench_config();
  auto params = init_params(config, 1);
  const auto batch = bench_batch(config);
  AdamState adam_state = AdamState::init(params);
  AdamConfig adam = optimizer_preset("bert-like");
  adam.bias_correction = true;
  const Rng dropout_root(7, "dropout");
  std::int64_t iter = 0;
  for (auto _ : state) {
    Tape<float> tape;
    auto graph = detail::register_params(tape, params, false);
    Rng drng = dropout_root.fork(static_cast<std::uint64_t>(iter++));
    auto fw = forward_classify(tape, params, graph, config, batch, Mode::Train, drng);
    tape.backward(fw.loss);
    auto grads = collect_grads(tape, params, graph);
    clip_global_norm(grads, 1.0);
    adam_update(params, grads, adam_state, adam, 1e-4);
    benchmark::DoNotOptimize(params.item(0).second.data.data());
  }
}
BENCHMARK(BM_TrainStep);

void BM_AdamUpdate(benchmark::State& state) {
  const ModelConfig config = bench_config();
  auto params = init_params(config, 1);
  const auto grads = params.zeros_like();
  AdamState adam_state = AdamState::init(params);
  const AdamConfig adam = optimizer_preset("bert-like");
  for (auto _ : state) {
    adam_update(params, grads, adam_state, adam, 1e-4);
    benchmark::DoNotOptimize(params.item(0).second.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(params.total_elements()));
}
BENCHMARK(BM_AdamUpdate);

}  // namespace

BENCHMARK_MAIN();
