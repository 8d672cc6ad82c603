#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftlab/params.hpp"
#include "ftlab/rng.hpp"
#include "ftlab/tape.hpp"

namespace ftlab {

// Small BERT-shaped encoder: learned token+position embeddings, post-LN
// self-attention/FFN blocks, tanh pooler over the first position, a linear
// classifier head, and a masked-LM head tied to the token embedding.
struct ModelConfig {
  std::size_t num_layers = 6;
  std::size_t hidden_dim = 64;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t vocab_size = 256;
  std::size_t max_seq_len = 32;
  double dropout_p = 0.1;
  std::size_t num_classes = 2;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct Checkpoint {
  ModelConfig config;
  ParamStore<float> params;
  std::string provenance;
};

// Canonical parameter names with shapes, in insertion order.
std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& config);

// Deterministic initialization: weights ~ truncated normal(std 0.02, +-2 std),
// biases and layer-norm offsets zero, layer-norm gains one.
ParamStore<float> init_params(const ModelConfig& config, std::uint64_t seed);

enum class Mode { Train, Eval };

struct ClassifyBatch {
  std::size_t batch = 0, seq = 0;
  std::vector<std::int32_t> tokens;  // row-major [batch][seq]
  std::vector<std::int32_t> labels;  // [batch]
};

struct MlmBatch {
  std::size_t batch = 0, seq = 0;
  std::vector<std::int32_t> tokens;     // row-major, mask token already applied
  std::vector<std::int32_t> positions;  // flat indices into [batch*seq]
  std::vector<std::int32_t> targets;    // original tokens at positions
};

template <typename T>
struct ForwardOut {
  typename Tape<T>::Id loss = -1;
  typename Tape<T>::Id logits = -1;
  double loss_value = 0.0;
  std::size_t correct = 0;   // classification only
  double perplexity = 0.0;   // MLM only
};

namespace detail {

template <typename T>
struct GraphParams {
  std::vector<typename Tape<T>::Id> ids;  // aligned with store order; -1 when not on the graph
};

// Registers every parameter as a tape leaf except the MLM head bias when the
// classification path is built (the head is frozen during fine-tuning).
template <typename T>
GraphParams<T> register_params(Tape<T>& tape, const ParamStore<T>& params, bool include_mlm_head) {
  GraphParams<T> g;
  g.ids.resize(params.size(), -1);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = params.item(i);
    if (!include_mlm_head && name.rfind("mlm_head.", 0) == 0) continue;
    g.ids[i] = tape.leaf(tensor);
  }
  return g;
}

}  // namespace detail

// Runs the encoder stack over a token matrix; returns the tape id of the
// final hidden states, laid out [batch*seq, hidden].
template <typename T>
typename Tape<T>::Id encoder_forward(Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph,
                                     const ModelConfig& config, const std::vector<std::int32_t>& tokens,
                                     std::size_t batch, std::size_t seq, Mode mode, double dropout_p, Rng& rng);

template <typename T>
ForwardOut<T> forward_classify(Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph,
                               const ModelConfig& config, const ClassifyBatch& batch, Mode mode, Rng& rng);

template <typename T>
ForwardOut<T> forward_mlm(Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph,
                          const ModelConfig& config, const MlmBatch& batch, Mode mode, Rng& rng);

// Convenience wrappers that own the tape; for evaluation-style calls.
double classify_loss(const ParamStore<float>& params, const ModelConfig& config, const ClassifyBatch& batch);
struct EvalCounts {
  std::size_t correct = 0;
  double loss_sum = 0.0;  // sum of per-row cross entropies
  std::vector<std::int32_t> predictions;
};
EvalCounts classify_eval(const ParamStore<float>& params, const ModelConfig& config, const ClassifyBatch& batch);
double mlm_loss(const ParamStore<float>& params, const ModelConfig& config, const MlmBatch& batch);

// Collects gradients for every parameter after tape.backward(); parameters
// off the loss path receive exact zeros.
template <typename T>
ParamStore<T> collect_grads(const Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph) {
  ParamStore<T> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = params.item(i);
    if (graph.ids[i] < 0) {
      out.add(name, Tensor<T>(tensor.shape));
    } else {
      out.add(name, tape.grad(graph.ids[i]));
    }
  }
  return out;
}

// Replaces the top-k encoder layers of `fine_tuned` with `pre_trained`
// weights; at k == num_layers the embeddings are restored too, making the
// full-restoration identity exact. Task heads stay with the fine-tuned model;
// the MLM head is kept when present in both checkpoints.
Checkpoint substitute_top_layers(const Checkpoint& fine_tuned, const Checkpoint& pre_trained, std::size_t k);

// Checkpoint binary format (documented in README): magic "FTLABCK1",
// u32 version, u64 header length + key-value header text, u64 record count,
// then per record u64 name length, name bytes, u64 rank, u64 dims,
// little-endian f32 data. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ftlab
