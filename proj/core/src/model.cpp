#include "ftlab/model.hpp"

#include <cmath>

namespace ftlab {

void ModelConfig::validate() const {
  require(num_layers >= 1 && hidden_dim >= 1 && num_heads >= 1 && ffn_dim >= 1 && vocab_size >= 1 &&
              max_seq_len >= 1 && num_classes >= 1,
          "model config: all counts must be >= 1");
  require(hidden_dim % num_heads == 0, "model config: hidden_dim " + std::to_string(hidden_dim) +
                                           " not divisible by num_heads " + std::to_string(num_heads));
  require(dropout_p >= 0.0 && dropout_p < 1.0, "model config: dropout_p must be in [0, 1)");
}

std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t h = c.hidden_dim, f = c.ffn_dim;
  out.emplace_back("embeddings.token", Shape{c.vocab_size, h});
  out.emplace_back("embeddings.position", Shape{c.max_seq_len, h});
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    for (const char* part : {"attention.query", "attention.key", "attention.value", "attention.output.dense"}) {
      out.emplace_back(p + part + ".weight", Shape{h, h});
      out.emplace_back(p + part + ".bias", Shape{h});
    }
    out.emplace_back(p + "ln1.gain", Shape{h});
    out.emplace_back(p + "ln1.offset", Shape{h});
    out.emplace_back(p + "ffn.in.weight", Shape{h, f});
    out.emplace_back(p + "ffn.in.bias", Shape{f});
    out.emplace_back(p + "ffn.out.weight", Shape{f, h});
    out.emplace_back(p + "ffn.out.bias", Shape{h});
    out.emplace_back(p + "ln2.gain", Shape{h});
    out.emplace_back(p + "ln2.offset", Shape{h});
  }
  out.emplace_back("pooler.weight", Shape{h, h});
  out.emplace_back("pooler.bias", Shape{h});
  out.emplace_back("classifier.weight", Shape{h, c.num_classes});
  out.emplace_back("classifier.bias", Shape{c.num_classes});
  out.emplace_back("mlm_head.bias", Shape{c.vocab_size});
  return out;
}

namespace {

bool is_gain(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".gain") == 0;
}

bool is_vector_zero_init(const std::string& name) {
  // biases and layer-norm offsets
  auto ends_with = [&](const char* s) {
    const std::size_t n = std::string(s).size();
    return name.size() >= n && name.compare(name.size() - n, n, s) == 0;
  };
  return ends_with(".bias") || ends_with(".offset");
}

}  // namespace

ParamStore<float> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const Rng root(seed, "init");
  ParamStore<float> store;
  for (const auto& [name, shape] : param_layout(config)) {
    Tensor<float> t(shape);
    if (is_gain(name)) {
      std::fill(t.data.begin(), t.data.end(), 1.0f);
    } else if (is_vector_zero_init(name)) {
      // already zero
    } else {
      Rng stream = root.fork(name);
      for (auto& v : t.data) v = static_cast<float>(stream.next_trunc_normal(0.02, 2.0));
    }
    store.add(name, std::move(t));
  }
  return store;
}

template <typename T>
typename Tape<T>::Id encoder_forward(Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph,
                                     const ModelConfig& config, const std::vector<std::int32_t>& tokens,
                                     std::size_t batch, std::size_t seq, Mode mode, double dropout_p, Rng& rng) {
  using Id = typename Tape<T>::Id;
  require(seq <= config.max_seq_len, "forward: sequence length " + std::to_string(seq) + " exceeds max_seq_len " +
                                         std::to_string(config.max_seq_len));
  require(tokens.size() == batch * seq, "forward: token matrix size mismatch");
  for (auto t : tokens)
    FTLAB_REQUIRE(t >= 0 && static_cast<std::size_t>(t) < config.vocab_size,
            "forward: token id " + std::to_string(t) + " out of range [0, " + std::to_string(config.vocab_size) + ")");

  auto pid = [&](const std::string& name) {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params.item(i).first == name) return graph.ids[i];
    fail("forward: missing parameter '" + name + "'");
  };

  const bool train = mode == Mode::Train && dropout_p > 0.0;
  auto maybe_dropout = [&](Id x) { return train ? tape.dropout(x, dropout_p, rng) : x; };

  std::vector<std::int32_t> pos_ids(batch * seq);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t s = 0; s < seq; ++s) pos_ids[b * seq + s] = static_cast<std::int32_t>(s);

  Id x = tape.add(tape.embedding_lookup(pid("embeddings.token"), tokens),
                  tape.embedding_lookup(pid("embeddings.position"), pos_ids));
  x = maybe_dropout(x);

  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Id q = tape.add(tape.matmul(x, pid(p + "attention.query.weight")), pid(p + "attention.query.bias"));
    Id k = tape.add(tape.matmul(x, pid(p + "attention.key.weight")), pid(p + "attention.key.bias"));
    Id v = tape.add(tape.matmul(x, pid(p + "attention.value.weight")), pid(p + "attention.value.bias"));
    Id ctx = tape.multi_head_attention(q, k, v, batch, seq, config.num_heads);
    Id attn = tape.add(tape.matmul(ctx, pid(p + "attention.output.dense.weight")), pid(p + "attention.output.dense.bias"));
    attn = maybe_dropout(attn);
    x = tape.layer_norm(tape.add(x, attn), pid(p + "ln1.gain"), pid(p + "ln1.offset"));
    Id ff = tape.gelu(tape.add(tape.matmul(x, pid(p + "ffn.in.weight")), pid(p + "ffn.in.bias")));
    ff = tape.add(tape.matmul(ff, pid(p + "ffn.out.weight")), pid(p + "ffn.out.bias"));
    ff = maybe_dropout(ff);
    x = tape.layer_norm(tape.add(x, ff), pid(p + "ln2.gain"), pid(p + "ln2.offset"));
  }
  return x;
}

template <typename T>
ForwardOut<T> forward_classify(Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph,
                               const ModelConfig& config, const ClassifyBatch& batch, Mode mode, Rng& rng) {
  using Id = typename Tape<T>::Id;
  require(batch.labels.size() == batch.batch, "forward_classify: label count mismatch");
  for (auto l : batch.labels)
    FTLAB_REQUIRE(l >= 0 && static_cast<std::size_t>(l) < config.num_classes,
            "forward_classify: label " + std::to_string(l) + " out of range");

  Id x = encoder_forward(tape, params, graph, config, batch.tokens, batch.batch, batch.seq, mode, config.dropout_p, rng);

  auto pid = [&](const std::string& name) {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params.item(i).first == name) return graph.ids[i];
    fail("forward_classify: missing parameter '" + name + "'");
  };

  std::vector<std::int32_t> first_pos(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) first_pos[b] = static_cast<std::int32_t>(b * batch.seq);
  Id first = tape.embedding_lookup(x, first_pos);
  Id pooled = tape.tanh_op(tape.add(tape.matmul(first, pid("pooler.weight")), pid("pooler.bias")));
  Id logits = tape.add(tape.matmul(pooled, pid("classifier.weight")), pid("classifier.bias"));
  Id loss = tape.cross_entropy_logits(logits, batch.labels);

  ForwardOut<T> out;
  out.loss = loss;
  out.logits = logits;
  out.loss_value = static_cast<double>(tape.value(loss).data[0]);
  const Tensor<T>& lv = tape.value(logits);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const T* row = lv.data.data() + b * config.num_classes;
    std::size_t best = 0;
    for (std::size_t c = 1; c < config.num_classes; ++c)
      if (row[c] > row[best]) best = c;
    if (best == static_cast<std::size_t>(batch.labels[b])) ++out.correct;
  }
  return out;
}

template <typename T>
ForwardOut<T> forward_mlm(Tape<T>& tape, const ParamStore<T>& params, const detail::GraphParams<T>& graph,
                          const ModelConfig& config, const MlmBatch& batch, Mode mode, Rng& rng) {
  using Id = typename Tape<T>::Id;
  require(!batch.positions.empty(), "forward_mlm: at least one masked position is required");
  require(batch.positions.size() == batch.targets.size(), "forward_mlm: positions/targets size mismatch");
  for (auto p : batch.positions)
    FTLAB_REQUIRE(p >= 0 && static_cast<std::size_t>(p) < batch.batch * batch.seq, "forward_mlm: position out of range");

  Id x = encoder_forward(tape, params, graph, config, batch.tokens, batch.batch, batch.seq, mode, config.dropout_p, rng);

  auto pid = [&](const std::string& name) {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params.item(i).first == name) return graph.ids[i];
    fail("forward_mlm: missing parameter '" + name + "'");
  };

  Id hidden = tape.embedding_lookup(x, batch.positions);
  // decoder tied to the token embedding
  Id logits = tape.add(tape.matmul(hidden, pid("embeddings.token"), false, true), pid("mlm_head.bias"));
  Id loss = tape.cross_entropy_logits(logits, batch.targets);

  ForwardOut<T> out;
  out.loss = loss;
  out.logits = logits;
  out.loss_value = static_cast<double>(tape.value(loss).data[0]);
  out.perplexity = std::exp(out.loss_value);
  return out;
}

template typename Tape<float>::Id encoder_forward<float>(Tape<float>&, const ParamStore<float>&,
                                                         const detail::GraphParams<float>&, const ModelConfig&,
                                                         const std::vector<std::int32_t>&, std::size_t, std::size_t,
                                                         Mode, double, Rng&);
template typename Tape<double>::Id encoder_forward<double>(Tape<double>&, const ParamStore<double>&,
                                                           const detail::GraphParams<double>&, const ModelConfig&,
                                                           const std::vector<std::int32_t>&, std::size_t, std::size_t,
                                                           Mode, double, Rng&);
template ForwardOut<float> forward_classify<float>(Tape<float>&, const ParamStore<float>&,
                                                   const detail::GraphParams<float>&, const ModelConfig&,
                                                   const ClassifyBatch&, Mode, Rng&);
template ForwardOut<double> forward_classify<double>(Tape<double>&, const ParamStore<double>&,
                                                     const detail::GraphParams<double>&, const ModelConfig&,
                                                     const ClassifyBatch&, Mode, Rng&);
template ForwardOut<float> forward_mlm<float>(Tape<float>&, const ParamStore<float>&, const detail::GraphParams<float>&,
                                              const ModelConfig&, const MlmBatch&, Mode, Rng&);
template ForwardOut<double> forward_mlm<double>(Tape<double>&, const ParamStore<double>&,
                                                const detail::GraphParams<double>&, const ModelConfig&, const MlmBatch&,
                                                Mode, Rng&);

double classify_loss(const ParamStore<float>& params, const ModelConfig& config, const ClassifyBatch& batch) {
  Tape<float> tape;
  auto graph = detail::register_params(tape, params, /*include_mlm_head=*/false);
  Rng rng(0, "eval");
  return forward_classify(tape, params, graph, config, batch, Mode::Eval, rng).loss_value;
}

EvalCounts classify_eval(const ParamStore<float>& params, const ModelConfig& config, const ClassifyBatch& batch) {
  Tape<float> tape;
  auto graph = detail::register_params(tape, params, /*include_mlm_head=*/false);
  Rng rng(0, "eval");
  auto fw = forward_classify(tape, params, graph, config, batch, Mode::Eval, rng);
  EvalCounts out;
  out.correct = fw.correct;
  out.loss_sum = fw.loss_value * static_cast<double>(batch.batch);
  const auto& lv = tape.value(fw.logits);
  out.predictions.resize(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const float* row = lv.data.data() + b * config.num_classes;
    std::size_t best = 0;
    for (std::size_t c = 1; c < config.num_classes; ++c)
      if (row[c] > row[best]) best = c;
    out.predictions[b] = static_cast<std::int32_t>(best);
  }
  return out;
}

double mlm_loss(const ParamStore<float>& params, const ModelConfig& config, const MlmBatch& batch) {
  Tape<float> tape;
  auto graph = detail::register_params(tape, params, /*include_mlm_head=*/true);
  Rng rng(0, "eval");
  return forward_mlm(tape, params, graph, config, batch, Mode::Eval, rng).loss_value;
}

Checkpoint substitute_top_layers(const Checkpoint& fine_tuned, const Checkpoint& pre_trained, std::size_t k) {
  require(fine_tuned.config == pre_trained.config, "substitute_top_layers: checkpoint configs differ");
  const std::size_t layers = fine_tuned.config.num_layers;
  require(k <= layers, "substitute_top_layers: k = " + std::to_string(k) + " out of range [0, " +
                           std::to_string(layers) + "]");
  Checkpoint out = fine_tuned;
  out.provenance = fine_tuned.provenance + "+top" + std::to_string(k) + "(" + pre_trained.provenance + ")";
  for (std::size_t l = layers - k; l < layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t i = 0; i < out.params.size(); ++i) {
      const std::string& name = out.params.item(i).first;
      if (name.rfind(prefix, 0) == 0) out.params.item(i).second = pre_trained.params.at(name);
    }
  }
  if (k == layers) {
    out.params.at("embeddings.token") = pre_trained.params.at("embeddings.token");
    out.params.at("embeddings.position") = pre_trained.params.at("embeddings.position");
  }
  // MLM head: kept from the fine-tuned checkpoint when both carry one (always
  // the case for this layout); it falls back to the pre-trained head otherwise.
  if (!fine_tuned.params.has("mlm_head.bias") && pre_trained.params.has("mlm_head.bias"))
    out.params.at("mlm_head.bias") = pre_trained.params.at("mlm_head.bias");
  return out;
}

}  // namespace ftlab
