#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ftlab/error.hpp"
#include "ftlab/rng.hpp"
#include "ftlab/tensor.hpp"

namespace ftlab {

// Primitive operation set accepted by apply_primitive.
enum class Prim {
  Matmul,
  Add,
  Scale,
  Mul,
  Softmax,
  Gelu,
  Tanh,
  LayerNorm,
  EmbeddingLookup,
  Dropout,
  CrossEntropyLogits,
  ReduceSum,
  ReduceMean,
  // Fused attention kernel; composite of matmul/softmax/scale with its own
  // backward, kept on the tape like any primitive.
  MultiHeadAttention,
};

inline const char* prim_name(Prim p) {
  switch (p) {
    case Prim::Matmul: return "matmul";
    case Prim::Add: return "add";
    case Prim::Scale: return "scale";
    case Prim::Mul: return "elementwise-mul";
    case Prim::Softmax: return "softmax";
    case Prim::Gelu: return "gelu";
    case Prim::Tanh: return "tanh";
    case Prim::LayerNorm: return "layer-norm";
    case Prim::EmbeddingLookup: return "embedding-lookup";
    case Prim::Dropout: return "dropout";
    case Prim::CrossEntropyLogits: return "cross-entropy-with-logits";
    case Prim::ReduceSum: return "reduction-sum";
    case Prim::ReduceMean: return "reduction-mean";
    case Prim::MultiHeadAttention: return "multi-head-attention";
  }
  return "unknown";
}

struct PrimArgs {
  double scalar = 1.0;                // Scale
  double dropout_p = 0.0;             // Dropout
  Rng* rng = nullptr;                 // Dropout
  std::vector<std::int32_t> indices;  // EmbeddingLookup ids / CrossEntropy targets
  std::size_t batch = 0, seq = 0, heads = 0;  // MultiHeadAttention
  bool trans_a = false, trans_b = false;      // Matmul
};

// C (+)= op(A) * op(B), row-major. Plain loops arranged so the inner loop
// streams contiguously; fast enough for desk-scale shapes.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  if (!trans_a && !trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      const T* arow = a + i * k;
      for (std::size_t l = 0; l < k; ++l) {
        const T av = arow[l];
        const T* brow = b + l * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      const T* arow = a + i * k;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * k;
        T acc = T(0);
        for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
        crow[j] += acc;
      }
    }
  } else if (trans_a && !trans_b) {
    for (std::size_t l = 0; l < k; ++l) {
      const T* arow = a + l * m;
      const T* brow = b + l * n;
      for (std::size_t i = 0; i < m; ++i) {
        const T av = arow[i];
        T* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * k;
        T acc = T(0);
        for (std::size_t l = 0; l < k; ++l) acc += a[l * m + i] * brow[l];
        crow[j] += acc;
      }
    }
  }
}

// Reverse-mode autodiff over a linear tape of primitive records. Nodes are
// created in topological order by construction; backward walks the records
// once in reverse. Single-threaded per tape; independent tapes may run
// concurrently.
template <typename T>
class Tape {
 public:
  using Id = std::int32_t;

  // ----- graph construction -----

  Id leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(std::move(value));
    grads_.emplace_back();
    (void)requires_grad;  // every leaf may receive a gradient; flag kept for intent
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id matmul(Id a, Id b, bool trans_a = false, bool trans_b = false) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    FTLAB_REQUIRE(av.rank() == 2 && bv.rank() == 2,
            std::string("matmul: expects rank-2 tensors, got ") + shape_str(av.shape) + " and " + shape_str(bv.shape));
    const std::size_t m = trans_a ? av.shape[1] : av.shape[0];
    const std::size_t ka = trans_a ? av.shape[0] : av.shape[1];
    const std::size_t kb = trans_b ? bv.shape[1] : bv.shape[0];
    const std::size_t n = trans_b ? bv.shape[0] : bv.shape[1];
    FTLAB_REQUIRE(ka == kb, "matmul: inner dimensions disagree, " + shape_str(av.shape) + (trans_a ? "^T" : "") + " vs " +
                          shape_str(bv.shape) + (trans_b ? "^T" : ""));
    Tensor<T> out({m, n});
    gemm<T>(trans_a, trans_b, m, n, ka, av.data.data(), bv.data.data(), out.data.data(), false);
    return record(Prim::Matmul, a, b, std::move(out), Rec{.flag_a = trans_a, .flag_b = trans_b});
  }

  // Same-shape addition, or row-broadcast of a length-N vector over [M, N].
  Id add(Id a, Id b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    const bool bias = bv.rank() == 1 && av.rank() == 2 && av.shape[1] == bv.shape[0];
    FTLAB_REQUIRE(bias || av.shape == bv.shape,
            "add: shapes " + shape_str(av.shape) + " and " + shape_str(bv.shape) + " are not addable");
    Tensor<T> out(av.shape);
    if (bias) {
      const std::size_t rows = av.shape[0], cols = av.shape[1];
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out.data[i * cols + j] = av.data[i * cols + j] + bv.data[j];
    } else {
      for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];
    }
    return record(Prim::Add, a, b, std::move(out), Rec{.flag_a = bias});
  }

  Id scale(Id a, double s) {
    const Tensor<T>& av = value(a);
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = static_cast<T>(av.data[i] * s);
    return record(Prim::Scale, a, -1, std::move(out), Rec{.scalar = s});
  }

  Id mul(Id a, Id b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    FTLAB_REQUIRE(av.shape == bv.shape,
            "elementwise-mul: shapes " + shape_str(av.shape) + " and " + shape_str(bv.shape) + " differ");
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] * bv.data[i];
    return record(Prim::Mul, a, b, std::move(out), Rec{});
  }

  // Softmax over the last axis, max-subtracted for stability.
  Id softmax(Id a) {
    const Tensor<T>& av = value(a);
    FTLAB_REQUIRE(av.rank() >= 1, "softmax: requires rank >= 1");
    const std::size_t cols = av.shape.back();
    const std::size_t rows = av.numel() / cols;
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < rows; ++i) {
      const T* x = av.data.data() + i * cols;
      T* y = out.data.data() + i * cols;
      softmax_row(x, y, cols);
    }
    return record(Prim::Softmax, a, -1, std::move(out), Rec{});
  }

  Id gelu(Id a) {
    const Tensor<T>& av = value(a);
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = gelu_tanh(av.data[i]);
    return record(Prim::Gelu, a, -1, std::move(out), Rec{});
  }

  Id tanh_op(Id a) {
    const Tensor<T>& av = value(a);
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < av.numel(); ++i) out.data[i] = std::tanh(av.data[i]);
    return record(Prim::Tanh, a, -1, std::move(out), Rec{});
  }

  // Layer norm over the last axis with learnable gain/offset; population
  // variance, statistics carried in double.
  Id layer_norm(Id x, Id gain, Id offset) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& gv = value(gain);
    const Tensor<T>& ov = value(offset);
    FTLAB_REQUIRE(xv.rank() >= 1, "layer-norm: requires rank >= 1");
    const std::size_t cols = xv.shape.back();
    FTLAB_REQUIRE(gv.shape == Shape{cols} && ov.shape == Shape{cols},
            "layer-norm: gain/offset must be length-" + std::to_string(cols) + " vectors, got " + shape_str(gv.shape) +
                " and " + shape_str(ov.shape));
    const std::size_t rows = xv.numel() / cols;
    Tensor<T> out(xv.shape);
    Rec rec;
    rec.cache.resize(2 * rows);  // per row: mean, invstd
    for (std::size_t i = 0; i < rows; ++i) {
      const T* xr = xv.data.data() + i * cols;
      double mean = 0.0;
      for (std::size_t j = 0; j < cols; ++j) mean += static_cast<double>(xr[j]);
      mean /= static_cast<double>(cols);
      double var = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double d = static_cast<double>(xr[j]) - mean;
        var += d * d;
      }
      var /= static_cast<double>(cols);
      const double invstd = 1.0 / std::sqrt(var + kLayerNormEps);
      rec.cache[2 * i] = mean;
      rec.cache[2 * i + 1] = invstd;
      T* yr = out.data.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        const double xhat = (static_cast<double>(xr[j]) - mean) * invstd;
        yr[j] = static_cast<T>(xhat * static_cast<double>(gv.data[j]) + static_cast<double>(ov.data[j]));
      }
    }
    rec.in2 = offset;
    return record(Prim::LayerNorm, x, gain, std::move(out), std::move(rec));
  }

  // Row gather; serves both embedding lookup (table is a parameter) and
  // position/token gathers (table is an activation).
  Id embedding_lookup(Id table, std::vector<std::int32_t> ids) {
    const Tensor<T>& tv = value(table);
    FTLAB_REQUIRE(tv.rank() == 2, "embedding-lookup: table must be rank-2, got " + shape_str(tv.shape));
    const std::size_t rows = tv.shape[0], cols = tv.shape[1];
    Tensor<T> out({ids.size(), cols});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto id = ids[i];
      FTLAB_REQUIRE(id >= 0 && static_cast<std::size_t>(id) < rows,
              "embedding-lookup: index " + std::to_string(id) + " out of range [0, " + std::to_string(rows) + ")");
      std::copy_n(tv.data.data() + static_cast<std::size_t>(id) * cols, cols, out.data.data() + i * cols);
    }
    Rec rec;
    rec.indices = std::move(ids);
    return record(Prim::EmbeddingLookup, table, -1, std::move(out), std::move(rec));
  }

  // Inverted dropout: kept activations scaled by 1/(1-p) at train time.
  Id dropout(Id a, double p, Rng& rng) {
    FTLAB_REQUIRE(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1), got " + fmt(p));
    const Tensor<T>& av = value(a);
    Tensor<T> out(av.shape);
    Rec rec;
    rec.mask.resize(av.numel());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < av.numel(); ++i) {
      const T m = rng.next_double() < p ? T(0) : keep_scale;
      rec.mask[i] = m;
      out.data[i] = av.data[i] * m;
    }
    return record(Prim::Dropout, a, -1, std::move(out), std::move(rec));
  }

  // Mean cross-entropy of rows of logits against integer targets; scalar
  // output; per-row log-sum-exp carried in double.
  Id cross_entropy_logits(Id logits, std::vector<std::int32_t> targets) {
    const Tensor<T>& lv = value(logits);
    FTLAB_REQUIRE(lv.rank() == 2, "cross-entropy-with-logits: logits must be rank-2, got " + shape_str(lv.shape));
    const std::size_t rows = lv.shape[0], cols = lv.shape[1];
    FTLAB_REQUIRE(targets.size() == rows, "cross-entropy-with-logits: " + std::to_string(targets.size()) + " targets for " +
                                        std::to_string(rows) + " rows");
    Rec rec;
    rec.cache.resize(rows * cols);  // softmax probabilities
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto t = targets[i];
      FTLAB_REQUIRE(t >= 0 && static_cast<std::size_t>(t) < cols,
              "cross-entropy-with-logits: target " + std::to_string(t) + " out of range [0, " + std::to_string(cols) + ")");
      const T* x = lv.data.data() + i * cols;
      double mx = static_cast<double>(x[0]);
      for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, static_cast<double>(x[j]));
      double sum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) sum += std::exp(static_cast<double>(x[j]) - mx);
      const double lse = mx + std::log(sum);
      total += lse - static_cast<double>(x[t]);
      double* prow = rec.cache.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) prow[j] = std::exp(static_cast<double>(x[j]) - lse);
    }
    Tensor<T> out({1});
    out.data[0] = static_cast<T>(total / static_cast<double>(rows));
    rec.indices = std::move(targets);
    return record(Prim::CrossEntropyLogits, logits, -1, std::move(out), std::move(rec));
  }

  Id reduce_sum(Id a) { return reduce(a, /*mean=*/false); }
  Id reduce_mean(Id a) { return reduce(a, /*mean=*/true); }

  // Fused multi-head self-attention over rows laid out as [batch*seq, hidden].
  // Head h occupies the column slice [h*hd, (h+1)*hd). Scores are scaled by
  // 1/sqrt(hd); attention probabilities are cached for the backward pass.
  Id multi_head_attention(Id q, Id k, Id v, std::size_t batch, std::size_t seq, std::size_t heads) {
    const Tensor<T>& qv = value(q);
    const Tensor<T>& kv = value(k);
    const Tensor<T>& vv = value(v);
    FTLAB_REQUIRE(qv.rank() == 2 && qv.shape == kv.shape && qv.shape == vv.shape,
            "multi-head-attention: Q/K/V shapes must match, got " + shape_str(qv.shape) + ", " + shape_str(kv.shape) +
                ", " + shape_str(vv.shape));
    const std::size_t hidden = qv.shape[1];
    FTLAB_REQUIRE(qv.shape[0] == batch * seq, "multi-head-attention: rows != batch*seq");
    FTLAB_REQUIRE(heads > 0 && hidden % heads == 0, "multi-head-attention: hidden not divisible by heads");
    const std::size_t hd = hidden / heads;
    const T inv_sqrt_hd = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

    Tensor<T> out(qv.shape);
    Rec rec;
    rec.cache.resize(batch * heads * seq * seq);  // probabilities, double
    rec.dims = {batch, seq, heads};
    std::vector<T> scores(seq);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t col0 = h * hd;
        double* probs = rec.cache.data() + ((b * heads) + h) * seq * seq;
        for (std::size_t s = 0; s < seq; ++s) {
          const T* qrow = qv.data.data() + (b * seq + s) * hidden + col0;
          for (std::size_t t = 0; t < seq; ++t) {
            const T* krow = kv.data.data() + (b * seq + t) * hidden + col0;
            T acc = T(0);
            for (std::size_t d = 0; d < hd; ++d) acc += qrow[d] * krow[d];
            scores[t] = acc * inv_sqrt_hd;
          }
          // max-subtracted softmax over t, element-type-native exp
          T mx = scores[0];
          for (std::size_t t = 1; t < seq; ++t) mx = std::max(mx, scores[t]);
          double sum = 0.0;
          double* prow = probs + s * seq;
          for (std::size_t t = 0; t < seq; ++t) {
            prow[t] = static_cast<double>(std::exp(scores[t] - mx));
            sum += prow[t];
          }
          const double inv = 1.0 / sum;
          T* orow = out.data.data() + (b * seq + s) * hidden + col0;
          std::fill(orow, orow + hd, T(0));
          for (std::size_t t = 0; t < seq; ++t) {
            prow[t] *= inv;
            const T p = static_cast<T>(prow[t]);
            const T* vrow = vv.data.data() + (b * seq + t) * hidden + col0;
            for (std::size_t d = 0; d < hd; ++d) orow[d] += p * vrow[d];
          }
        }
      }
    }
    rec.in2 = v;
    return record(Prim::MultiHeadAttention, q, k, std::move(out), std::move(rec));
  }

  // Generic dispatcher over the primitive set; used by the gradient-check
  // batteries and anything driving the engine by op id.
  Id apply_primitive(Prim op, const std::vector<Id>& inputs, const PrimArgs& args = {}) {
    switch (op) {
      case Prim::Matmul:
        need(op, inputs, 2);
        return matmul(inputs[0], inputs[1], args.trans_a, args.trans_b);
      case Prim::Add:
        need(op, inputs, 2);
        return add(inputs[0], inputs[1]);
      case Prim::Scale:
        need(op, inputs, 1);
        return scale(inputs[0], args.scalar);
      case Prim::Mul:
        need(op, inputs, 2);
        return mul(inputs[0], inputs[1]);
      case Prim::Softmax:
        need(op, inputs, 1);
        return softmax(inputs[0]);
      case Prim::Gelu:
        need(op, inputs, 1);
        return gelu(inputs[0]);
      case Prim::Tanh:
        need(op, inputs, 1);
        return tanh_op(inputs[0]);
      case Prim::LayerNorm:
        need(op, inputs, 3);
        return layer_norm(inputs[0], inputs[1], inputs[2]);
      case Prim::EmbeddingLookup:
        need(op, inputs, 1);
        return embedding_lookup(inputs[0], args.indices);
      case Prim::Dropout:
        need(op, inputs, 1);
        FTLAB_REQUIRE(args.rng != nullptr, "dropout: requires an explicit RNG stream");
        return dropout(inputs[0], args.dropout_p, *args.rng);
      case Prim::CrossEntropyLogits:
        need(op, inputs, 1);
        return cross_entropy_logits(inputs[0], args.indices);
      case Prim::ReduceSum:
        need(op, inputs, 1);
        return reduce_sum(inputs[0]);
      case Prim::ReduceMean:
        need(op, inputs, 1);
        return reduce_mean(inputs[0]);
      case Prim::MultiHeadAttention:
        need(op, inputs, 3);
        return multi_head_attention(inputs[0], inputs[1], inputs[2], args.batch, args.seq, args.heads);
    }
    fail("apply_primitive: unknown primitive");
  }

  // ----- access -----

  const Tensor<T>& value(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t node_count() const { return nodes_.size(); }

  // Gradient of the last backward()'s loss w.r.t. node `id`; zero tensor if
  // the node does not lie on the loss path.
  Tensor<T> grad(Id id) const {
    const auto& g = grads_[static_cast<std::size_t>(id)];
    if (g.numel() == 0) return Tensor<T>(value(id).shape);
    return g;
  }

  bool finite_ok() const { return finite_ok_; }
  const std::string& first_nonfinite() const { return first_nonfinite_; }

  // ----- backward -----

  void backward(Id loss) {
    const Tensor<T>& lv = value(loss);
    FTLAB_REQUIRE(lv.numel() == 1, "backward: loss must be scalar, got shape " + shape_str(lv.shape));
    for (auto& g : grads_) g.data.clear(), g.shape.clear();
    ensure_grad(loss).data[0] = T(1);
    for (std::size_t r = recs_.size(); r-- > 0;) {
      const Rec& rec = recs_[r];
      const auto& og = grads_[static_cast<std::size_t>(rec.out)];
      if (og.numel() == 0) continue;  // not on the loss path
      backward_one(rec, og);
    }
  }

 private:
  static constexpr double kLayerNormEps = 1e-12;

  struct Rec {
    Prim kind{};
    Id in0 = -1, in1 = -1, in2 = -1;
    Id out = -1;
    bool flag_a = false, flag_b = false;  // matmul transposes / add broadcast
    double scalar = 1.0;
    std::vector<double> cache;            // op-specific forward cache
    std::vector<T> mask;                  // dropout mask
    std::vector<std::int32_t> indices;    // lookup ids / CE targets
    std::array<std::size_t, 3> dims{};    // MHA: batch, seq, heads
  };

  std::vector<Tensor<T>> nodes_;
  std::vector<Tensor<T>> grads_;
  std::vector<Rec> recs_;
  bool finite_ok_ = true;
  std::string first_nonfinite_;

  static std::string fmt(double v) { return std::to_string(v); }

  void need(Prim op, const std::vector<Id>& inputs, std::size_t n) {
    FTLAB_REQUIRE(inputs.size() == n, std::string(prim_name(op)) + ": expects " + std::to_string(n) + " inputs, got " +
                                    std::to_string(inputs.size()));
  }

  // rec.in2 may be pre-set by ops with a third input (layer norm, attention).
  Id record(Prim kind, Id in0, Id in1, Tensor<T> out, Rec rec) {
    if (finite_ok_ && !out.all_finite()) {
      finite_ok_ = false;
      first_nonfinite_ = prim_name(kind);
    }
    nodes_.push_back(std::move(out));
    grads_.emplace_back();
    rec.kind = kind;
    rec.in0 = in0;
    rec.in1 = in1;
    rec.out = static_cast<Id>(nodes_.size() - 1);
    recs_.push_back(std::move(rec));
    return recs_.back().out;
  }

  Tensor<T>& ensure_grad(Id id) {
    auto& g = grads_[static_cast<std::size_t>(id)];
    if (g.numel() == 0) g = Tensor<T>(value(id).shape);
    return g;
  }

  Id reduce(Id a, bool mean) {
    const Tensor<T>& av = value(a);
    FTLAB_REQUIRE(av.numel() > 0, "reduction: empty input");
    double acc = 0.0;
    for (const T& v : av.data) acc += static_cast<double>(v);
    if (mean) acc /= static_cast<double>(av.numel());
    Tensor<T> out({1});
    out.data[0] = static_cast<T>(acc);
    return record(mean ? Prim::ReduceMean : Prim::ReduceSum, a, -1, std::move(out), Rec{});
  }

  static void softmax_row(const T* x, T* y, std::size_t n) {
    double mx = static_cast<double>(x[0]);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(x[j]));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::exp(static_cast<double>(x[j]) - mx);
      y[j] = static_cast<T>(e);
      sum += e;
    }
    const T inv = static_cast<T>(1.0 / sum);
    for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
  }

  // element-type-native math: float path avoids double tanh/exp costs
  static T gelu_tanh(T x) {
    // tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
    const T u = T(0.7978845608028654) * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
  }

  static T gelu_tanh_deriv(T x) {
    const T u = T(0.7978845608028654) * (x + T(0.044715) * x * x * x);
    const T th = std::tanh(u);
    const T sech2 = T(1) - th * th;
    const T du = T(0.7978845608028654) * (T(1) + T(3) * T(0.044715) * x * x);
    return T(0.5) * (T(1) + th) + T(0.5) * x * sech2 * du;
  }

  void backward_one(const Rec& rec, const Tensor<T>& og) {
    switch (rec.kind) {
      case Prim::Matmul: {
        const Tensor<T>& av = value(rec.in0);
        const Tensor<T>& bv = value(rec.in1);
        Tensor<T>& da = ensure_grad(rec.in0);
        Tensor<T>& db = ensure_grad(rec.in1);
        const bool ta = rec.flag_a, tb = rec.flag_b;
        const std::size_t m = og.shape[0], n = og.shape[1];
        const std::size_t k = ta ? av.shape[0] : av.shape[1];
        // dA' = dC * B'^T, dB' = A'^T * dC; transposed operands fold into flags.
        if (!ta) {
          gemm<T>(false, !tb, m, k, n, og.data.data(), bv.data.data(), da.data.data(), true);
        } else {
          gemm<T>(tb, true, k, m, n, bv.data.data(), og.data.data(), da.data.data(), true);
        }
        if (!tb) {
          gemm<T>(!ta, false, k, n, m, av.data.data(), og.data.data(), db.data.data(), true);
        } else {
          gemm<T>(true, ta, n, k, m, og.data.data(), av.data.data(), db.data.data(), true);
        }
        break;
      }
      case Prim::Add: {
        Tensor<T>& da = ensure_grad(rec.in0);
        Tensor<T>& db = ensure_grad(rec.in1);
        for (std::size_t i = 0; i < og.numel(); ++i) da.data[i] += og.data[i];
        if (rec.flag_a) {  // bias broadcast
          const std::size_t rows = og.shape[0], cols = og.shape[1];
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) db.data[j] += og.data[i * cols + j];
        } else {
          for (std::size_t i = 0; i < og.numel(); ++i) db.data[i] += og.data[i];
        }
        break;
      }
      case Prim::Scale: {
        Tensor<T>& da = ensure_grad(rec.in0);
        for (std::size_t i = 0; i < og.numel(); ++i) da.data[i] += static_cast<T>(og.data[i] * rec.scalar);
        break;
      }
      case Prim::Mul: {
        const Tensor<T>& av = value(rec.in0);
        const Tensor<T>& bv = value(rec.in1);
        Tensor<T>& da = ensure_grad(rec.in0);
        Tensor<T>& db = ensure_grad(rec.in1);
        for (std::size_t i = 0; i < og.numel(); ++i) {
          da.data[i] += bv.data[i] * og.data[i];
          db.data[i] += av.data[i] * og.data[i];
        }
        break;
      }
      case Prim::Softmax: {
        const Tensor<T>& y = value(rec.out);
        Tensor<T>& da = ensure_grad(rec.in0);
        const std::size_t cols = y.shape.back();
        const std::size_t rows = y.numel() / cols;
        for (std::size_t i = 0; i < rows; ++i) {
          const T* yr = y.data.data() + i * cols;
          const T* gr = og.data.data() + i * cols;
          double dot = 0.0;
          for (std::size_t j = 0; j < cols; ++j) dot += static_cast<double>(yr[j]) * static_cast<double>(gr[j]);
          T* dr = da.data.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j)
            dr[j] += static_cast<T>(static_cast<double>(yr[j]) * (static_cast<double>(gr[j]) - dot));
        }
        break;
      }
      case Prim::Gelu: {
        const Tensor<T>& av = value(rec.in0);
        Tensor<T>& da = ensure_grad(rec.in0);
        for (std::size_t i = 0; i < og.numel(); ++i) da.data[i] += gelu_tanh_deriv(av.data[i]) * og.data[i];
        break;
      }
      case Prim::Tanh: {
        const Tensor<T>& y = value(rec.out);
        Tensor<T>& da = ensure_grad(rec.in0);
        for (std::size_t i = 0; i < og.numel(); ++i)
          da.data[i] += static_cast<T>((1.0 - static_cast<double>(y.data[i]) * static_cast<double>(y.data[i])) *
                                       static_cast<double>(og.data[i]));
        break;
      }
      case Prim::LayerNorm: {
        const Tensor<T>& xv = value(rec.in0);
        const Tensor<T>& gv = value(rec.in1);
        Tensor<T>& dx = ensure_grad(rec.in0);
        Tensor<T>& dg = ensure_grad(rec.in1);
        Tensor<T>& db = ensure_grad(rec.in2);
        const std::size_t cols = xv.shape.back();
        const std::size_t rows = xv.numel() / cols;
        for (std::size_t i = 0; i < rows; ++i) {
          const double mean = rec.cache[2 * i];
          const double invstd = rec.cache[2 * i + 1];
          const T* xr = xv.data.data() + i * cols;
          const T* gr = og.data.data() + i * cols;
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < cols; ++j) {
            const double xhat = (static_cast<double>(xr[j]) - mean) * invstd;
            const double dxhat = static_cast<double>(gr[j]) * static_cast<double>(gv.data[j]);
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat;
          }
          mean_dxhat /= static_cast<double>(cols);
          mean_dxhat_xhat /= static_cast<double>(cols);
          T* dxr = dx.data.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) {
            const double xhat = (static_cast<double>(xr[j]) - mean) * invstd;
            const double dxhat = static_cast<double>(gr[j]) * static_cast<double>(gv.data[j]);
            dxr[j] += static_cast<T>((dxhat - mean_dxhat - xhat * mean_dxhat_xhat) * invstd);
            dg.data[j] += static_cast<T>(static_cast<double>(gr[j]) * xhat);
            db.data[j] += gr[j];
          }
        }
        break;
      }
      case Prim::EmbeddingLookup: {
        Tensor<T>& dt = ensure_grad(rec.in0);
        const std::size_t cols = dt.shape[1];
        for (std::size_t i = 0; i < rec.indices.size(); ++i) {
          T* drow = dt.data.data() + static_cast<std::size_t>(rec.indices[i]) * cols;
          const T* grow = og.data.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) drow[j] += grow[j];
        }
        break;
      }
      case Prim::Dropout: {
        Tensor<T>& da = ensure_grad(rec.in0);
        for (std::size_t i = 0; i < og.numel(); ++i) da.data[i] += og.data[i] * rec.mask[i];
        break;
      }
      case Prim::CrossEntropyLogits: {
        Tensor<T>& dl = ensure_grad(rec.in0);
        const std::size_t rows = dl.shape[0], cols = dl.shape[1];
        const double scale = static_cast<double>(og.data[0]) / static_cast<double>(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* prow = rec.cache.data() + i * cols;
          T* drow = dl.data.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) drow[j] += static_cast<T>(prow[j] * scale);
          drow[static_cast<std::size_t>(rec.indices[i])] -= static_cast<T>(scale);
        }
        break;
      }
      case Prim::ReduceSum: {
        Tensor<T>& da = ensure_grad(rec.in0);
        for (auto& v : da.data) v += og.data[0];
        break;
      }
      case Prim::ReduceMean: {
        Tensor<T>& da = ensure_grad(rec.in0);
        const T g = static_cast<T>(static_cast<double>(og.data[0]) / static_cast<double>(da.numel()));
        for (auto& v : da.data) v += g;
        break;
      }
      case Prim::MultiHeadAttention: {
        const Tensor<T>& qv = value(rec.in0);
        const Tensor<T>& kv = value(rec.in1);
        const Tensor<T>& vv = value(rec.in2);
        Tensor<T>& dq = ensure_grad(rec.in0);
        Tensor<T>& dk = ensure_grad(rec.in1);
        Tensor<T>& dv = ensure_grad(rec.in2);
        const auto [batch, seq, heads] = rec.dims;
        const std::size_t hidden = qv.shape[1];
        const std::size_t hd = hidden / heads;
        const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
        std::vector<double> dp(seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t col0 = h * hd;
            const double* probs = rec.cache.data() + ((b * heads) + h) * seq * seq;
            for (std::size_t s = 0; s < seq; ++s) {
              const T* grow = og.data.data() + (b * seq + s) * hidden + col0;
              const double* prow = probs + s * seq;
              double dot = 0.0;
              for (std::size_t t = 0; t < seq; ++t) {
                const T* vrow = vv.data.data() + (b * seq + t) * hidden + col0;
                double acc = 0.0;
                for (std::size_t d = 0; d < hd; ++d) acc += static_cast<double>(grow[d]) * static_cast<double>(vrow[d]);
                dp[t] = acc;
                dot += acc * prow[t];
                // dV[t] += P[s,t] * dOut[s]
                T* dvrow = dv.data.data() + (b * seq + t) * hidden + col0;
                const T p = static_cast<T>(prow[t]);
                for (std::size_t d = 0; d < hd; ++d) dvrow[d] += p * grow[d];
              }
              const T* qrow = qv.data.data() + (b * seq + s) * hidden + col0;
              T* dqrow = dq.data.data() + (b * seq + s) * hidden + col0;
              for (std::size_t t = 0; t < seq; ++t) {
                const double dscore = prow[t] * (dp[t] - dot) * inv_sqrt_hd;
                const T* krow = kv.data.data() + (b * seq + t) * hidden + col0;
                T* dkrow = dk.data.data() + (b * seq + t) * hidden + col0;
                const T ds = static_cast<T>(dscore);
                for (std::size_t d = 0; d < hd; ++d) {
                  dqrow[d] += ds * krow[d];
                  dkrow[d] += ds * qrow[d];
                }
              }
            }
          }
        }
        break;
      }
    }
  }
};

}  // namespace ftlab
