#include "ftlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ftlab/error.hpp"
#include "ftlab/io.hpp"

namespace ftlab {

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Accuracy: return "accuracy";
    case Metric::F1: return "f1";
    case Metric::Mcc: return "mcc";
  }
  return "accuracy";
}

Metric metric_from_name(const std::string& name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "f1") return Metric::F1;
  if (name == "mcc") return Metric::Mcc;
  fail("unknown metric '" + name + "' (expected accuracy, f1, or mcc)");
}

void GrammarSpec::validate() const {
  require(num_states >= 2, "grammar: num_states must be >= 2");
  require(vocab_size >= num_states + 1, "grammar: vocab_size must exceed num_states (token 0 is the mask)");
  require(seq_len >= 1, "grammar: seq_len must be >= 1");
  require(self_loop >= 0.0 && self_loop < 1.0, "grammar: self_loop must lie in [0, 1)");
  require(emit_noise >= 0.0 && emit_noise < 1.0, "grammar: emit_noise must lie in [0, 1)");
  require(label_threshold > 0.0 && label_threshold < 1.0, "grammar: label_threshold must lie in (0, 1)");
}

namespace {

struct GrammarTables {
  // per state: jump destination weights (excluding self), cumulative
  std::vector<std::vector<double>> jump_cdf;
  // per state: band [lo, hi) over tokens 1..vocab-1 and Zipf cdf inside
  std::vector<std::size_t> band_lo, band_hi;
  std::vector<std::vector<double>> band_cdf;
};

GrammarTables build_tables(const GrammarSpec& spec) {
  GrammarTables t;
  const std::size_t k = spec.num_states;
  const std::size_t usable = spec.vocab_size - 1;  // token 0 reserved
  Rng table_rng(spec.table_seed, "grammar-tables");

  t.jump_cdf.resize(k);
  t.band_lo.resize(k);
  t.band_hi.resize(k);
  t.band_cdf.resize(k);
  for (std::size_t s = 0; s < k; ++s) {
    // random jump weights to the other states
    Rng row = table_rng.fork("jump", s);
    std::vector<double> w(k, 0.0);
    double sum = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
      if (d == s) continue;
      w[d] = 0.1 + row.next_double();
      sum += w[d];
    }
    double acc = 0.0;
    t.jump_cdf[s].resize(k);
    for (std::size_t d = 0; d < k; ++d) {
      acc += w[d] / sum;
      t.jump_cdf[s][d] = acc;
    }
    // contiguous vocabulary band with Zipf-shaped mass
    const std::size_t lo = 1 + s * usable / k;
    const std::size_t hi = 1 + (s + 1) * usable / k;
    t.band_lo[s] = lo;
    t.band_hi[s] = hi;
    std::vector<double>& cdf = t.band_cdf[s];
    cdf.resize(hi - lo);
    double z = 0.0;
    for (std::size_t j = 0; j < cdf.size(); ++j) z += 1.0 / static_cast<double>(1 + j);
    double run = 0.0;
    for (std::size_t j = 0; j < cdf.size(); ++j) {
      run += 1.0 / static_cast<double>(1 + j) / z;
      cdf[j] = run;
    }
  }
  return t;
}

std::size_t sample_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

// Walks the chain for one sequence; returns tokens and the fraction of steps
// spent in the low half of the state space.
std::vector<std::int32_t> walk(const GrammarSpec& spec, const GrammarTables& t, Rng& rng, double* low_occupancy) {
  const std::size_t k = spec.num_states;
  std::vector<std::int32_t> seq(spec.seq_len);
  std::size_t state = static_cast<std::size_t>(rng.next_below(k));
  std::size_t low = 0;
  for (std::size_t i = 0; i < spec.seq_len; ++i) {
    if (state < k / 2) ++low;
    std::int32_t tok;
    if (rng.next_double() < spec.emit_noise) {
      tok = static_cast<std::int32_t>(1 + rng.next_below(spec.vocab_size - 1));
    } else {
      const std::size_t j = sample_cdf(t.band_cdf[state], rng.next_double());
      tok = static_cast<std::int32_t>(t.band_lo[state] + j);
    }
    seq[i] = tok;
    if (rng.next_double() >= spec.self_loop) state = sample_cdf(t.jump_cdf[state], rng.next_double());
  }
  if (low_occupancy) *low_occupancy = static_cast<double>(low) / static_cast<double>(spec.seq_len);
  return seq;
}

std::uint64_t seq_hash(const std::vector<std::int32_t>& seq) {
  return fnv1a_bytes(seq.data(), seq.size() * sizeof(std::int32_t));
}

}  // namespace

Corpus generate_corpus(const GrammarSpec& spec, std::uint64_t seed, std::size_t size) {
  spec.validate();
  require(size >= 1, "generate_corpus: size must be >= 1");
  const GrammarTables tables = build_tables(spec);
  Corpus corpus;
  corpus.vocab_size = spec.vocab_size;
  corpus.spec = spec;
  corpus.seed = seed;
  corpus.sequences.reserve(size);
  const Rng root(seed, "sampling");
  for (std::size_t i = 0; i < size; ++i) {
    Rng rng = root.fork("corpus", i);
    corpus.sequences.push_back(walk(spec, tables, rng, nullptr));
  }
  return corpus;
}

MaskedSequence mask_tokens(const std::vector<std::int32_t>& sequence, Rng rng, double mask_rate,
                           const MaskPolicy& policy, std::size_t vocab_size) {
  require(mask_rate > 0.0 && mask_rate <= 1.0, "mask_tokens: mask_rate must lie in (0, 1]");
  require(policy.mask_fraction + policy.random_fraction <= 1.0, "mask_tokens: policy fractions exceed 1");
  require(!sequence.empty(), "mask_tokens: empty sequence");

  MaskedSequence out;
  out.tokens = sequence;
  auto select = [&](std::vector<std::int32_t>& positions) {
    positions.clear();
    for (std::size_t i = 0; i < sequence.size(); ++i)
      if (rng.next_double() < mask_rate) positions.push_back(static_cast<std::int32_t>(i));
  };
  select(out.positions);
  if (out.positions.empty()) select(out.positions);  // one re-draw
  if (out.positions.empty())
    out.positions.push_back(static_cast<std::int32_t>(rng.next_below(sequence.size())));

  out.targets.reserve(out.positions.size());
  for (std::int32_t pos : out.positions) {
    out.targets.push_back(sequence[static_cast<std::size_t>(pos)]);
    const double r = rng.next_double();
    if (r < policy.mask_fraction) {
      out.tokens[static_cast<std::size_t>(pos)] = kMaskToken;
    } else if (r < policy.mask_fraction + policy.random_fraction) {
      out.tokens[static_cast<std::size_t>(pos)] = static_cast<std::int32_t>(1 + rng.next_below(vocab_size - 1));
    }
    // else: left unchanged
  }
  return out;
}

TaskPair generate_classification_task(const GrammarSpec& spec, std::uint64_t seed, std::size_t train_size,
                                      std::size_t dev_size, std::size_t num_classes, Metric metric) {
  spec.validate();
  require(train_size >= 1 && dev_size >= 1, "generate_classification_task: sizes must be >= 1");
  require(num_classes >= 2, "generate_classification_task: num_classes must be >= 2");

  const GrammarTables tables = build_tables(spec);
  const Rng root(seed, "sampling");

  auto label_of = [&](double occupancy) {
    if (num_classes == 2) return static_cast<std::int32_t>(occupancy > spec.label_threshold ? 1 : 0);
    const auto bucket = static_cast<std::size_t>(occupancy * static_cast<double>(num_classes));
    return static_cast<std::int32_t>(std::min(bucket, num_classes - 1));
  };

  TaskPair pair;
  pair.train.num_classes = pair.dev.num_classes = num_classes;
  pair.train.vocab_size = pair.dev.vocab_size = spec.vocab_size;
  pair.train.metric = pair.dev.metric = metric;
  pair.train.split = "train";
  pair.dev.split = "dev";

  std::unordered_set<std::uint64_t> train_hashes;
  pair.train.examples.reserve(train_size);
  for (std::size_t i = 0; i < train_size; ++i) {
    Rng rng = root.fork("task-train", i);
    double occ = 0.0;
    auto tokens = walk(spec, tables, rng, &occ);
    train_hashes.insert(seq_hash(tokens));
    pair.train.examples.push_back({std::move(tokens), label_of(occ)});
  }
  pair.dev.examples.reserve(dev_size);
  for (std::size_t i = 0; i < dev_size; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng = root.fork("task-dev", i).fork(attempt);
      double occ = 0.0;
      auto tokens = walk(spec, tables, rng, &occ);
      if (train_hashes.count(seq_hash(tokens)) > 0) continue;  // keep splits disjoint
      pair.dev.examples.push_back({std::move(tokens), label_of(occ)});
      break;
    }
  }
  return pair;
}

std::int32_t majority_label(const TaskDataset& dataset) {
  require(!dataset.examples.empty(), "majority_label: empty dataset");
  std::vector<std::size_t> counts(dataset.num_classes, 0);
  for (const auto& ex : dataset.examples) counts[static_cast<std::size_t>(ex.label)]++;
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;
  return static_cast<std::int32_t>(best);
}

double majority_baseline(const TaskDataset& dataset, std::int32_t forced_majority_label) {
  require(!dataset.examples.empty(), "majority_baseline: empty dataset");
  const std::int32_t maj = forced_majority_label >= 0 ? forced_majority_label : majority_label(dataset);
  const double n = static_cast<double>(dataset.examples.size());
  std::size_t match = 0;
  for (const auto& ex : dataset.examples)
    if (ex.label == maj) ++match;
  switch (dataset.metric) {
    case Metric::Accuracy:
      return static_cast<double>(match) / n;
    case Metric::Mcc:
      return 0.0;  // constant classifier
    case Metric::F1: {
      require(dataset.num_classes == 2, "majority_baseline: F1 needs a binary task");
      if (maj != 1) return 0.0;  // constant negative predictions: no true positives
      std::size_t pos = 0;
      for (const auto& ex : dataset.examples)
        if (ex.label == 1) ++pos;
      const double p = static_cast<double>(pos) / n;  // precision; recall is 1
      return 2.0 * p / (p + 1.0);
    }
  }
  return 0.0;
}

TaskDataset downsample(const TaskDataset& dataset, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "downsample: n must be >= 1");
  require(n <= dataset.examples.size(), "downsample: n = " + std::to_string(n) + " exceeds dataset size " +
                                            std::to_string(dataset.examples.size()));
  Rng rng(seed, "sampling");
  auto order = rng.permutation(dataset.examples.size());
  std::vector<std::uint32_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(keep.begin(), keep.end());
  TaskDataset out = dataset;
  out.examples.clear();
  out.examples.reserve(n);
  for (std::uint32_t idx : keep) out.examples.push_back(dataset.examples[idx]);
  return out;
}

void export_csv(const TaskDataset& dataset, const std::filesystem::path& path) {
  CsvWriter csv({"tokens", "label"});
  for (const auto& ex : dataset.examples) {
    std::string toks;
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) toks += " ";
      toks += std::to_string(ex.tokens[i]);
    }
    csv.add_row({toks, std::to_string(ex.label)});
  }
  csv.save(path);
}

}  // namespace ftlab
