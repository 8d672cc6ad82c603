#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "ftlab/data.hpp"
#include "ftlab/error.hpp"

using namespace ftlab;

namespace {

GrammarSpec small_spec() {
  GrammarSpec spec;
  spec.num_states = 4;
  spec.vocab_size = 64;
  spec.seq_len = 16;
  return spec;
}

}  // namespace

TEST_CASE("corpus generation is deterministic and sized") {
  const GrammarSpec spec = small_spec();
  const Corpus a = generate_corpus(spec, 42, 50);
  const Corpus b = generate_corpus(spec, 42, 50);
  CHECK(a.sequences == b.sequences);
  CHECK(a.sequences.size() == 50);
  for (const auto& seq : a.sequences) {
    CHECK(seq.size() == spec.seq_len);
    for (auto t : seq) {
      CHECK(t >= 1);  // the mask token never occurs naturally
      CHECK(t < static_cast<std::int32_t>(spec.vocab_size));
    }
  }
  const Corpus c = generate_corpus(spec, 43, 50);
  CHECK(a.sequences != c.sequences);
  const Corpus single = generate_corpus(spec, 1, 1);
  CHECK(single.sequences.size() == 1);
}

TEST_CASE("unigram entropy sits strictly below ln(vocab)") {
  const GrammarSpec spec = small_spec();
  const Corpus corpus = generate_corpus(spec, 7, 400);
  std::map<std::int32_t, double> counts;
  double total = 0.0;
  for (const auto& seq : corpus.sequences)
    for (auto t : seq) {
      counts[t] += 1.0;
      total += 1.0;
    }
  double entropy = 0.0;
  for (const auto& [tok, n] : counts) {
    const double p = n / total;
    entropy -= p * std::log(p);
  }
  CHECK(entropy < std::log(static_cast<double>(spec.vocab_size)) - 0.1);
  CHECK(entropy > 1.0);  // not degenerate either
}

TEST_CASE("masking selects ~15% of positions in expectation") {
  const GrammarSpec spec = small_spec();
  const Corpus corpus = generate_corpus(spec, 9, 200);
  const Rng root(77, "masking");
  std::size_t selected = 0, total = 0;
  std::size_t masked = 0, kept = 0, random_repl = 0;
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    const auto& seq = corpus.sequences[i];
    const auto m = mask_tokens(seq, root.fork(i), 0.15, {}, spec.vocab_size);
    selected += m.positions.size();
    total += seq.size();
    CHECK(!m.positions.empty());
    for (std::size_t j = 0; j < m.positions.size(); ++j) {
      const auto pos = static_cast<std::size_t>(m.positions[j]);
      CHECK(m.targets[j] == seq[pos]);
      if (m.tokens[pos] == kMaskToken) ++masked;
      else if (m.tokens[pos] == seq[pos]) ++kept;
      else ++random_repl;
    }
  }
  const double rate = static_cast<double>(selected) / static_cast<double>(total);
  CHECK(rate > 0.12);
  CHECK(rate < 0.18);
  // policy split: 80 / 10 / 10 among selected positions
  const double frac_masked = static_cast<double>(masked) / static_cast<double>(selected);
  CHECK(frac_masked > 0.72);
  CHECK(frac_masked < 0.88);
  CHECK(random_repl > 0);
  CHECK(kept > 0);
}

TEST_CASE("mask rate 1 is the all-select hook") {
  const std::vector<std::int32_t> seq = {5, 6, 7, 8};
  const auto m = mask_tokens(seq, Rng(1, "masking"), 1.0, {}, 64);
  CHECK(m.positions.size() == seq.size());
}

TEST_CASE("masking is deterministic for a fixed stream") {
  const std::vector<std::int32_t> seq = {5, 6, 7, 8, 9, 10, 11, 12};
  const auto a = mask_tokens(seq, Rng(3, "masking"), 0.15, {}, 64);
  const auto b = mask_tokens(seq, Rng(3, "masking"), 0.15, {}, 64);
  CHECK(a.positions == b.positions);
  CHECK(a.tokens == b.tokens);
  CHECK(a.targets == b.targets);
}

TEST_CASE("mask_tokens rejects bad rates") {
  const std::vector<std::int32_t> seq = {1, 2, 3};
  CHECK_THROWS_AS(mask_tokens(seq, Rng(1, "masking"), 0.0, {}, 64), Error);
  CHECK_THROWS_AS(mask_tokens(seq, Rng(1, "masking"), 1.5, {}, 64), Error);
}

TEST_CASE("classification task: determinism, disjoint splits, label sanity") {
  const GrammarSpec spec = small_spec();
  const TaskPair a = generate_classification_task(spec, 11, 300, 100);
  const TaskPair b = generate_classification_task(spec, 11, 300, 100);
  CHECK(a.train.examples.size() == 300);
  CHECK(a.dev.examples.size() == 100);
  for (std::size_t i = 0; i < a.train.examples.size(); ++i) {
    CHECK(a.train.examples[i].tokens == b.train.examples[i].tokens);
    CHECK(a.train.examples[i].label == b.train.examples[i].label);
  }

  std::set<std::vector<std::int32_t>> train_seqs;
  for (const auto& ex : a.train.examples) train_seqs.insert(ex.tokens);
  for (const auto& ex : a.dev.examples) CHECK(train_seqs.count(ex.tokens) == 0);

  std::set<std::int32_t> labels;
  for (const auto& ex : a.train.examples) labels.insert(ex.label);
  CHECK(labels.size() == 2);
}

TEST_CASE("default grammar hits the 53/47-style imbalance within tolerance") {
  GrammarSpec spec;  // default desk-scale grammar
  const TaskPair task = generate_classification_task(spec, 1, 2491, 512);
  std::size_t zeros = 0;
  for (const auto& ex : task.train.examples)
    if (ex.label == 0) ++zeros;
  const double majority = std::max(zeros, task.train.examples.size() - zeros) /
                          static_cast<double>(task.train.examples.size());
  CHECK(majority > 0.50);
  CHECK(majority < 0.56);
}

TEST_CASE("majority baseline per metric") {
  TaskDataset d;
  d.num_classes = 2;
  d.metric = Metric::Accuracy;
  d.split = "dev";
  d.examples = {{{1}, 1}, {{2}, 1}, {{3}, 0}};
  CHECK(majority_baseline(d) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  d.metric = Metric::Mcc;
  CHECK(majority_baseline(d) == 0.0);

  // balanced binary labels, majority forced to the positive class
  TaskDataset balanced;
  balanced.num_classes = 2;
  balanced.metric = Metric::F1;
  balanced.examples = {{{1}, 1}, {{2}, 0}, {{3}, 1}, {{4}, 0}};
  CHECK(majority_baseline(balanced, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // all-negative constant prediction has no true positives
  CHECK(majority_baseline(balanced, 0) == 0.0);

  TaskDataset empty;
  CHECK_THROWS_AS(majority_baseline(empty), Error);
}

TEST_CASE("downsample: exact size, determinism, identity preservation") {
  const GrammarSpec spec = small_spec();
  const TaskPair task = generate_classification_task(spec, 5, 120, 30);

  const TaskDataset d1 = downsample(task.train, 40, 99);
  CHECK(d1.examples.size() == 40);
  const TaskDataset d2 = downsample(task.train, 40, 99);
  for (std::size_t i = 0; i < d1.examples.size(); ++i) CHECK(d1.examples[i].tokens == d2.examples[i].tokens);

  // different seeds pick different subsets
  const TaskDataset d3 = downsample(task.train, 40, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < d1.examples.size(); ++i)
    if (d1.examples[i].tokens != d3.examples[i].tokens) any_diff = true;
  CHECK(any_diff);

  // every sampled example exists in the source, no duplication
  std::multiset<std::vector<std::int32_t>> source;
  for (const auto& ex : task.train.examples) source.insert(ex.tokens);
  std::multiset<std::vector<std::int32_t>> sampled;
  for (const auto& ex : d1.examples) sampled.insert(ex.tokens);
  for (const auto& seq : sampled) CHECK(source.count(seq) >= sampled.count(seq));

  // n = full size keeps every example (original order here)
  const TaskDataset full = downsample(task.train, task.train.examples.size(), 7);
  CHECK(full.examples.size() == task.train.examples.size());
  for (std::size_t i = 0; i < full.examples.size(); ++i)
    CHECK(full.examples[i].tokens == task.train.examples[i].tokens);

  CHECK_THROWS_AS(downsample(task.train, 121, 1), Error);
}

TEST_CASE("csv export writes one row per example") {
  const GrammarSpec spec = small_spec();
  const TaskPair task = generate_classification_task(spec, 2, 10, 2);
  const auto path = std::filesystem::temp_directory_path() / "ftlab_test_task.csv";
  export_csv(task.train, path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 11);  // header + 10 examples
  std::filesystem::remove(path);
}
