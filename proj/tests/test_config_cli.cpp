#include <doctest.h>

#include <filesystem>

#include "ftlab/commands.hpp"
#include "ftlab/config.hpp"
#include "ftlab/error.hpp"
#include "ftlab/io.hpp"

using namespace ftlab;

namespace {

const char* kSample = R"(
# desk-scale experiment
[model]
num_layers = 2
hidden_dim = 16
num_heads = 2
ffn_dim = 32
vocab_size = 32
max_seq_len = 8
num_classes = 2

[data]
num_states = 4
train_size = 48
dev_size = 24
corpus_size = 96
heldout_count = 32

[optim]
preset = bert-like
lr = 0.001
bias_correction = true

[run]
seed = 3
epochs = 1
batch_size = 8
eval_every = 4

[output]
dir = out
)";

ExperimentConfig tiny_config() {
  ExperimentConfig c = parse_config(kSample);
  return c;
}

}  // namespace

TEST_CASE("parse, dotted get/set, serialization round-trip") {
  ExperimentConfig c = tiny_config();
  CHECK(c.model.num_layers == 2);
  CHECK(c.optim.lr == 0.001);
  CHECK(c.optim.bias_correction);
  CHECK(c.get("run.seed") == "3");

  c.set("run.epochs", "20");
  CHECK(c.run.epochs == 20);

  const std::string echoed = c.serialize();
  const ExperimentConfig back = parse_config(echoed);
  for (const auto& path : ExperimentConfig::known_paths()) CHECK(back.get(path) == c.get(path));
}

TEST_CASE("unknown keys are rejected with the offending path") {
  ExperimentConfig c;
  CHECK_THROWS_WITH_AS(c.set("model.depth", "4"), doctest::Contains("model.depth"), Error);
  CHECK_THROWS_WITH_AS(parse_config("[model]\nwidth = 4\n"), doctest::Contains("model.width"), Error);
  CHECK_THROWS_WITH_AS(c.set("model.num_layers", "abc"), doctest::Contains("integer"), Error);
}

TEST_CASE("presets prime optimizer fields; explicit keys override") {
  ExperimentConfig c = parse_config("[optim]\npreset = roberta-like\n");
  CHECK(c.optim.beta2 == 0.98);
  CHECK(c.optim.weight_decay == 0.1);
  CHECK(c.optim.clip_norm == 0.0);
  ExperimentConfig c2 = parse_config("[optim]\npreset = roberta-like\nbeta2 = 0.995\n");
  CHECK(c2.optim.beta2 == 0.995);
  CHECK_THROWS_AS(parse_config("[optim]\npreset = adamw\n"), Error);
}

TEST_CASE("sweep seeds and axes parse") {
  ExperimentConfig c;
  c.set("sweep.seed_list", "7 8 9");
  const auto seeds = c.sweep_seeds();
  CHECK(seeds == std::vector<std::uint64_t>{7, 8, 9});
  c.sweep.seed_list.clear();
  c.set("sweep.seed_count", "4");
  CHECK(c.sweep_seeds().size() == 4);

  c.set("sweep.axes", "run.epochs=3|20; optim.bias_correction=false|true");
  const auto axes = c.sweep_axes();
  CHECK(axes.size() == 2);
  CHECK(axes[0].first == "run.epochs");
  CHECK(axes[0].second == std::vector<std::string>{"3", "20"});
  CHECK(axes[1].second == std::vector<std::string>{"false", "true"});
}

TEST_CASE("pretrain -> finetune -> forgetting pipeline over the command layer") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "ftlab_cmd_pipeline";
  fs::remove_all(root);

  ExperimentConfig pre = tiny_config();
  pre.out_dir = (root / "pre").string();
  pre.run.epochs = 2;
  command_pretrain(pre);
  CHECK(fs::exists(root / "pre" / "pretrained.ckpt"));
  CHECK(fs::exists(root / "pre" / "pretrain_manifest.txt"));
  CHECK(fs::exists(root / "pre" / "pretrain_run" / "train_trace.csv"));

  ExperimentConfig fin = tiny_config();
  fin.out_dir = (root / "fin").string();
  fin.run.init_checkpoint = (root / "pre" / "pretrained.ckpt").string();
  command_finetune(fin);
  CHECK(fs::exists(root / "fin" / "finetuned.ckpt"));

  ExperimentConfig probe = tiny_config();
  probe.out_dir = (root / "probe").string();
  probe.probe.checkpoint_finetuned = (root / "fin" / "finetuned.ckpt").string();
  probe.probe.checkpoint_pretrained = (root / "pre" / "pretrained.ckpt").string();
  probe.probe.eval_size = 32;
  command_forgetting(probe);
  CHECK(fs::exists(root / "probe" / "curve.csv"));
  const CsvTable curve = read_csv(root / "probe" / "curve.csv");
  CHECK(curve.rows.size() == probe.model.num_layers + 1);

  // determinism: repeating the finetune into a fresh directory is byte-identical
  ExperimentConfig fin2 = fin;
  fin2.out_dir = (root / "fin2").string();
  command_finetune(fin2);
  CHECK(read_text_file(root / "fin" / "finetuned.ckpt") == read_text_file(root / "fin2" / "finetuned.ckpt"));
  CHECK(read_text_file(root / "fin" / "finetune_run" / "train_trace.csv") ==
        read_text_file(root / "fin2" / "finetune_run" / "train_trace.csv"));
  CHECK(read_text_file(root / "fin" / "finetune_run" / "manifest.txt") ==
        read_text_file(root / "fin2" / "finetune_run" / "manifest.txt"));

  fs::remove_all(root);
}

TEST_CASE("finetune without an init checkpoint is rejected") {
  ExperimentConfig c = tiny_config();
  c.out_dir = (std::filesystem::temp_directory_path() / "ftlab_cmd_err").string();
  CHECK_THROWS_WITH_AS(command_finetune(c), doctest::Contains("checkpoint"), Error);
  c.run.init_checkpoint = "/nonexistent/path.ckpt";
  CHECK_THROWS_WITH_AS(command_finetune(c), doctest::Contains("not found"), Error);
}

TEST_CASE("report on an empty directory fails with 'no artifacts found'") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ftlab_empty_report";
  fs::create_directories(dir);
  CHECK_THROWS_WITH_AS(command_report(dir, dir), doctest::Contains("no artifacts found"), Error);
  fs::remove_all(dir);
}

TEST_CASE("downsampling with iteration matching raises the epoch count") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "ftlab_cmd_match";
  fs::remove_all(root);

  ExperimentConfig pre = tiny_config();
  pre.out_dir = (root / "pre").string();
  pre.run.epochs = 1;
  command_pretrain(pre);

  ExperimentConfig fin = tiny_config();
  fin.out_dir = (root / "fin").string();
  fin.run.init_checkpoint = (root / "pre" / "pretrained.ckpt").string();
  fin.data.downsample_n = 16;
  fin.data.match_iterations = true;
  fin.run.epochs = 2;  // full: ceil(48/8)*2 = 12 iters; subset: 2 per epoch -> 6 epochs
  command_finetune(fin);

  const Manifest m = Manifest::load(root / "fin" / "finetune_manifest.txt");
  CHECK(m.get("train_size") == "16");
  CHECK(m.get("epochs_effective") == "6");
  fs::remove_all(root);
}
