// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Builds the bundled synthetic benchmark fixtures once (pre-trained,
// failed, and successful checkpoints on the pinned instance) and runs every
// criterion at its stated tolerance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ftlab/commands.hpp"
#include "ftlab/forgetting.hpp"
#include "ftlab/gradcheck.hpp"
#include "ftlab/io.hpp"
#include "ftlab/landscape.hpp"
#include "ftlab/stats.hpp"
#include "ftlab/sweep.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string detail;
};

#define ACCEPT_CHECK(cond, detail)                 \
  do {                                             \
    if (!(cond)) throw Failure{std::string(detail)}; \
  } while (0)

std::string num(double v) { return fmt_double(v); }

// ---- pinned synthetic benchmark instance ----
// Tuned once so the stability contrast manifests, then frozen together with
// its seeds; configs/pinned_contrast.ini mirrors these values for the CLI.

ModelConfig pinned_model() {
  ModelConfig c;
  c.num_layers = 4;
  c.hidden_dim = 32;
  c.num_heads = 4;
  c.ffn_dim = 128;
  c.vocab_size = 64;
  c.max_seq_len = 16;
  c.dropout_p = 0.1;
  c.num_classes = 2;
  return c;
}

GrammarSpec pinned_grammar() {
  GrammarSpec g;
  g.num_states = 8;
  g.vocab_size = 64;
  g.seq_len = 16;
  g.self_loop = 0.6;
  g.emit_noise = 0.2;
  g.label_threshold = 0.5;
  g.table_seed = 17;
  return g;
}

constexpr std::uint64_t kCorpusSeed = 2;
constexpr std::size_t kCorpusSize = 4096;
constexpr std::size_t kHeldout = 256;
constexpr std::uint64_t kTaskSeed = 3;
constexpr std::size_t kTrainSize = 1024;
constexpr std::size_t kDevSize = 512;
constexpr std::uint64_t kInitSeed = 1;
constexpr std::uint64_t kPretrainSeed = 1;
constexpr std::uint64_t kFailedSeed = 203;   // aggressive lr cell, collapses
constexpr std::uint64_t kSuccessSeed = 301;  // long training with correction

struct Fixtures {
  ModelConfig model = pinned_model();
  GrammarSpec grammar = pinned_grammar();
  Corpus corpus;
  TaskPair task;
  Checkpoint pretrained;
  Checkpoint failed;
  Checkpoint success;
  RunRecord failed_record;
  double pretrain_initial_ppl = 0.0;
};

RunConfig pinned_base_run() {
  RunConfig rc;
  rc.epochs = 3;
  rc.batch_size = 16;
  rc.eval_every = 1000000;  // final eval only; keeps the sweep lean
  rc.adam = optimizer_preset("bert-like");
  return rc;
}

Fixtures build_fixtures() {
  Fixtures fx;
  fx.corpus = generate_corpus(fx.grammar, kCorpusSeed, kCorpusSize);
  fx.task = generate_classification_task(fx.grammar, kTaskSeed, kTrainSize, kDevSize);

  const Checkpoint init{fx.model, init_params(fx.model, kInitSeed), "init-seed1"};
  fx.pretrain_initial_ppl = heldout_perplexity(init.params, fx.model, fx.corpus, kHeldout, kPretrainSeed);

  RunConfig pre;
  pre.seed = kPretrainSeed;
  pre.epochs = 3;
  pre.batch_size = 32;
  pre.eval_every = 120;
  pre.adam.alpha = 1e-3;
  pre.adam.bias_correction = true;
  fx.pretrained = run_pretrain(pre, fx.corpus, kHeldout, init).final_checkpoint;

  RunConfig aggressive = pinned_base_run();
  aggressive.seed = kFailedSeed;
  aggressive.adam.alpha = 2e-3;
  aggressive.adam.bias_correction = false;
  auto failed_out = run_finetune(aggressive, fx.task.train, fx.task.dev, fx.pretrained);
  fx.failed = std::move(failed_out.final_checkpoint);
  fx.failed_record = std::move(failed_out.record);

  RunConfig good = pinned_base_run();
  good.seed = kSuccessSeed;
  good.epochs = 20;
  good.adam.alpha = 1e-4;
  good.adam.bias_correction = true;
  fx.success = run_finetune(good, fx.task.train, fx.task.dev, fx.pretrained).final_checkpoint;
  return fx;
}

// ---- criteria ----

void criterion_bias_correction_factor() {
  // direct evaluation of the step-size factor
  const double f1 = bias_correction_factor(1, 0.9, 0.999);
  const double f10 = bias_correction_factor(10, 0.9, 0.999);
  const double f100 = bias_correction_factor(100, 0.9, 0.999);
  ACCEPT_CHECK(std::fabs(f1 - 0.3162277660168381) < 1e-6, "f(1) = " + num(f1));
  ACCEPT_CHECK(std::fabs(f10 - 0.1531890739511824) < 1e-6, "f(10) = " + num(f10));
  ACCEPT_CHECK(std::fabs(f100 - 0.30856589376553495) < 1e-6, "f(100) = " + num(f100));
  // the printed constants in the criterion text carry ~1e-5 transcription
  // error relative to their own stated derivation; see the build notes
  ACCEPT_CHECK(std::fabs(f10 - 0.1531937) < 1e-4, "f(10) far from printed constant");
  ACCEPT_CHECK(std::fabs(f100 - 0.3085580) < 1e-4, "f(100) far from printed constant");
  for (std::int64_t t : {20000, 40000, 100000}) {
    const double f = bias_correction_factor(t, 0.9, 0.999);
    ACCEPT_CHECK(f > 0.999999 && f <= 1.0 + 1e-12, "f(" + std::to_string(t) + ") = " + num(f));
  }
}

struct ScalarOracle {
  double beta1 = 0.9, beta2 = 0.999, eps = 0.0, lr = 0.1;
  bool bias_correction = false;
  double m = 0.0, v = 0.0;
  long t = 0;
  double step(double theta, double g) {
    ++t;
    m = beta1 * m + (1 - beta1) * g;
    v = beta2 * v + (1 - beta2) * g * g;
    double a = lr;
    if (bias_correction) a *= std::sqrt(1 - std::pow(beta2, t)) / (1 - std::pow(beta1, t));
    return theta - a * m / (std::sqrt(v) + eps);
  }
};

void criterion_adam_oracle() {
  auto store = [](double v) {
    ParamStore<double> s;
    s.add("theta", Tensor<double>({1}, {v}));
    return s;
  };
  AdamConfig cfg;
  cfg.alpha = 0.1;
  cfg.epsilon = 1e-300;  // the hand trace uses eps = 0
  cfg.weight_decay = 0.0;
  cfg.clip_norm = 0.0;

  {
    cfg.bias_correction = true;
    auto p = store(1.0);
    auto g = store(1.0);
    AdamState st = AdamState::init(p);
    adam_update(p, g, st, cfg, 0.1);
    ACCEPT_CHECK(std::fabs(p.at("theta").data[0] - 0.9) < 1e-9, "theta1 with correction = " + num(p.at("theta").data[0]));
  }
  {
    cfg.bias_correction = false;
    auto p = store(1.0);
    auto g = store(1.0);
    AdamState st = AdamState::init(p);
    adam_update(p, g, st, cfg, 0.1);
    ACCEPT_CHECK(std::fabs(p.at("theta").data[0] - 0.683772233983162) < 1e-9,
                 "theta1 without correction = " + num(p.at("theta").data[0]));
  }
  for (bool bc : {false, true}) {
    cfg.bias_correction = bc;
    auto p = store(1.0);
    AdamState st = AdamState::init(p);
    ScalarOracle oracle;
    oracle.bias_correction = bc;
    double theta = 1.0;
    for (int i = 0; i < 10; ++i) {
      const double grad = std::cos(0.7 * i) + 0.2;
      auto g = store(grad);
      adam_update(p, g, st, cfg, 0.1);
      theta = oracle.step(theta, grad);
      ACCEPT_CHECK(std::fabs(p.at("theta").data[0] - theta) < 1e-12,
                   "10-step trace diverged from oracle at step " + std::to_string(i + 1));
    }
  }
}

void criterion_gradient_correctness() {
  ModelConfig c;  // the default desk-scale transformer
  c.dropout_p = 0.0;
  c.validate();
  const ParamStore<double> params = init_params(c, 11).cast<double>();
  Rng rng(13, "sampling");
  ClassifyBatch batch;
  batch.batch = 4;
  batch.seq = c.max_seq_len;
  for (std::size_t i = 0; i < batch.batch * batch.seq; ++i)
    batch.tokens.push_back(static_cast<std::int32_t>(1 + rng.next_below(c.vocab_size - 1)));
  for (std::size_t i = 0; i < batch.batch; ++i)
    batch.labels.push_back(static_cast<std::int32_t>(rng.next_below(2)));

  auto loss_fn = [&](const ParamStore<double>& p) {
    Tape<double> tape;
    auto graph = detail::register_params(tape, p, false);
    Rng r(0, "eval");
    return forward_classify(tape, p, graph, c, batch, Mode::Eval, r).loss_value;
  };
  auto grad_fn = [&](const ParamStore<double>& p) {
    Tape<double> tape;
    auto graph = detail::register_params(tape, p, false);
    Rng r(0, "eval");
    auto fw = forward_classify(tape, p, graph, c, batch, Mode::Eval, r);
    tape.backward(fw.loss);
    return collect_grads(tape, p, graph);
  };
  const auto res = finite_difference_check<double>(loss_fn, grad_fn, params, 200, 1e-5, Rng(17, "fdcheck"));
  ACCEPT_CHECK(!res.vacuous, "fd check was vacuous");
  ACCEPT_CHECK(res.samples >= 200, "fewer than 200 samples");
  ACCEPT_CHECK(res.max_rel_error < 1e-6, "max rel error = " + num(res.max_rel_error));
}

void criterion_schedule_anchors() {
  const ScheduleConfig sched{1000, 0.1, 2e-5};
  ACCEPT_CHECK(warmup_linear_lr(0, sched) == 0.0, "lr(0) != 0");
  ACCEPT_CHECK(warmup_linear_lr(100, sched) == 2e-5, "lr(W) != base");
  ACCEPT_CHECK(warmup_linear_lr(1000, sched) == 0.0, "lr(T) != 0");
  ACCEPT_CHECK(std::fabs(warmup_linear_lr(550, sched) - 1e-5) < 1e-12,
               "lr(550) = " + num(warmup_linear_lr(550, sched)));
}

void criterion_iteration_matching() {
  const auto scitail = iterations_matched_epochs(23596, 3, 16, 1000);
  ACCEPT_CHECK(scitail == 71, "SciTail 1k-sample epochs = " + std::to_string(scitail));
  const auto identity = iterations_matched_epochs(2491, 3, 16, 2491);
  ACCEPT_CHECK(identity == 3, "identity case = " + std::to_string(identity));
  const auto qnli = iterations_matched_epochs(104744, 3, 16, 1000);
  ACCEPT_CHECK(qnli == 312, "QNLI 1k-sample epochs = " + std::to_string(qnli));
}

void criterion_failed_run_rule() {
  ACCEPT_CHECK(classify_failed_run(0.53, 0.53), "0.53 vs baseline 0.53 must fail (inclusive)");
  ACCEPT_CHECK(!classify_failed_run(0.531, 0.53), "0.531 vs 0.53 must not fail");
  ACCEPT_CHECK(classify_failed_run(-0.1, 0.0), "MCC -0.1 vs 0.0 must fail");
  ACCEPT_CHECK(classify_failed_run(0.0, 0.0), "MCC 0.0 vs 0.0 must fail (inclusive)");
}

void criterion_levene_suite() {
  // identical deviation profiles
  const auto base = levene_test({{1, 2, 3}, {4, 5, 6}});
  ACCEPT_CHECK(base.W == 0.0 && base.p == 1.0, "identical-deviation groups: W=" + num(base.W) + " p=" + num(base.p));

  struct Fx {
    double W, p;
    std::vector<std::vector<double>> groups;
  };
  // scipy.stats.levene(center='mean'), recorded before the implementation
  const std::vector<Fx> battery = {
      {0.0, 1.0, {{1, 2, 3}, {4, 5, 6}}},
      {2.0571428571428565, 0.18940366109332119, {{1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}}},
      {4.380393227744402, 0.04693657825174967, {{0.1, 0.2, 0.15, 0.12}, {0.5, 0.9, 0.2, 0.6}, {0.3, 0.31, 0.29, 0.3}}},
      {4.789621318373072, 0.042890321920311926, {{1.2, 1.9, 2.1}, {0.5, 3.5, 1.0, 2.0, 4.0, 0.1}, {2.2, 2.4}}},
      {27.46450474489468, 0.0001249563405062613,
       {{0.7, 0.71, 0.69, 0.7, 0.72, 0.71, 0.7, 0.69}, {0.3, 0.95, 0.1, 0.8, 0.55, 0.2, 0.9, 0.4}}},
      {5.345137376567529, 0.025115884207406063,
       {{0.718644, 0.66042,  0.673886, 0.684003, 0.651699, 0.673056, 0.672976, 0.625622, 0.700477,
         0.689213, 0.656113, 0.668368, 0.686643, 0.665943, 0.666446, 0.633762, 0.687974, 0.676345,
         0.68041,  0.631784, 0.717569, 0.677167, 0.662547, 0.727785, 0.671775},
        {0.50905,  0.495971, 0.458777, 0.50842,  0.491974, 0.487349, 0.44072,  0.486911, 0.498169,
         0.479842, 0.537615, 0.587305, 0.522351, 0.540838, 0.591027, 0.528385, 0.578423, 0.468468,
         0.502829, 0.567391, 0.539387, 0.510438, 0.550317, 0.526123, 0.532237}}},
      {48.07977965772562, 9.283725842216456e-09,
       {{0.65249,  0.615851, 0.612278, 0.57324,  0.620851, 0.615247, 0.611341, 0.626677, 0.628579,
         0.601819, 0.605048, 0.612437, 0.633414, 0.631101, 0.5975,   0.600849, 0.634263, 0.649343,
         0.620441, 0.608698, 0.640721, 0.615428, 0.634064, 0.648883, 0.632341},
        {0.273628, 0.648964, 0.444607, 0.571664, 0.800346, 0.592278, 0.801648, 0.67647,  0.834544,
         0.188383, 0.254019, 0.133029, 0.600089, 0.393708, 0.689918, 0.537242, 0.48859,  1.006498,
         0.61121,  0.449146, 0.204055, 0.760821, 0.699925, 0.177682, 0.418826}}},
      {1.4545454545454533, 0.2622547504021784, {{0.6, 0.7, 0.65, 0.68, 0.62}, {0.58, 0.72, 0.66, 0.7, 0.6}}},
      {6.161676646706587, 0.020617762429357128,
       {{-1.5, -0.5, 0.5, 1.5}, {-3.0, -1.0, 1.0, 3.0}, {-0.2, -0.1, 0.1, 0.2}}},
      {0.0, 1.0, {{10.1, 10.2, 10.3, 10.4}, {110.1, 110.2, 110.3, 110.4}}},
      {12.0, 0.013399964712331038, {{2.0, 2.0, 2.0, 2.0}, {1.0, 2.0, 3.0, 4.0}}},
      {10.318091451292254, 0.00032094979438492536,
       {{0.81, 0.83, 0.82, 0.8},
        {0.7, 0.9, 0.6, 1.0},
        {0.85, 0.84, 0.86, 0.83},
        {0.5, 0.7, 0.9, 1.1},
        {0.82, 0.82, 0.83, 0.81}}},
  };
  ACCEPT_CHECK(battery.size() >= 10, "battery too small");
  for (std::size_t i = 0; i < battery.size(); ++i) {
    const auto r = levene_test(battery[i].groups);
    ACCEPT_CHECK(std::fabs(r.W - battery[i].W) <= 1e-6 * (1.0 + std::fabs(battery[i].W)),
                 "fixture " + std::to_string(i) + ": W = " + num(r.W) + " expected " + num(battery[i].W));
    ACCEPT_CHECK(std::fabs(r.p - battery[i].p) <= 1e-6 * (1.0 + std::fabs(battery[i].p)),
                 "fixture " + std::to_string(i) + ": p = " + num(r.p) + " expected " + num(battery[i].p));
  }
  // significance flag thresholds at p < 0.001, boundary exclusive
  const auto sig = compare_stability(battery[6].groups[0], battery[6].groups[1]);
  ACCEPT_CHECK(sig.significant, "p = " + num(sig.p) + " should flag");
  const auto mid = compare_stability(battery[5].groups[0], battery[5].groups[1]);
  ACCEPT_CHECK(!mid.significant, "p = " + num(mid.p) + " should not flag");
}

void criterion_surface_identities(const Fixtures& fx, std::size_t workers) {
  const SurfaceSpec spec;  // the documented defaults
  ACCEPT_CHECK(spec.resolution == 40 && spec.a_min == -1.5 && spec.a_max == 1.5 && spec.b_min == -1.5 &&
                   spec.b_max == 1.5 && spec.batch_size == 128,
               "default spec is not 40x40 over [-1.5,1.5]^2 with batch 128");

  const ClassifyBatch batch = surface_eval_batch(fx.task.train, spec.batch_size);
  const SurfaceGrid grid = loss_surface(fx.pretrained, fx.failed, fx.success, spec, batch, workers);
  ACCEPT_CHECK(grid.a_values.size() == 40 && grid.b_values.size() == 40 && grid.values.size() == 1600,
               "grid shape is not 40x40");

  const double loss_pre = classify_loss(fx.pretrained.params, fx.model, batch);
  const double loss_failed = classify_loss(fx.failed.params, fx.model, batch);
  const double loss_success = classify_loss(fx.success.params, fx.model, batch);
  ACCEPT_CHECK(grid.corner_pretrained == loss_pre, "f(0,0) not bitwise equal");
  ACCEPT_CHECK(grid.corner_failed == loss_failed, "f(1,0) not bitwise equal");
  ACCEPT_CHECK(grid.corner_success == loss_success, "f(0,1) not bitwise equal");

  // gradient-norm surface: corner (0,1) against an independent computation
  SurfaceSpec gspec;
  gspec.resolution = 5;  // corners are exact regardless of grid alignment
  gspec.quantity = SurfaceQuantity::GradNorm;
  const SurfaceGrid ggrid = gradient_norm_surface(fx.pretrained, fx.failed, fx.success, gspec, batch, workers);

  Tape<float> tape;
  auto graph = detail::register_params(tape, fx.success.params, false);
  Rng rng(0, "eval");
  auto fw = forward_classify(tape, fx.success.params, graph, fx.model, batch, Mode::Eval, rng);
  tape.backward(fw.loss);
  const auto grads = collect_grads(tape, fx.success.params, graph);
  const auto norms = layer_gradient_norms(grads, NormGranularity::PerLayer);
  double acc = 0.0;
  for (const auto& [g, v] : norms) acc += v * v;
  const double independent = std::sqrt(acc);
  ACCEPT_CHECK(std::fabs(ggrid.corner_success - independent) <= 1e-6 * std::fabs(independent),
               "grad-norm (0,1) = " + num(ggrid.corner_success) + " vs independent " + num(independent));
}

void criterion_substitution_identities(const Fixtures& fx, std::size_t workers) {
  std::vector<std::vector<std::int32_t>> eval_seqs(fx.corpus.sequences.end() - 128, fx.corpus.sequences.end());
  const auto curve = substitution_curve(fx.failed, fx.pretrained, eval_seqs, 77, workers);
  ACCEPT_CHECK(curve.k_values.size() == fx.model.num_layers + 1, "curve length");

  // k = 0: the probe leaves the fine-tuned model untouched
  const auto k0_direct = substitution_curve(fx.failed, fx.failed, eval_seqs, 77, 1);
  ACCEPT_CHECK(curve.perplexity.front() == k0_direct.perplexity.front(), "k=0 endpoint not exact");
  // k = L: full restoration reproduces the pre-trained model bitwise
  const auto kl_direct = substitution_curve(fx.pretrained, fx.pretrained, eval_seqs, 77, 1);
  ACCEPT_CHECK(curve.perplexity.back() == kl_direct.perplexity.front(), "k=L endpoint not exact");

  // the mask pattern is a function of the mask seed alone, constant across k;
  // one mask_tokens call per sequence index must reproduce it
  const Rng mask_root(77, "masking");
  const auto once = mask_tokens(eval_seqs[5], mask_root.fork(5), 0.15, {}, fx.model.vocab_size);
  const auto again = mask_tokens(eval_seqs[5], mask_root.fork(5), 0.15, {}, fx.model.vocab_size);
  ACCEPT_CHECK(once.positions == again.positions && once.tokens == again.tokens, "mask pattern not reproducible");

  // catastrophic-forgetting direction on the pinned failed checkpoint
  ACCEPT_CHECK(curve.perplexity.front() > curve.perplexity.back(),
               "failed checkpoint k=0 ppl " + num(curve.perplexity.front()) + " does not exceed k=L ppl " +
                   num(curve.perplexity.back()));
}

void criterion_determinism(const Fixtures& fx) {
  const fs::path root = fs::temp_directory_path() / "ftlab_acceptance_det";
  fs::remove_all(root);

  // command repetition: byte-identical checkpoint, manifest, and CSV outputs
  ExperimentConfig cfg;
  cfg.model = fx.model;
  cfg.data.num_states = fx.grammar.num_states;
  cfg.data.train_size = 128;
  cfg.data.dev_size = 64;
  cfg.data.corpus_size = 256;
  cfg.data.heldout_count = 64;
  cfg.optim.lr = 1e-4;
  cfg.run.epochs = 1;
  cfg.run.seed = 9;

  ExperimentConfig pre = cfg;
  pre.out_dir = (root / "pre").string();
  command_pretrain(pre);

  for (const char* dir : {"a", "b"}) {
    ExperimentConfig fin = cfg;
    fin.run.init_checkpoint = (root / "pre" / "pretrained.ckpt").string();
    fin.out_dir = (root / dir).string();
    command_finetune(fin);
  }
  for (const char* f : {"finetuned.ckpt", "finetune_manifest.txt", "finetune_run/train_trace.csv",
                        "finetune_run/grad_norms.csv", "finetune_run/evals.csv", "finetune_run/manifest.txt"}) {
    ACCEPT_CHECK(read_text_file(root / "a" / f) == read_text_file(root / "b" / f),
                 std::string("finetune outputs differ: ") + f);
  }

  // sweep results invariant under worker count 1 vs 4
  const TaskPair task = generate_classification_task(fx.grammar, 19, 96, 48);
  RunConfig base = pinned_base_run();
  base.epochs = 1;
  base.adam.alpha = 1e-4;
  const SweepPlan plan = axes_plan("det", {{"optim.bias_correction", {"false", "true"}}}, {5, 6, 7});
  const SweepResult r1 = run_sweep(plan, base, task.train, task.dev, fx.pretrained, 1);
  const SweepResult r4 = run_sweep(plan, base, task.train, task.dev, fx.pretrained, 4);
  emit_report(r1, root / "w1");
  emit_report(r4, root / "w4");
  for (const char* f : {"summary.csv", "boxplot.csv", "scatter.csv", "boxplot.svg", "sweep_manifest.txt"})
    ACCEPT_CHECK(read_text_file(root / "w1" / f) == read_text_file(root / "w4" / f),
                 std::string("sweep outputs differ across worker counts: ") + f);

  fs::remove_all(root);
}

void criterion_instability_contrast(const Fixtures& fx, std::size_t workers, std::string& note) {
  std::vector<std::uint64_t> seeds(25);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 101 + i;
  const SweepPlan plan = contrast_plan(seeds);
  const SweepResult res = run_sweep(plan, pinned_base_run(), fx.task.train, fx.task.dev, fx.pretrained, workers);

  const CellResult* devlin = nullptr;
  const CellResult* baseline = nullptr;
  for (const auto& cell : res.cells) {
    if (cell.cell.id == "devlin-default") devlin = &cell;
    if (cell.cell.id == "paper-baseline") baseline = &cell;
  }
  ACCEPT_CHECK(devlin && baseline, "plan cells missing");

  const double devlin_std = sample_std(devlin->metrics());
  const double baseline_std = sample_std(baseline->metrics());
  const std::size_t devlin_failed = devlin->failed_count();
  const std::size_t baseline_failed = baseline->failed_count();
  note = "baseline std " + num(baseline_std) + " vs devlin " + num(devlin_std) + "; failed " +
         std::to_string(baseline_failed) + " vs " + std::to_string(devlin_failed);

  ACCEPT_CHECK(baseline_std < devlin_std, "baseline std not strictly lower (" + note + ")");
  ACCEPT_CHECK(baseline_failed < devlin_failed, "baseline failures not strictly fewer (" + note + ")");
  ACCEPT_CHECK(devlin_failed > 0, "unstable cell produced no failed runs");

  // every failed run in the unstable cell shows the trivial-loss signature
  for (std::size_t s = 0; s < devlin->runs.size(); ++s) {
    const auto& run = devlin->runs[s];
    if (!run.failed) continue;
    const auto sig = failure_signature(run, fx.model.num_classes);
    ACCEPT_CHECK(sig.trivial_loss, "failed seed " + std::to_string(seeds[s]) + " final-epoch mean loss " +
                                       num(sig.final_epoch_mean_loss) + " outside ln2 +- 0.05");
    ACCEPT_CHECK(sig.optimization_failure, "failed seed missing the full signature");
  }
}

void criterion_metric_fixtures() {
  const ConfusionCounts c{3, 1, 4, 2};
  ACCEPT_CHECK(std::fabs(mcc(c) - 0.408248290463863) < 1e-6, "MCC = " + num(mcc(c)));
  ACCEPT_CHECK(std::fabs(f1_score(c) - 2.0 / 3.0) < 1e-6, "F1 = " + num(f1_score(c)));
  const ConfusionCounts constant{50, 50, 0, 0};
  ACCEPT_CHECK(mcc(constant) == 0.0, "degenerate MCC convention");
  const ConfusionCounts no_pos{0, 0, 7, 0};
  ACCEPT_CHECK(f1_score(no_pos) == 0.0, "degenerate F1 convention");
}

}  // namespace

int main() {
  setvbuf(stdout, nullptr, _IONBF, 0);
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  std::printf("building pinned benchmark fixtures (pretrain + failed/success runs)...\n");
  Fixtures fx = build_fixtures();
  {
    // fixture sanity: the pinned runs must carry their intended roles
    const double pre_ppl = heldout_perplexity(fx.pretrained.params, fx.model, fx.corpus, kHeldout, kPretrainSeed);
    std::printf("fixtures ready in %.0fs: init ppl %.2f -> pretrained ppl %.2f; failed run dev %s; vocab %zu\n",
                elapsed(), fx.pretrain_initial_ppl, pre_ppl, fx.failed_record.failed ? "failed" : "SUCCEEDED",
                fx.model.vocab_size);
  }

  const std::size_t workers = 2;
  std::string contrast_note;

  struct Criterion {
    const char* name;
    std::function<void()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1. bias-correction factor (Eq. 1 values and limit)", [] { criterion_bias_correction_factor(); }},
      {"2. adam scalar oracle (hand trace + 10-step 64-bit)", [] { criterion_adam_oracle(); }},
      {"3. gradient correctness (finite differences, 200 coords)", [] { criterion_gradient_correctness(); }},
      {"4. warmup-linear schedule anchors", [] { criterion_schedule_anchors(); }},
      {"5. iteration-matched epochs (SciTail 71)", [] { criterion_iteration_matching(); }},
      {"6. failed-run rule (boundary inclusive)", [] { criterion_failed_run_rule(); }},
      {"7. levene suite vs reference oracle", [] { criterion_levene_suite(); }},
      {"8. surface identities (corners bitwise, 40x40 default)", [&] { criterion_surface_identities(fx, workers); }},
      {"9. substitution identities (k endpoints, fixed mask)", [&] { criterion_substitution_identities(fx, workers); }},
      {"10. determinism (byte-identical outputs, worker invariance)", [&] { criterion_determinism(fx); }},
      {"11. instability contrast (25 seeds, pinned instance)",
       [&] { criterion_instability_contrast(fx, workers, contrast_note); }},
      {"12. metric fixtures (MCC/F1 + degenerate conventions)", [] { criterion_metric_fixtures(); }},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    try {
      criterion.run();
      std::printf("PASS  %s", criterion.name);
    } catch (const Failure& f) {
      ++failures;
      std::printf("FAIL  %s: %s", criterion.name, f.detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL  %s: unexpected error: %s", criterion.name, e.what());
    }
    std::printf("   [t=%.0fs]\n", elapsed());
  }
  if (!contrast_note.empty()) std::printf("contrast detail: %s\n", contrast_note.c_str());
  std::printf("%d/%zu criteria passed in %.0fs\n", static_cast<int>(criteria.size()) - failures, criteria.size(),
              elapsed());
  return failures == 0 ? 0 : 1;
}
