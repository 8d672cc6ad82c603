#include "ftlab/commands.hpp"

#include <iostream>

#include "ftlab/forgetting.hpp"
#include "ftlab/io.hpp"
#include "ftlab/landscape.hpp"
#include "ftlab/sweep.hpp"
#include "ftlab/svg.hpp"
#include "ftlab/version.hpp"

namespace ftlab {

namespace {

namespace fs = std::filesystem;

Checkpoint load_required_checkpoint(const std::string& path, const char* what) {
  require(!path.empty(), std::string("missing required checkpoint path for ") + what);
  require(fs::exists(path), std::string(what) + " checkpoint not found: " + path);
  return load_checkpoint(path);
}

void base_manifest(Manifest& m, const ExperimentConfig& config) {
  m.set("tool_version", std::string(kVersion));
  // hash the experiment-defining fields; the output location is not part of
  // the experiment's identity
  std::string experiment;
  for (const auto& path : ExperimentConfig::known_paths()) {
    if (path == "output.dir") continue;
    experiment += path + "=" + config.get(path) + "\n";
  }
  m.set("config_hash", hex64(fnv1a_bytes(experiment.data(), experiment.size())));
}

TaskPair task_from(const ExperimentConfig& config) {
  TaskPair pair = generate_classification_task(config.grammar_spec(), config.data.task_seed, config.data.train_size,
                                               config.data.dev_size, config.model.num_classes,
                                               metric_from_name(config.data.metric));
  return pair;
}

}  // namespace

RunConfig run_config_from(const ExperimentConfig& config) {
  RunConfig rc;
  rc.seed = config.run.seed;
  rc.epochs = config.run.epochs;
  rc.total_iterations = config.run.total_iterations;
  rc.batch_size = config.run.batch_size;
  rc.eval_every = config.run.eval_every;
  rc.adam = config.adam_config();
  rc.warmup_ratio = config.warmup_ratio;
  return rc;
}

void command_pretrain(const ExperimentConfig& config) {
  config.model.validate();
  const fs::path out = config.out_dir;
  const Corpus corpus = generate_corpus(config.grammar_spec(), config.data.corpus_seed, config.data.corpus_size);

  Checkpoint init;
  if (!config.run.init_checkpoint.empty()) {
    init = load_required_checkpoint(config.run.init_checkpoint, "init");
  } else {
    init = Checkpoint{config.model, init_params(config.model, config.run.seed), "init-seed" + std::to_string(config.run.seed)};
  }

  const RunConfig rc = run_config_from(config);
  RunOutput result = run_pretrain(rc, corpus, config.data.heldout_count, init);
  result.final_checkpoint.provenance =
      config.run.provenance.empty() ? "pretrained-seed" + std::to_string(config.run.seed) : config.run.provenance;

  save_checkpoint(out / "pretrained.ckpt", result.final_checkpoint);
  save_run_record(result.record, out / "pretrain_run");

  Manifest m;
  base_manifest(m, config);
  m.set("command", std::string("pretrain"));
  m.set("corpus_size", static_cast<std::int64_t>(corpus.sequences.size()));
  m.set("heldout_count", static_cast<std::int64_t>(config.data.heldout_count));
  m.set("checkpoint", hash_file(out / "pretrained.ckpt"));
  m.set("final_heldout_perplexity", result.record.final_dev_metric);
  m.save(out / "pretrain_manifest.txt");

  std::cout << "pretrain: " << result.record.total_iterations << " iterations, heldout perplexity "
            << result.record.final_dev_metric << " (" << result.record.wall_seconds << " s)\n";
}

void command_finetune(const ExperimentConfig& config) {
  config.model.validate();
  const fs::path out = config.out_dir;
  const Checkpoint init = load_required_checkpoint(config.run.init_checkpoint, "init");
  require(init.config == config.model, "finetune: init checkpoint config differs from [model] config");

  TaskPair task = task_from(config);
  RunConfig rc = run_config_from(config);
  if (config.data.downsample_n > 0) {
    const std::size_t full = task.train.examples.size();
    task.train = downsample(task.train, config.data.downsample_n, config.data.downsample_seed);
    if (config.data.match_iterations) {
      require(rc.epochs >= 1, "finetune: iteration matching needs an epoch-based run config");
      rc.epochs = iterations_matched_epochs(static_cast<std::int64_t>(full), rc.epochs, rc.batch_size,
                                            static_cast<std::int64_t>(task.train.examples.size()));
    }
  }

  RunOutput result = run_finetune(rc, task.train, task.dev, init);
  if (!config.run.provenance.empty()) result.final_checkpoint.provenance = config.run.provenance;

  save_checkpoint(out / "finetuned.ckpt", result.final_checkpoint);
  save_run_record(result.record, out / "finetune_run");

  Manifest m;
  base_manifest(m, config);
  m.set("command", std::string("finetune"));
  m.set("init_checkpoint", hash_file(config.run.init_checkpoint));
  m.set("train_size", static_cast<std::int64_t>(task.train.examples.size()));
  m.set("epochs_effective", static_cast<std::int64_t>(rc.epochs));
  m.set("checkpoint", hash_file(out / "finetuned.ckpt"));
  m.set("final_dev_metric", result.record.final_dev_metric);
  m.set("baseline", result.record.baseline);
  m.set("failed", result.record.failed);
  m.save(out / "finetune_manifest.txt");

  std::cout << "finetune: " << result.record.total_iterations << " iterations, dev " << result.record.final_dev_metric
            << " vs baseline " << result.record.baseline << (result.record.failed ? " [failed]" : "") << " ("
            << result.record.wall_seconds << " s)\n";
}

void command_sweep(const ExperimentConfig& config) {
  config.model.validate();
  const fs::path out = config.out_dir;
  const Checkpoint init = load_required_checkpoint(config.run.init_checkpoint, "init");
  require(init.config == config.model, "sweep: init checkpoint config differs from [model] config");

  SweepPlan plan;
  const auto seeds = config.sweep_seeds();
  if (config.sweep.plan == "contrast") {
    plan = contrast_plan(seeds);
  } else if (config.sweep.plan == "axes" || config.sweep.plan == "ablation") {
    auto axes = config.sweep_axes();
    if (axes.empty() && config.sweep.plan == "ablation")
      axes = {{"run.epochs", {"3", "20"}}, {"optim.bias_correction", {"false", "true"}}};
    require(!axes.empty(), "sweep: plan 'axes' needs sweep.axes");
    plan = axes_plan(config.sweep.plan, axes, seeds);
  } else {
    fail("sweep: unknown plan '" + config.sweep.plan + "' (expected contrast, ablation, or axes)");
  }

  const TaskPair task = task_from(config);
  const SweepResult result = run_sweep(plan, run_config_from(config), task.train, task.dev, init,
                                       std::max<std::size_t>(config.sweep.workers, 1));
  emit_report(result, out);

  Manifest m;
  base_manifest(m, config);
  m.set("command", std::string("sweep"));
  m.set("plan", plan.name);
  m.set("init_checkpoint", hash_file(config.run.init_checkpoint));
  m.set("report", hash_file(out / "summary.csv"));
  m.save(out / "sweep_command_manifest.txt");

  for (const auto& cell : result.cells) {
    const auto st = summary_stats(cell.metrics());
    std::cout << "sweep cell " << cell.cell.id << ": mean " << st.mean << ", std " << st.stddev << ", failed "
              << cell.failed_count() << "/" << cell.runs.size() << "\n";
  }
}

void command_surface(const ExperimentConfig& config) {
  config.model.validate();
  const fs::path out = config.out_dir;
  const Checkpoint pre = load_required_checkpoint(config.surface.checkpoint_pretrained, "pretrained");
  const Checkpoint failed = load_required_checkpoint(config.surface.checkpoint_failed, "failed");
  const Checkpoint success = load_required_checkpoint(config.surface.checkpoint_success, "success");

  SurfaceSpec spec;
  spec.a_min = config.surface.a_min;
  spec.a_max = config.surface.a_max;
  spec.b_min = config.surface.b_min;
  spec.b_max = config.surface.b_max;
  spec.resolution = config.surface.resolution;
  spec.batch_size = config.surface.batch_size;
  spec.quantity = config.surface.quantity == "loss" ? SurfaceQuantity::Loss : SurfaceQuantity::GradNorm;

  const TaskPair task = task_from(config);
  const ClassifyBatch batch = surface_eval_batch(task.train, spec.batch_size);
  const std::size_t workers = std::max<std::size_t>(config.sweep.workers, 1);
  const SurfaceGrid grid = spec.quantity == SurfaceQuantity::Loss
                               ? loss_surface(pre, failed, success, spec, batch, workers)
                               : gradient_norm_surface(pre, failed, success, spec, batch, workers);
  save_surface(grid, pre, failed, success, batch, out, config.surface.svg);

  std::cout << "surface: " << spec.resolution << "x" << spec.resolution << " " << config.surface.quantity
            << " grid, corners " << grid.corner_pretrained << " / " << grid.corner_failed << " / "
            << grid.corner_success << "\n";
}

void command_forgetting(const ExperimentConfig& config) {
  config.model.validate();
  const fs::path out = config.out_dir;
  const Checkpoint fine_tuned = load_required_checkpoint(config.probe.checkpoint_finetuned, "finetuned");
  const Checkpoint pre_trained = load_required_checkpoint(config.probe.checkpoint_pretrained, "pretrained");

  // Held-out tail of the pre-training corpus; disjoint from training batches
  // by construction.
  require(config.probe.eval_size >= 1, "forgetting: probe.eval_size must be >= 1");
  require(config.probe.eval_size <= config.data.heldout_count,
          "forgetting: probe.eval_size exceeds the held-out slice (data.heldout_count)");
  const Corpus corpus = generate_corpus(config.grammar_spec(), config.data.corpus_seed, config.data.corpus_size);
  std::vector<std::vector<std::int32_t>> eval_seqs(corpus.sequences.end() - static_cast<std::ptrdiff_t>(config.probe.eval_size),
                                                   corpus.sequences.end());

  const SubstitutionCurve curve = substitution_curve(fine_tuned, pre_trained, eval_seqs, config.probe.mask_seed,
                                                     std::max<std::size_t>(config.sweep.workers, 1));
  save_curve(curve, out, config.probe.svg);

  std::cout << "forgetting: perplexity " << curve.perplexity.front() << " at k=0 -> " << curve.perplexity.back()
            << " at k=" << curve.k_values.back() << "\n";
}

void command_report(const std::filesystem::path& input_dir, const std::filesystem::path& out_dir) {
  require(fs::exists(input_dir) && fs::is_directory(input_dir), "report: input directory not found: " + input_dir.string());

  std::string report;
  bool found = false;

  const fs::path summary = input_dir / "summary.csv";
  if (fs::exists(summary)) {
    found = true;
    report += "== sweep summary (" + summary.string() + ") ==\n";
    const CsvTable t = read_csv(summary);
    for (const auto& row : t.rows) {
      report += row[0] + ": std " + row[1] + ", mean " + row[2] + ", max " + row[3] + ", failed " + row[4];
      if (row.size() > 7 && !row[6].empty()) report += ", levene p vs best " + row[6] + (row[7] == "true" ? " (*)" : "");
      report += "\n";
    }
    const fs::path box = input_dir / "boxplot.csv";
    if (fs::exists(box)) {
      const CsvTable bt = read_csv(box);
      std::vector<std::pair<std::string, std::vector<double>>> groups;
      for (const auto& row : bt.rows) {
        if (groups.empty() || groups.back().first != row[0]) groups.emplace_back(row[0], std::vector<double>{});
        groups.back().second.push_back(std::stod(row[2]));
      }
      write_text_file(out_dir / "report_boxplot.svg", svg_boxplot(groups));
      report += "boxplot: report_boxplot.svg\n";
    }
    report += "\n";
  }

  const fs::path curve = input_dir / "curve.csv";
  if (fs::exists(curve)) {
    found = true;
    report += "== substitution curve (" + curve.string() + ") ==\n";
    const CsvTable t = read_csv(curve);
    std::vector<double> xs, ys;
    for (const auto& row : t.rows) {
      xs.push_back(std::stod(row[0]));
      ys.push_back(std::stod(row[1]));
      report += "k=" + row[0] + ": perplexity " + row[1] + "\n";
    }
    write_text_file(out_dir / "report_curve.svg", svg_line_chart(xs, ys, "restored top-k layers", "perplexity"));
    report += "plot: report_curve.svg\n\n";
  }

  const fs::path grid = input_dir / "grid.csv";
  if (fs::exists(grid)) {
    found = true;
    report += "== surface grid (" + grid.string() + ") ==\n";
    const CsvTable t = read_csv(grid);
    std::vector<double> a_values, b_values, values;
    for (std::size_t j = 1; j < t.header.size(); ++j) b_values.push_back(std::stod(t.header[j]));
    for (const auto& row : t.rows) {
      a_values.push_back(std::stod(row[0]));
      for (std::size_t j = 1; j < row.size(); ++j) values.push_back(std::stod(row[j]));
    }
    write_text_file(out_dir / "report_contour.svg", svg_contour(a_values, b_values, values));
    report += std::to_string(a_values.size()) + "x" + std::to_string(b_values.size()) +
              " grid, contour: report_contour.svg\n\n";
  }

  require(found, "report: no artifacts found in " + input_dir.string());
  write_text_file(out_dir / "report.txt", report);
  std::cout << "report: wrote " << (out_dir / "report.txt").string() << "\n";
}

}  // namespace ftlab
