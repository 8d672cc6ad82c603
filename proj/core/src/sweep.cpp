#include "ftlab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftlab/io.hpp"
#include "ftlab/parallel.hpp"
#include "ftlab/svg.hpp"

namespace ftlab {

void SweepPlan::validate() const {
  require(!cells.empty(), "sweep plan: no cells");
  require(!seeds.empty(), "sweep plan: no seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = i + 1; j < seeds.size(); ++j)
      require(seeds[i] != seeds[j], "sweep plan: duplicate seed " + std::to_string(seeds[i]));
  for (const auto& c : cells) require(!c.id.empty(), "sweep plan: cell with empty id");
}

SweepPlan contrast_plan(std::vector<std::uint64_t> seeds) {
  SweepPlan plan;
  plan.name = "baseline-vs-devlin";
  plan.cells.push_back({"devlin-default",
                        {{"run.epochs", "3"}, {"optim.bias_correction", "false"}}});
  plan.cells.push_back({"paper-baseline",
                        {{"run.epochs", "20"}, {"optim.bias_correction", "true"}}});
  plan.seeds = std::move(seeds);
  return plan;
}

SweepPlan ablation_plan(const std::vector<std::int64_t>& epochs, const std::vector<double>& lrs,
                        const std::vector<bool>& bias_correction, std::vector<std::uint64_t> seeds) {
  SweepPlan plan;
  plan.name = "ablation";
  for (std::int64_t e : epochs) {
    for (double lr : lrs) {
      for (bool bc : bias_correction) {
        SweepCell cell;
        cell.id = "epochs=" + std::to_string(e) + ";lr=" + fmt_double(lr) + ";bc=" + (bc ? "on" : "off");
        cell.overrides = {{"run.epochs", std::to_string(e)},
                          {"optim.lr", fmt_double(lr)},
                          {"optim.bias_correction", bc ? "true" : "false"}};
        plan.cells.push_back(std::move(cell));
      }
    }
  }
  plan.seeds = std::move(seeds);
  return plan;
}

SweepPlan axes_plan(const std::string& name,
                    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                    std::vector<std::uint64_t> seeds) {
  for (const auto& [path, values] : axes) require(!values.empty(), "sweep plan: axis '" + path + "' has no values");
  SweepPlan plan;
  plan.name = name;
  plan.cells.push_back({"", {}});
  for (const auto& [path, values] : axes) {
    std::vector<SweepCell> next;
    for (const auto& cell : plan.cells) {
      for (const auto& v : values) {
        SweepCell c = cell;
        c.id += (c.id.empty() ? "" : ";") + path + "=" + v;
        c.overrides.emplace_back(path, v);
        next.push_back(std::move(c));
      }
    }
    plan.cells = std::move(next);
  }
  if (axes.empty()) plan.cells[0].id = "base";
  plan.seeds = std::move(seeds);
  return plan;
}

std::vector<std::uint64_t> default_seeds(std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = 101 + i;
  return seeds;
}

namespace {

bool parse_bool(const std::string& v, const std::string& path) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail("sweep override: '" + path + "' expects a boolean, got '" + v + "'");
}

}  // namespace

void apply_run_override(RunConfig& config, const std::string& path, const std::string& value) {
  if (path == "run.epochs") {
    config.epochs = std::stoll(value);
    config.total_iterations = 0;
  } else if (path == "run.total_iterations") {
    config.total_iterations = std::stoll(value);
    config.epochs = 0;
  } else if (path == "run.batch_size") {
    config.batch_size = std::stoll(value);
  } else if (path == "run.eval_every") {
    config.eval_every = std::stoll(value);
  } else if (path == "run.dropout") {
    config.dropout_override = std::stod(value);
  } else if (path == "optim.lr" || path == "optim.alpha") {
    config.adam.alpha = std::stod(value);
  } else if (path == "optim.bias_correction") {
    config.adam.bias_correction = parse_bool(value, path);
  } else if (path == "optim.beta1") {
    config.adam.beta1 = std::stod(value);
  } else if (path == "optim.beta2") {
    config.adam.beta2 = std::stod(value);
  } else if (path == "optim.epsilon") {
    config.adam.epsilon = std::stod(value);
  } else if (path == "optim.weight_decay") {
    config.adam.weight_decay = std::stod(value);
  } else if (path == "optim.clip_norm") {
    config.adam.clip_norm = std::stod(value);
  } else if (path == "schedule.warmup_ratio") {
    config.warmup_ratio = std::stod(value);
  } else {
    fail("sweep override: unknown parameter path '" + path + "'");
  }
}

std::vector<double> CellResult::metrics() const {
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(r.final_dev_metric);
  return out;
}

std::size_t CellResult::failed_count() const {
  std::size_t n = 0;
  for (const auto& r : runs)
    if (r.failed) ++n;
  return n;
}

SweepResult run_sweep(const SweepPlan& plan, const RunConfig& base, const TaskDataset& train, const TaskDataset& dev,
                      const Checkpoint& init, std::size_t workers) {
  plan.validate();
  const std::size_t n_cells = plan.cells.size();
  const std::size_t n_seeds = plan.seeds.size();

  std::vector<std::vector<RunRecord>> slots(n_cells, std::vector<RunRecord>(n_seeds));
  parallel_for(n_cells * n_seeds, workers, [&](std::size_t job) {
    const std::size_t c = job / n_seeds;
    const std::size_t s = job % n_seeds;
    RunConfig rc = base;
    rc.seed = plan.seeds[s];
    for (const auto& [path, value] : plan.cells[c].overrides) apply_run_override(rc, path, value);
    slots[c][s] = run_finetune(rc, train, dev, init).record;
  });

  SweepResult result;
  result.plan_name = plan.name;
  result.seeds = plan.seeds;
  result.cells.reserve(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c)
    result.cells.push_back({plan.cells[c], std::move(slots[c])});
  return result;
}

std::int64_t iterations_matched_epochs(std::int64_t full_train_size, std::int64_t full_epochs,
                                       std::int64_t batch_size, std::int64_t subset_size) {
  require(full_train_size >= 1 && full_epochs >= 1 && batch_size >= 1 && subset_size >= 1,
          "iterations_matched_epochs: all counts must be >= 1");
  require(subset_size <= full_train_size, "iterations_matched_epochs: subset exceeds full dataset");
  const std::int64_t full_iters = (full_train_size + batch_size - 1) / batch_size * full_epochs;
  const std::int64_t subset_iters_per_epoch = (subset_size + batch_size - 1) / batch_size;
  return (full_iters + subset_iters_per_epoch - 1) / subset_iters_per_epoch;
}

StabilityComparison compare_stability(const std::vector<double>& cell_a, const std::vector<double>& cell_b) {
  const LeveneResult lv = levene_test({cell_a, cell_b});
  return {lv.W, lv.p, lv.p < 0.001};
}

void emit_report(const SweepResult& result, const std::filesystem::path& out_dir) {
  require(!result.cells.empty(), "emit_report: empty sweep result");
  std::filesystem::create_directories(out_dir);

  // best = smallest metric standard deviation; other cells are Levene-tested
  // against it, mirroring the starred-comparison convention.
  std::size_t best = 0;
  double best_std = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const double s = sample_std(result.cells[c].metrics());
    if (s < best_std) {
      best_std = s;
      best = c;
    }
  }

  CsvWriter summary({"cell", "std", "mean", "max", "failed_count", "levene_W_vs_best", "levene_p_vs_best",
                     "significant_vs_best"});
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const auto metrics = result.cells[c].metrics();
    const SummaryStats st = summary_stats(metrics);
    std::string w = "", p = "", sig = "";
    if (c != best) {
      const auto cmp = compare_stability(metrics, result.cells[best].metrics());
      w = fmt_double(cmp.W);
      p = fmt_double(cmp.p);
      sig = cmp.significant ? "true" : "false";
    }
    summary.add_row({result.cells[c].cell.id, fmt_double(st.stddev), fmt_double(st.mean), fmt_double(st.max),
                     std::to_string(result.cells[c].failed_count()), w, p, sig});
  }
  summary.save(out_dir / "summary.csv");

  CsvWriter box({"cell", "seed", "metric", "failed", "diverged"});
  for (const auto& cell : result.cells)
    for (std::size_t s = 0; s < cell.runs.size(); ++s)
      box.add_row({cell.cell.id, std::to_string(result.seeds[s]), fmt_double(cell.runs[s].final_dev_metric),
                   cell.runs[s].failed ? "true" : "false", cell.runs[s].diverged ? "true" : "false"});
  box.save(out_dir / "boxplot.csv");

  CsvWriter scatter({"run", "final_train_loss", "final_dev_metric"});
  for (const auto& cell : result.cells)
    for (std::size_t s = 0; s < cell.runs.size(); ++s)
      scatter.add_row({cell.cell.id + ";seed=" + std::to_string(result.seeds[s]),
                       fmt_double(cell.runs[s].final_train_loss), fmt_double(cell.runs[s].final_dev_metric)});
  scatter.save(out_dir / "scatter.csv");

  std::vector<std::pair<std::string, std::vector<double>>> box_data;
  for (const auto& cell : result.cells) box_data.emplace_back(cell.cell.id, cell.metrics());
  write_text_file(out_dir / "boxplot.svg", svg_boxplot(box_data));

  Manifest m;
  m.set("plan", result.plan_name);
  m.set("cells", static_cast<std::int64_t>(result.cells.size()));
  std::string seeds;
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    if (i) seeds += " ";
    seeds += std::to_string(result.seeds[i]);
  }
  m.set("seeds", seeds);
  for (const char* f : {"summary.csv", "boxplot.csv", "scatter.csv", "boxplot.svg"})
    m.set(std::string("hash.") + f, hash_file(out_dir / f));
  m.save(out_dir / "sweep_manifest.txt");
}

}  // namespace ftlab
