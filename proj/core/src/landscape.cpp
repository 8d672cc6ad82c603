#include "ftlab/landscape.hpp"

#include "ftlab/io.hpp"
#include "ftlab/parallel.hpp"
#include "ftlab/svg.hpp"

namespace ftlab {

void SurfaceSpec::validate() const {
  require(resolution >= 2, "surface spec: resolution must be >= 2");
  require(a_max > a_min && b_max > b_min, "surface spec: empty axis range");
  require(batch_size >= 1, "surface spec: batch_size must be >= 1");
}

PointEvaluator make_loss_evaluator(const ModelConfig& config, const ClassifyBatch& batch) {
  return [config, batch](const ParamStore<float>& params) { return classify_loss(params, config, batch); };
}

PointEvaluator make_grad_norm_evaluator(const ModelConfig& config, const ClassifyBatch& batch) {
  return [config, batch](const ParamStore<float>& params) {
    Tape<float> tape;
    auto graph = detail::register_params(tape, params, /*include_mlm_head=*/false);
    Rng rng(0, "eval");
    auto fw = forward_classify(tape, params, graph, config, batch, Mode::Eval, rng);
    tape.backward(fw.loss);
    const ParamStore<float> grads = collect_grads(tape, params, graph);
    return global_l2_norm(grads);
  };
}

double surface_point(const ParamStore<float>& pre, const ParamStore<float>& d1, const ParamStore<float>& d2, double a,
                     double b, const PointEvaluator& eval) {
  return eval(combine(pre, a, d1, b, d2));
}

SurfaceGrid surface_scan(const ParamStore<float>& pre, const ParamStore<float>& failed,
                         const ParamStore<float>& success, const SurfaceSpec& spec, const PointEvaluator& eval,
                         std::size_t workers) {
  spec.validate();
  require(pre.same_layout(failed) && pre.same_layout(success), "surface: checkpoint layouts differ");

  SurfaceGrid grid;
  grid.spec = spec;
  grid.a_values.resize(spec.resolution);
  grid.b_values.resize(spec.resolution);
  const double da = (spec.a_max - spec.a_min) / static_cast<double>(spec.resolution - 1);
  const double db = (spec.b_max - spec.b_min) / static_cast<double>(spec.resolution - 1);
  for (std::size_t i = 0; i < spec.resolution; ++i) {
    grid.a_values[i] = spec.a_min + da * static_cast<double>(i);
    grid.b_values[i] = spec.b_min + db * static_cast<double>(i);
  }

  const ParamStore<float> d1 = subtract(failed, pre);
  const ParamStore<float> d2 = subtract(success, pre);

  grid.values.assign(spec.resolution * spec.resolution, 0.0);
  parallel_for(spec.resolution * spec.resolution, workers, [&](std::size_t idx) {
    const std::size_t i = idx / spec.resolution;
    const std::size_t j = idx % spec.resolution;
    grid.values[idx] = surface_point(pre, d1, d2, grid.a_values[i], grid.b_values[j], eval);
  });

  // corners on the untouched checkpoints, exact regardless of grid alignment
  grid.corner_pretrained = eval(pre);
  grid.corner_failed = eval(failed);
  grid.corner_success = eval(success);
  return grid;
}

namespace {

SurfaceGrid model_surface(const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                          const SurfaceSpec& spec, const ClassifyBatch& batch, std::size_t workers) {
  require(pre.config == failed.config && pre.config == success.config,
          "surface: the three checkpoints must share one model config");
  // dropout plays no role: evaluators run in eval mode
  const PointEvaluator eval = spec.quantity == SurfaceQuantity::Loss ? make_loss_evaluator(pre.config, batch)
                                                                     : make_grad_norm_evaluator(pre.config, batch);
  return surface_scan(pre.params, failed.params, success.params, spec, eval, workers);
}

}  // namespace

SurfaceGrid loss_surface(const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                         const SurfaceSpec& spec, const ClassifyBatch& batch, std::size_t workers) {
  SurfaceSpec s = spec;
  s.quantity = SurfaceQuantity::Loss;
  return model_surface(pre, failed, success, s, batch, workers);
}

SurfaceGrid gradient_norm_surface(const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                                  const SurfaceSpec& spec, const ClassifyBatch& batch, std::size_t workers) {
  SurfaceSpec s = spec;
  s.quantity = SurfaceQuantity::GradNorm;
  return model_surface(pre, failed, success, s, batch, workers);
}

ClassifyBatch surface_eval_batch(const TaskDataset& train, std::size_t batch_size) {
  require(train.examples.size() >= batch_size,
          "surface: training set smaller than requested eval batch " + std::to_string(batch_size));
  ClassifyBatch batch;
  batch.batch = batch_size;
  batch.seq = train.examples[0].tokens.size();
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch.tokens.insert(batch.tokens.end(), train.examples[i].tokens.begin(), train.examples[i].tokens.end());
    batch.labels.push_back(train.examples[i].label);
  }
  return batch;
}

void save_surface(const SurfaceGrid& grid, const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                  const ClassifyBatch& batch, const std::filesystem::path& out_dir, bool svg) {
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> header = {"a\\b"};
  for (double b : grid.b_values) header.push_back(fmt_double(b));
  CsvWriter csv(header);
  for (std::size_t i = 0; i < grid.a_values.size(); ++i) {
    std::vector<std::string> row = {fmt_double(grid.a_values[i])};
    for (std::size_t j = 0; j < grid.b_values.size(); ++j) row.push_back(fmt_double(grid.at(i, j)));
    csv.add_row(row);
  }
  csv.save(out_dir / "grid.csv");

  Manifest m;
  m.set("quantity", std::string(grid.spec.quantity == SurfaceQuantity::Loss ? "loss" : "grad-norm"));
  m.set("a_min", grid.spec.a_min);
  m.set("a_max", grid.spec.a_max);
  m.set("b_min", grid.spec.b_min);
  m.set("b_max", grid.spec.b_max);
  m.set("resolution", static_cast<std::int64_t>(grid.spec.resolution));
  m.set("batch_size", static_cast<std::int64_t>(grid.spec.batch_size));
  m.set("corner_f00_pretrained", grid.corner_pretrained);
  m.set("corner_f10_failed", grid.corner_failed);
  m.set("corner_f01_success", grid.corner_success);
  m.set("checkpoint_pretrained", hex64(content_hash(pre.params)));
  m.set("checkpoint_failed", hex64(content_hash(failed.params)));
  m.set("checkpoint_success", hex64(content_hash(success.params)));
  m.set("provenance_pretrained", pre.provenance);
  m.set("provenance_failed", failed.provenance);
  m.set("provenance_success", success.provenance);
  m.set("batch_hash", hex64(fnv1a_bytes(batch.tokens.data(), batch.tokens.size() * sizeof(std::int32_t))));
  m.set("grid_hash", hash_file(out_dir / "grid.csv"));
  m.save(out_dir / "surface_manifest.txt");

  if (svg) write_text_file(out_dir / "contour.svg", svg_contour(grid.a_values, grid.b_values, grid.values));
}

}  // namespace ftlab
