#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ftlab/data.hpp"
#include "ftlab/model.hpp"

namespace ftlab {

enum class SurfaceQuantity { Loss, GradNorm };

// Scan specification for the plane spanned by delta1 = theta_f - theta_p and
// delta2 = theta_s - theta_p.
struct SurfaceSpec {
  double a_min = -1.5, a_max = 1.5;
  double b_min = -1.5, b_max = 1.5;
  std::size_t resolution = 40;   // grid points per axis, endpoints included
  std::size_t batch_size = 128;  // training samples in the fixed eval batch
  SurfaceQuantity quantity = SurfaceQuantity::Loss;

  void validate() const;
};

struct SurfaceGrid {
  std::vector<double> a_values, b_values;
  std::vector<double> values;  // row-major [a][b]
  SurfaceSpec spec;
  // exact corners evaluated on the original checkpoints, off-grid
  double corner_pretrained = 0.0;  // f(0, 0)
  double corner_failed = 0.0;      // f(1, 0)
  double corner_success = 0.0;     // f(0, 1)

  double at(std::size_t i, std::size_t j) const { return values[i * b_values.size() + j]; }
};

// Scalar evaluated at a combined parameter point; the production evaluators
// run the model, tests may plug in synthetic check functions.
using PointEvaluator = std::function<double(const ParamStore<float>&)>;

PointEvaluator make_loss_evaluator(const ModelConfig& config, const ClassifyBatch& batch);
PointEvaluator make_grad_norm_evaluator(const ModelConfig& config, const ClassifyBatch& batch);

// Evaluates `eval` over the grid of theta_p + a*d1 + b*d2. Grid points run
// concurrently; any single point recomputed in isolation reproduces its grid
// entry bitwise. Corners come from the untouched checkpoints.
SurfaceGrid surface_scan(const ParamStore<float>& pre, const ParamStore<float>& failed,
                         const ParamStore<float>& success, const SurfaceSpec& spec, const PointEvaluator& eval,
                         std::size_t workers = 1);

double surface_point(const ParamStore<float>& pre, const ParamStore<float>& d1, const ParamStore<float>& d2, double a,
                     double b, const PointEvaluator& eval);

// Builds the fixed evaluation batch (the first spec.batch_size training
// samples, dropout disabled) and scans the loss.
SurfaceGrid loss_surface(const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                         const SurfaceSpec& spec, const ClassifyBatch& batch, std::size_t workers = 1);
SurfaceGrid gradient_norm_surface(const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                                  const SurfaceSpec& spec, const ClassifyBatch& batch, std::size_t workers = 1);

ClassifyBatch surface_eval_batch(const TaskDataset& train, std::size_t batch_size);

// grid.csv (header row of b values, rows "a,entries..."), surface_manifest.txt
// (spec, checkpoint/batch hashes, corners), optional contour SVG.
void save_surface(const SurfaceGrid& grid, const Checkpoint& pre, const Checkpoint& failed, const Checkpoint& success,
                  const ClassifyBatch& batch, const std::filesystem::path& out_dir, bool svg);

}  // namespace ftlab
