#include "ftlab/optim.hpp"

namespace ftlab {

void AdamConfig::validate() const {
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam config: betas must lie in [0, 1)");
  require(epsilon > 0.0, "adam config: epsilon must be positive");
  // alpha 0 is the degenerate null-optimization case; the harness relies on it
  require(alpha >= 0.0, "adam config: alpha must be >= 0");
  require(weight_decay >= 0.0, "adam config: weight_decay must be >= 0");
}

double bias_correction_factor(std::int64_t t, double beta1, double beta2) {
  require(t >= 1, "bias_correction_factor: undefined for t = " + std::to_string(t) +
                      " (moment estimates exist only after the first update)");
  return std::sqrt(1.0 - std::pow(beta2, static_cast<double>(t))) / (1.0 - std::pow(beta1, static_cast<double>(t)));
}

std::int64_t ScheduleConfig::warmup_steps() const {
  return static_cast<std::int64_t>(std::llround(warmup_ratio * static_cast<double>(total_steps)));
}

void ScheduleConfig::validate() const {
  require(total_steps >= 1, "schedule: total_steps must be >= 1");
  require(warmup_ratio >= 0.0 && warmup_ratio < 1.0, "schedule: warmup_ratio must lie in [0, 1)");
  require(base_lr >= 0.0, "schedule: base_lr must be >= 0");
  const std::int64_t w = warmup_steps();
  require(w >= 0 && w < total_steps, "schedule: warmup steps W = " + std::to_string(w) +
                                         " must satisfy 0 <= W < T = " + std::to_string(total_steps));
}

double warmup_linear_lr(std::int64_t t, const ScheduleConfig& schedule) {
  schedule.validate();
  require(t >= 0, "warmup_linear_lr: t must be >= 0");
  require(t <= schedule.total_steps,
          "warmup_linear_lr: t = " + std::to_string(t) + " exceeds T = " + std::to_string(schedule.total_steps));
  const std::int64_t w = schedule.warmup_steps();
  const std::int64_t total = schedule.total_steps;
  if (w > 0 && t <= w) return schedule.base_lr * static_cast<double>(t) / static_cast<double>(w);
  if (w == 0 && t == 0) return schedule.base_lr;
  return schedule.base_lr * static_cast<double>(total - t) / static_cast<double>(total - w);
}

bool decay_exempt_name(const std::string& name, const std::vector<std::string>& patterns) {
  for (const auto& p : patterns)
    if (!p.empty() && name.find(p) != std::string::npos) return true;
  return false;
}

AdamConfig optimizer_preset(const std::string& name) {
  AdamConfig c;
  c.alpha = 2e-5;
  c.beta1 = 0.9;
  c.epsilon = 1e-6;
  if (name == "bert-like") {
    c.beta2 = 0.999;
    c.weight_decay = 0.01;
    c.clip_norm = 1.0;
    c.notes = "dropout 0.1";
  } else if (name == "roberta-like") {
    c.beta2 = 0.98;
    c.weight_decay = 0.1;
    c.clip_norm = 0.0;  // no clipping
    c.notes = "dropout 0.1";
  } else if (name == "albert-like") {
    c.beta2 = 0.999;
    c.weight_decay = 0.0;  // no weight decay
    c.clip_norm = 1.0;
    c.notes = "no dropout";
  } else {
    fail("optimizer_preset: unknown preset '" + name + "'");
  }
  return c;
}

}  // namespace ftlab
