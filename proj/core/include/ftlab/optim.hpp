#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ftlab/params.hpp"

namespace ftlab {

// ADAM with decoupled weight decay and an explicit bias-correction toggle.
struct AdamConfig {
  double alpha = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
  bool bias_correction = false;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::vector<std::string> decay_exempt = {".bias", ".ln", ".offset", ".gain"};
  std::string notes;

  void validate() const;
};

// Multiplicative step-size factor sqrt(1 - beta2^t) / (1 - beta1^t); defined
// for t >= 1 (the moment estimates do not exist before the first update).
double bias_correction_factor(std::int64_t t, double beta1, double beta2);

// Piecewise-linear warmup then decay. W = round(warmup_ratio * T);
// lr(0) = 0, lr(W) = base_lr, lr(T) = 0. With W = 0 the schedule is pure
// decay from base_lr.
struct ScheduleConfig {
  std::int64_t total_steps = 1;
  double warmup_ratio = 0.1;
  double base_lr = 2e-5;

  std::int64_t warmup_steps() const;
  void validate() const;
};

double warmup_linear_lr(std::int64_t t, const ScheduleConfig& schedule);

// Moment estimates are held in double regardless of the parameter type.
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  template <typename T>
  static AdamState init(const ParamStore<T>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      s.m.emplace_back(params.item(i).second.numel(), 0.0);
      s.v.emplace_back(params.item(i).second.numel(), 0.0);
    }
    return s;
  }
};

bool decay_exempt_name(const std::string& name, const std::vector<std::string>& patterns);

// One ADAM step:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   a_t = scheduled_lr * factor(t) when bias correction is on, else scheduled_lr
//   theta <- theta - a_t * m / (sqrt(v) + eps) - scheduled_lr * lambda * theta
// Decay is decoupled, skipped for names matching decay_exempt, and uses the
// pre-update theta. All arithmetic runs in double.
template <typename T>
void adam_update(ParamStore<T>& params, const ParamStore<T>& grads, AdamState& state, const AdamConfig& config,
                 double scheduled_lr) {
  config.validate();
  require(scheduled_lr >= 0.0, "adam_update: scheduled_lr must be >= 0");
  require(params.same_layout(grads), "adam_update: gradient layout differs from params");
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          "adam_update: state not initialized for this parameter set");
  require(all_finite(grads), "adam_update: non-finite gradient");

  state.step += 1;
  const double factor = config.bias_correction ? bias_correction_factor(state.step, config.beta1, config.beta2) : 1.0;
  const double alpha_t = scheduled_lr * factor;
  const double decay = scheduled_lr * config.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, theta] = params.item(i);
    const auto& g = grads.item(i).second;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool exempt = decay_exempt_name(name, config.decay_exempt);
    for (std::size_t j = 0; j < theta.numel(); ++j) {
      const double gj = static_cast<double>(g.data[j]);
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      const double old = static_cast<double>(theta.data[j]);
      double next = old - alpha_t * m[j] / (std::sqrt(v[j]) + config.epsilon);
      if (!exempt && config.weight_decay > 0.0) next -= decay * old;
      theta.data[j] = static_cast<T>(next);
    }
  }
}

// Scales gradients so the global L2 norm is at most max_norm; returns the
// pre-clip norm. Norm accumulation is in double.
template <typename T>
double clip_global_norm(ParamStore<T>& grads, double max_norm) {
  require(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  const double norm = global_l2_norm(grads);
  require(std::isfinite(norm), "clip_global_norm: non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (auto& g : grads.item(i).second.data) g = static_cast<T>(static_cast<double>(g) * scale);
  }
  return norm;
}

// Appendix hyperparameter presets; bias_correction is left to the caller.
AdamConfig optimizer_preset(const std::string& name);

}  // namespace ftlab
