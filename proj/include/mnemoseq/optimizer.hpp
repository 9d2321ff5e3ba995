#pragma once

#include <cmath>

#include "mnemoseq/model.hpp"

namespace mnemoseq {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
};

template <typename S>
struct AdamState {
  long step = 0;
  ModelParams<S> first, second;  // moment estimates

  static AdamState zeros(const ModelDims& d) {
    AdamState s;
    s.first = ModelParams<S>::zeros(d);
    s.second = ModelParams<S>::zeros(d);
    return s;
  }
};

template <typename S>
double global_norm(const ModelParams<S>& grads) {
  double sq = 0.0;
  for (const auto& e : entries(grads))
    sq += static_cast<double>(e.mat->squaredNorm());
  return std::sqrt(sq);
}

// Scales the whole gradient set so its global norm does not exceed max_norm;
// returns the norm before clipping.
template <typename S>
double clip_global_norm(ModelParams<S>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const S scale = static_cast<S>(max_norm / norm);
    for (auto& e : entries(grads)) *e.mat *= scale;
  }
  return norm;
}

// Adaptive-moment update of a single tensor with bias correction.
template <typename S>
void adam_update(Mat<S>& param, const Mat<S>& grad, Mat<S>& m1, Mat<S>& m2,
                 long step, const OptimizerConfig& cfg) {
  const S b1 = static_cast<S>(cfg.beta1);
  const S b2 = static_cast<S>(cfg.beta2);
  m1 = b1 * m1 + (S(1) - b1) * grad;
  m2 = b2 * m2 + (S(1) - b2) * grad.cwiseProduct(grad);
  const S corr1 = S(1) - static_cast<S>(std::pow(cfg.beta1, static_cast<double>(step)));
  const S corr2 = S(1) - static_cast<S>(std::pow(cfg.beta2, static_cast<double>(step)));
  const S lr = static_cast<S>(cfg.learning_rate);
  const S eps = static_cast<S>(cfg.epsilon);
  param -= lr * (m1 / corr1).cwiseQuotient(
                    ((m2 / corr2).cwiseSqrt().array() + eps).matrix());
}

// Clip, then update every tensor. Returns false (leaving parameters and
// optimizer state untouched) when the gradients are non-finite; callers log
// the skipped step.
template <typename S>
bool apply_update(ModelParams<S>& params, ModelParams<S>& grads,
                  AdamState<S>& state, const OptimizerConfig& cfg) {
  if (!params_finite(grads)) return false;
  clip_global_norm(grads, cfg.clip_norm);
  ++state.step;
  auto ps = entries(params);
  auto gs = entries(grads);
  auto m1 = entries(state.first);
  auto m2 = entries(state.second);
  for (std::size_t i = 0; i < ps.size(); ++i)
    adam_update(*ps[i].mat, *gs[i].mat, *m1[i].mat, *m2[i].mat, state.step, cfg);
  return true;
}

}  // namespace mnemoseq
