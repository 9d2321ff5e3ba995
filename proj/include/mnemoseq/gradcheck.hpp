#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mnemoseq/loss.hpp"
#include "mnemoseq/model.hpp"

namespace mnemoseq {

struct GradientCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Central-difference gradients of the batch loss for every parameter tensor.
inline ModelParams<double> numeric_model_gradients(const Batch& batch,
                                                   const ModelParams<double>& params,
                                                   double epsilon) {
  ModelParams<double> numeric = ModelParams<double>::zeros(params.dims);
  auto out = entries(numeric);
  for (std::size_t k = 0; k < out.size(); ++k) {
    ModelParams<double> probe = params;
    Mat<double>* slot = entries(probe)[k].mat;
    auto f = [&](const Mat<double>& candidate) {
      *slot = candidate;
      return static_cast<double>(forward_loss(batch, probe, false, 0.0, 0));
    };
    *out[k].mat = numeric_gradient(f, *entries(params)[k].mat, epsilon);
  }
  return numeric;
}

inline std::vector<GradientCheckReport> compare_gradient_sets(
    const ModelParams<double>& analytic, const ModelParams<double>& numeric,
    double tolerance) {
  std::vector<GradientCheckReport> reports;
  auto a = entries(analytic);
  auto n = entries(numeric);
  for (std::size_t k = 0; k < a.size(); ++k) {
    GradientCheckReport r;
    r.name = a[k].name;
    r.max_rel_error = max_rel_error(*a[k].mat, *n[k].mat);
    r.passed = r.max_rel_error <= tolerance;
    reports.push_back(std::move(r));
  }
  return reports;
}

// Builds a reproducible random model and two-example batch (uneven lengths,
// so masks are exercised), then checks analytic against numeric gradients
// tensor by tensor. 64-bit only; one report per registry entry.
inline std::vector<GradientCheckReport> gradient_check_model(
    const ModelDims& dims, std::uint64_t seed, double epsilon = 1e-5,
    double tolerance = 1e-4, int seq_len = 4) {
  ModelParams<double> params = init_params<double>(dims, mix_seed(seed, 1));
  Rng rng(mix_seed(seed, 2));

  std::vector<PairExample> examples(2);
  for (int r = 0; r < 2; ++r) {
    PairExample& ex = examples[static_cast<std::size_t>(r)];
    const int chars = seq_len - r;           // rows differ -> padding occurs
    const int words = seq_len - r;
    for (int t = 0; t < chars; ++t)
      ex.password_chars.push_back(static_cast<int>(rng.index(
          static_cast<std::size_t>(dims.char_vocab))));
    ex.target_tokens.push_back(kBosId);
    for (int u = 0; u < words; ++u) {
      int w;
      do {
        w = static_cast<int>(rng.index(static_cast<std::size_t>(dims.word_vocab)));
      } while (w == kBosId || w == kEosId);
      ex.target_tokens.push_back(w);
    }
    ex.target_tokens.push_back(kEosId);
  }
  Batch batch = make_batches(examples, 2, PadPolicy{0, dims.word_vocab})[0];

  LossCache<double> cache;
  forward_loss(batch, params, false, 0.0, 0, &cache);
  ModelParams<double> analytic = backward_gradients(cache, params);
  ModelParams<double> numeric = numeric_model_gradients(batch, params, epsilon);
  return compare_gradient_sets(analytic, numeric, tolerance);
}

}  // namespace mnemoseq
