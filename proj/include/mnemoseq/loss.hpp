#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mnemoseq/corpus.hpp"
#include "mnemoseq/model.hpp"

namespace mnemoseq {

// Inverted-scaling dropout mask: 0 with probability rate, else 1/(1-rate),
// so expectations match the no-dropout forward pass.
template <typename S>
Mat<S> dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  Mat<S> mask(rows, cols);
  const S keep = static_cast<S>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      mask(i, j) = rng.bernoulli(rate) ? S(0) : keep;
  return mask;
}

template <typename S>
struct StepActivations {
  AttentionCache<S> attn;
  DecoderStepCache<S> gru;
  ReadoutCache<S> readout;
  Vec<S> state;          // decoder state after this step
  Vec<S> state_dropped;  // what the readout consumed
  Vec<S> readout_mask;   // empty when dropout off
};

template <typename S>
struct ExampleActivations {
  std::vector<int> chars;    // true lengths, padding stripped
  std::vector<int> targets;  // bracketed
  EncodeCache<S> enc;
  Mat<S> states;         // encoder output as consumed downstream
  Mat<S> enc_mask;       // empty when dropout off
  Vec<S> s0;
  std::vector<StepActivations<S>> steps;
};

template <typename S>
struct LossCache {
  std::vector<ExampleActivations<S>> examples;
  long tokens = 0;
  S loss = S(0);
};

// Teacher-forced mean negative log-likelihood per unmasked target token.
// Each example is processed at its true length, so padded positions
// contribute exactly nothing. Dropout (when active) hits the encoder output
// rows and the decoder state entering the readout, nowhere else; the seed
// makes the masks reproducible.
template <typename S>
S forward_loss(const Batch& batch, const ModelParams<S>& params,
               bool dropout_active, double dropout_rate, std::uint64_t seed,
               LossCache<S>* cache = nullptr) {
  if (dropout_active && (dropout_rate < 0.0 || dropout_rate >= 1.0))
    throw std::invalid_argument("forward_loss: dropout rate outside [0,1)");
  const Eigen::Index n = params.dims.hidden;
  Rng rng(seed);

  S total = S(0);
  long tokens = 0;
  if (cache) {
    cache->examples.clear();
    cache->examples.resize(static_cast<std::size_t>(batch.size()));
  }

  for (int r = 0; r < batch.size(); ++r) {
    std::vector<int> chars, targets;
    for (Eigen::Index t = 0; t < batch.password.cols(); ++t)
      if (batch.password_mask(r, t)) chars.push_back(batch.password(r, t));
    for (Eigen::Index u = 0; u < batch.target.cols(); ++u)
      if (batch.target_mask(r, u)) targets.push_back(batch.target(r, u));
    if (chars.empty() || targets.size() < 2)
      throw std::invalid_argument("forward_loss: degenerate example in batch");
    for (int c : chars)
      if (c < 0 || c >= params.dims.char_vocab)
        throw std::out_of_range("forward_loss: character id outside vocabulary");

    ExampleActivations<S> ex;
    ex.chars = chars;
    ex.targets = targets;
    Mat<S> states = encode(chars, params.encoder, cache ? &ex.enc : nullptr);
    if (dropout_active) {
      ex.enc_mask = dropout_mask<S>(rng, states.rows(), states.cols(), dropout_rate);
      states = states.cwiseProduct(ex.enc_mask);
    }
    ex.states = states;

    Mat<S> memory_proj = states * params.attention.u_memory.transpose();
    Vec<S> s_prev = init_state(states, params.decoder.w_init);
    ex.s0 = s_prev;

    const std::size_t steps = targets.size() - 1;
    if (cache) ex.steps.resize(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const int y_prev = targets[i];
      const int y_true = targets[i + 1];
      StepActivations<S> st;
      attend(s_prev, states, memory_proj, params.attention, st.attn);
      st.state = decoder_step(s_prev, y_prev, st.attn.context, params.decoder,
                              cache ? &st.gru : nullptr);
      st.state_dropped = st.state;
      if (dropout_active) {
        Mat<S> mask = dropout_mask<S>(rng, n, 1, dropout_rate);
        st.readout_mask = mask.col(0);
        st.state_dropped = st.state.cwiseProduct(st.readout_mask);
      }
      Vec<S> embed = params.decoder.word_embed.col(y_prev);
      Vec<S> lp = readout_log_probs(st.state_dropped, embed, st.attn.context,
                                    params.readout, cache ? &st.readout : nullptr);
      total -= lp[y_true];
      ++tokens;
      s_prev = st.state;
      if (cache) ex.steps[i] = std::move(st);
    }
    if (cache) cache->examples[static_cast<std::size_t>(r)] = std::move(ex);
  }

  S loss = total / static_cast<S>(tokens);
  if (!std::isfinite(static_cast<double>(loss)))
    throw std::domain_error("forward_loss: non-finite loss");
  if (cache) {
    cache->tokens = tokens;
    cache->loss = loss;
  }
  return loss;
}

// Exact reverse-mode gradients for everything in ModelParams, including the
// attention path back into the encoder states and the shared embedding uses.
template <typename S>
ModelParams<S> backward_gradients(const LossCache<S>& cache,
                                  const ModelParams<S>& params) {
  if (cache.examples.empty() || cache.tokens == 0)
    throw std::invalid_argument("backward_gradients: empty forward cache");
  const Eigen::Index n = params.dims.hidden;
  for (const auto& ex : cache.examples)
    if (ex.states.cols() != 2 * n)
      throw std::invalid_argument("backward_gradients: cache/params shape mismatch");

  ModelParams<S> g = ModelParams<S>::zeros(params.dims);
  const S weight = S(1) / static_cast<S>(cache.tokens);

  for (const auto& ex : cache.examples) {
    Mat<S> d_states = Mat<S>::Zero(ex.states.rows(), ex.states.cols());
    Vec<S> d_state = Vec<S>::Zero(n);  // gradient at s_{i} flowing backward

    for (std::size_t i = ex.steps.size(); i-- > 0;) {
      const StepActivations<S>& st = ex.steps[i];
      const int y_prev = ex.targets[i];
      const int y_true = ex.targets[i + 1];

      Vec<S> d_logits = st.readout.log_probs.array().exp();
      d_logits[y_true] -= S(1);
      d_logits *= weight;

      Vec<S> d_state_ro = Vec<S>::Zero(n);
      Vec<S> d_embed = Vec<S>::Zero(params.dims.embed);
      Vec<S> d_context = Vec<S>::Zero(2 * n);
      Vec<S> embed = params.decoder.word_embed.col(y_prev);
      readout_backward(params.readout, st.readout, st.state_dropped, embed,
                       st.attn.context, d_logits, g.readout, d_state_ro,
                       d_embed, d_context);
      g.decoder.word_embed.col(y_prev) += d_embed;
      if (st.readout_mask.size() > 0)
        d_state_ro = d_state_ro.cwiseProduct(st.readout_mask);
      d_state += d_state_ro;

      Vec<S> d_prev_gru =
          decoder_step_backward(params.decoder, st.gru, y_prev, d_state,
                                g.decoder, d_context);
      const Vec<S>& s_prev = st.gru.state_prev;
      Vec<S> d_prev_attn =
          attend_backward(params.attention, ex.states, s_prev, st.attn,
                          d_context, g.attention, d_states);
      d_state = d_prev_gru + d_prev_attn;
    }

    init_state_backward(ex.states, params.decoder.w_init, ex.s0, d_state,
                        g.decoder.w_init, d_states);
    if (ex.enc_mask.size() > 0) d_states = d_states.cwiseProduct(ex.enc_mask);
    encode_backward(ex.chars, params.encoder, ex.enc, d_states, g.encoder);
  }
  return g;
}

}  // namespace mnemoseq
