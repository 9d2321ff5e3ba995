#pragma once

#include <vector>

#include "mnemoseq/kernels.hpp"
#include "mnemoseq/matrix.hpp"

namespace mnemoseq {

// Deep-output layer: a 2K-dim pre-activation from state, previous word
// embedding, and context; maxout over consecutive pairs down to K; a final
// vocabulary projection; log-softmax.
template <typename S>
struct ReadoutParams {
  Mat<S> u_state;    // 2K x n
  Mat<S> v_embed;    // 2K x m
  Mat<S> c_context;  // 2K x 2n
  Mat<S> w_vocab;    // V_W x K

  static ReadoutParams zeros(int embed, int hidden, int maxout, int word_vocab) {
    ReadoutParams p;
    p.u_state = Mat<S>::Zero(2 * maxout, hidden);
    p.v_embed = Mat<S>::Zero(2 * maxout, embed);
    p.c_context = Mat<S>::Zero(2 * maxout, 2 * hidden);
    p.w_vocab = Mat<S>::Zero(word_vocab, maxout);
    return p;
  }
};

template <typename S>
struct ReadoutCache {
  Vec<S> hidden;          // K, maxout winners
  std::vector<int> pick;  // winning offset per pair
  Vec<S> log_probs;       // V_W
};

template <typename S>
Vec<S> readout_log_probs(const Vec<S>& state, const Vec<S>& prev_embed,
                         const Vec<S>& context, const ReadoutParams<S>& p,
                         ReadoutCache<S>* cache = nullptr) {
  Vec<S> pre = p.u_state * state + p.v_embed * prev_embed + p.c_context * context;
  std::vector<int> pick;
  Vec<S> hidden = maxout_pairs(pre, &pick);
  Vec<S> logits = p.w_vocab * hidden;
  Vec<S> log_probs = log_softmax(logits);
  if (cache) {
    cache->hidden = hidden;
    cache->pick = pick;
    cache->log_probs = log_probs;
  }
  return log_probs;
}

// d_logits is the gradient at the pre-softmax logits (for NLL of a target
// word: softmax(logits) minus its one-hot). Accumulates into g and the three
// input gradients.
template <typename S>
void readout_backward(const ReadoutParams<S>& p, const ReadoutCache<S>& c,
                      const Vec<S>& state, const Vec<S>& prev_embed,
                      const Vec<S>& context, const Vec<S>& d_logits,
                      ReadoutParams<S>& g, Vec<S>& d_state, Vec<S>& d_prev_embed,
                      Vec<S>& d_context) {
  g.w_vocab.noalias() += d_logits * c.hidden.transpose();
  Vec<S> d_hidden = p.w_vocab.transpose() * d_logits;

  // route each pair's gradient to its winning element
  Vec<S> d_pre = Vec<S>::Zero(2 * c.hidden.size());
  for (Eigen::Index k = 0; k < c.hidden.size(); ++k)
    d_pre[2 * k + c.pick[static_cast<std::size_t>(k)]] = d_hidden[k];

  g.u_state.noalias() += d_pre * state.transpose();
  g.v_embed.noalias() += d_pre * prev_embed.transpose();
  g.c_context.noalias() += d_pre * context.transpose();
  d_state.noalias() += p.u_state.transpose() * d_pre;
  d_prev_embed.noalias() += p.v_embed.transpose() * d_pre;
  d_context.noalias() += p.c_context.transpose() * d_pre;
}

// Chain rule through log-softmax for an arbitrary upstream gradient.
template <typename S>
Vec<S> log_softmax_backward(const Vec<S>& log_probs, const Vec<S>& d_log_probs) {
  S total = d_log_probs.sum();
  return d_log_probs - log_probs.array().exp().matrix() * total;
}

}  // namespace mnemoseq
