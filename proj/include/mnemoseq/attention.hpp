#pragma once

#include "mnemoseq/kernels.hpp"
#include "mnemoseq/matrix.hpp"

namespace mnemoseq {

// Additive alignment: score_t = v' tanh(W s_prev + U h_t), weights by
// softmax over source positions, context as the weighted state sum.
template <typename S>
struct AttentionParams {
  Mat<S> v_align;   // n' x 1
  Mat<S> w_state;   // n' x n, projects the previous decoder state
  Mat<S> u_memory;  // n' x 2n, projects encoder states

  static AttentionParams zeros(int align, int hidden) {
    AttentionParams p;
    p.v_align = Mat<S>::Zero(align, 1);
    p.w_state = Mat<S>::Zero(align, hidden);
    p.u_memory = Mat<S>::Zero(align, 2 * hidden);
    return p;
  }
};

template <typename S>
struct AttentionCache {
  Mat<S> activ;    // T x n', tanh rows of the alignment network
  Vec<S> alpha;    // T
  Vec<S> context;  // 2n
};

// The encoder-state projection U h_t depends only on the sequence, so callers
// compute it once per sequence: memory_proj = states * u_memory'.
template <typename S>
void attend(const Vec<S>& state_prev, const Mat<S>& states,
            const Mat<S>& memory_proj, const AttentionParams<S>& p,
            AttentionCache<S>& out) {
  Vec<S> sp = p.w_state * state_prev;  // n'
  Mat<S> pre = memory_proj;
  pre.rowwise() += sp.transpose();
  out.activ = pre.array().tanh().matrix();
  Vec<S> scores = out.activ * p.v_align.col(0);
  out.alpha = softmax(scores);
  out.context = states.transpose() * out.alpha;
}

template <typename S>
void attend(const Vec<S>& state_prev, const Mat<S>& states,
            const AttentionParams<S>& p, AttentionCache<S>& out) {
  Mat<S> proj = states * p.u_memory.transpose();
  attend(state_prev, states, proj, p, out);
}

// Returns the gradient at state_prev; accumulates into g and d_states.
template <typename S>
Vec<S> attend_backward(const AttentionParams<S>& p, const Mat<S>& states,
                       const Vec<S>& state_prev, const AttentionCache<S>& c,
                       const Vec<S>& d_context, AttentionParams<S>& g,
                       Mat<S>& d_states) {
  // context = states' alpha
  Vec<S> d_alpha = states * d_context;
  d_states.noalias() += c.alpha * d_context.transpose();

  // softmax
  S dot = c.alpha.dot(d_alpha);
  Vec<S> shifted = d_alpha;
  shifted.array() -= dot;
  Vec<S> d_scores = c.alpha.cwiseProduct(shifted);

  // scores = activ * v
  g.v_align.col(0).noalias() += c.activ.transpose() * d_scores;
  Mat<S> d_activ = d_scores * p.v_align.col(0).transpose();  // T x n'

  // tanh
  Mat<S> d_pre = d_activ.cwiseProduct(
      (Mat<S>::Ones(c.activ.rows(), c.activ.cols()) - c.activ.cwiseProduct(c.activ)));

  // pre row t = W s_prev + U h_t
  Vec<S> d_sp = d_pre.colwise().sum().transpose();
  g.w_state.noalias() += d_sp * state_prev.transpose();
  g.u_memory.noalias() += d_pre.transpose() * states;
  d_states.noalias() += d_pre * p.u_memory;
  return p.w_state.transpose() * d_sp;
}

}  // namespace mnemoseq
