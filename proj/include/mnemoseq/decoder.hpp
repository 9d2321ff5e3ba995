#pragma once

#include <stdexcept>

#include "mnemoseq/kernels.hpp"
#include "mnemoseq/matrix.hpp"

namespace mnemoseq {

// Decoder GRU conditioned on the attention context. Same gate structure as
// the encoder plus a context projection in every gate; still bias-free:
//   r = sigmoid(W_r e + U_r s_prev + C_r c)
//   z = sigmoid(W_z e + U_z s_prev + C_z c)
//   cand = tanh(W e + U (r o s_prev) + C c)
//   s = (1 - z) o s_prev + z o cand
template <typename S>
struct DecoderParams {
  Mat<S> word_embed;                 // m x V_W
  Mat<S> w_cand, w_update, w_reset;  // n x m
  Mat<S> u_cand, u_update, u_reset;  // n x n
  Mat<S> c_cand, c_update, c_reset;  // n x 2n
  Mat<S> w_init;                     // n x n, decoder state bootstrap

  static DecoderParams zeros(int embed, int hidden, int word_vocab) {
    DecoderParams p;
    p.word_embed = Mat<S>::Zero(embed, word_vocab);
    p.w_cand = Mat<S>::Zero(hidden, embed);
    p.w_update = Mat<S>::Zero(hidden, embed);
    p.w_reset = Mat<S>::Zero(hidden, embed);
    p.u_cand = Mat<S>::Zero(hidden, hidden);
    p.u_update = Mat<S>::Zero(hidden, hidden);
    p.u_reset = Mat<S>::Zero(hidden, hidden);
    p.c_cand = Mat<S>::Zero(hidden, 2 * hidden);
    p.c_update = Mat<S>::Zero(hidden, 2 * hidden);
    p.c_reset = Mat<S>::Zero(hidden, 2 * hidden);
    p.w_init = Mat<S>::Zero(hidden, hidden);
    return p;
  }
};

// s_0 = tanh(W_init * backward half of the first encoder state): the
// backward pass has read the whole password at position 1.
template <typename S>
Vec<S> init_state(const Mat<S>& states, const Mat<S>& w_init) {
  if (states.rows() == 0)
    throw std::invalid_argument("init_state: empty encoder states");
  const Eigen::Index n = w_init.rows();
  Vec<S> h_bwd_first = states.row(0).tail(n).transpose();
  return tanh_vec<S>(w_init * h_bwd_first);
}

// Accumulates the bootstrap gradient into g_init and the encoder-state slab.
template <typename S>
void init_state_backward(const Mat<S>& states, const Mat<S>& w_init,
                         const Vec<S>& s0, const Vec<S>& d_s0, Mat<S>& g_init,
                         Mat<S>& d_states) {
  const Eigen::Index n = w_init.rows();
  Vec<S> d_pre = d_s0.cwiseProduct(Vec<S>::Ones(s0.size()) - s0.cwiseProduct(s0));
  Vec<S> h_bwd_first = states.row(0).tail(n).transpose();
  g_init.noalias() += d_pre * h_bwd_first.transpose();
  d_states.row(0).tail(n) += (w_init.transpose() * d_pre).transpose();
}

template <typename S>
struct DecoderStepCache {
  Vec<S> embed, state_prev, context;
  Vec<S> reset, update, cand;
};

template <typename S>
Vec<S> decoder_step(const Vec<S>& state_prev, int y_prev, const Vec<S>& context,
                    const DecoderParams<S>& p, DecoderStepCache<S>* cache = nullptr) {
  if (y_prev < 0 || y_prev >= p.word_embed.cols())
    throw std::out_of_range("decoder_step: word index outside vocabulary");
  Vec<S> e = p.word_embed.col(y_prev);
  Vec<S> reset = sigmoid_vec<S>(p.w_reset * e + p.u_reset * state_prev + p.c_reset * context);
  Vec<S> update = sigmoid_vec<S>(p.w_update * e + p.u_update * state_prev + p.c_update * context);
  Vec<S> gated = reset.cwiseProduct(state_prev);
  Vec<S> cand = tanh_vec<S>(p.w_cand * e + p.u_cand * gated + p.c_cand * context);
  Vec<S> s = (Vec<S>::Ones(state_prev.size()) - update).cwiseProduct(state_prev) +
             update.cwiseProduct(cand);
  if (cache) {
    cache->embed = e;
    cache->state_prev = state_prev;
    cache->context = context;
    cache->reset = reset;
    cache->update = update;
    cache->cand = cand;
  }
  return s;
}

// Returns the gradient at state_prev; accumulates parameter gradients
// (including the embedding column of y_prev) and the context gradient.
template <typename S>
Vec<S> decoder_step_backward(const DecoderParams<S>& p, const DecoderStepCache<S>& c,
                             int y_prev, const Vec<S>& d_s, DecoderParams<S>& g,
                             Vec<S>& d_context) {
  const Vec<S>& r = c.reset;
  const Vec<S>& z = c.update;
  const Vec<S>& cand = c.cand;
  const Vec<S> ones = Vec<S>::Ones(z.size());
  Vec<S> d_embed = Vec<S>::Zero(c.embed.size());

  Vec<S> d_z = d_s.cwiseProduct(cand - c.state_prev);
  Vec<S> d_cand = d_s.cwiseProduct(z);
  Vec<S> d_prev = d_s.cwiseProduct(ones - z);

  Vec<S> d_pre_cand = d_cand.cwiseProduct(ones - cand.cwiseProduct(cand));
  Vec<S> gated = r.cwiseProduct(c.state_prev);
  g.w_cand.noalias() += d_pre_cand * c.embed.transpose();
  g.u_cand.noalias() += d_pre_cand * gated.transpose();
  g.c_cand.noalias() += d_pre_cand * c.context.transpose();
  d_embed.noalias() += p.w_cand.transpose() * d_pre_cand;
  d_context.noalias() += p.c_cand.transpose() * d_pre_cand;
  Vec<S> d_gated = p.u_cand.transpose() * d_pre_cand;

  Vec<S> d_r = d_gated.cwiseProduct(c.state_prev);
  d_prev += d_gated.cwiseProduct(r);

  Vec<S> d_pre_r = d_r.cwiseProduct(r.cwiseProduct(ones - r));
  g.w_reset.noalias() += d_pre_r * c.embed.transpose();
  g.u_reset.noalias() += d_pre_r * c.state_prev.transpose();
  g.c_reset.noalias() += d_pre_r * c.context.transpose();
  d_embed.noalias() += p.w_reset.transpose() * d_pre_r;
  d_prev.noalias() += p.u_reset.transpose() * d_pre_r;
  d_context.noalias() += p.c_reset.transpose() * d_pre_r;

  Vec<S> d_pre_z = d_z.cwiseProduct(z.cwiseProduct(ones - z));
  g.w_update.noalias() += d_pre_z * c.embed.transpose();
  g.u_update.noalias() += d_pre_z * c.state_prev.transpose();
  g.c_update.noalias() += d_pre_z * c.context.transpose();
  d_embed.noalias() += p.w_update.transpose() * d_pre_z;
  d_prev.noalias() += p.u_update.transpose() * d_pre_z;
  d_context.noalias() += p.c_update.transpose() * d_pre_z;

  g.word_embed.col(y_prev) += d_embed;
  return d_prev;
}

}  // namespace mnemoseq
