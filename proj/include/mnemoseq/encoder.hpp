#pragma once

#include <stdexcept>
#include <vector>

#include "mnemoseq/kernels.hpp"
#include "mnemoseq/matrix.hpp"

namespace mnemoseq {

// Gate parameters of one GRU direction. The recurrence is bias-free:
//   r = sigmoid(W_r x + U_r h_prev)
//   z = sigmoid(W_z x + U_z h_prev)
//   cand = tanh(W x + U (r o h_prev))
//   h = (1 - z) o h_prev + z o cand
template <typename S>
struct GruParams {
  Mat<S> w_reset, u_reset;    // n x m, n x n
  Mat<S> w_update, u_update;  // n x m, n x n
  Mat<S> w_cand, u_cand;      // n x m, n x n

  static GruParams zeros(int n, int m) {
    GruParams p;
    p.w_reset = Mat<S>::Zero(n, m);
    p.u_reset = Mat<S>::Zero(n, n);
    p.w_update = Mat<S>::Zero(n, m);
    p.u_update = Mat<S>::Zero(n, n);
    p.w_cand = Mat<S>::Zero(n, m);
    p.u_cand = Mat<S>::Zero(n, n);
    return p;
  }
};

template <typename S>
struct EncoderParams {
  Mat<S> char_embed;  // m x V_C, one column per character, shared by both directions
  GruParams<S> fwd, bwd;

  static EncoderParams zeros(int embed, int hidden, int char_vocab) {
    EncoderParams p;
    p.char_embed = Mat<S>::Zero(embed, char_vocab);
    p.fwd = GruParams<S>::zeros(hidden, embed);
    p.bwd = GruParams<S>::zeros(hidden, embed);
    return p;
  }
};

enum class Direction { kForward, kBackward };

template <typename S>
struct GruStepCache {
  Vec<S> input;   // embedded character
  Vec<S> h_prev;
  Vec<S> reset, update, cand;
};

// One recurrence step on an already-embedded input.
template <typename S>
Vec<S> gru_cell(const GruParams<S>& p, const Vec<S>& x, const Vec<S>& h_prev,
                GruStepCache<S>* cache = nullptr) {
  Vec<S> reset = sigmoid_vec<S>(p.w_reset * x + p.u_reset * h_prev);
  Vec<S> update = sigmoid_vec<S>(p.w_update * x + p.u_update * h_prev);
  Vec<S> gated = reset.cwiseProduct(h_prev);
  Vec<S> cand = tanh_vec<S>(p.w_cand * x + p.u_cand * gated);
  Vec<S> h = (Vec<S>::Ones(h_prev.size()) - update).cwiseProduct(h_prev) +
             update.cwiseProduct(cand);
  if (cache) {
    cache->input = x;
    cache->h_prev = h_prev;
    cache->reset = reset;
    cache->update = update;
    cache->cand = cand;
  }
  return h;
}

// Gradient of one step. d_h is the incoming gradient at the step output;
// returns the gradient at h_prev and accumulates into g and d_x.
template <typename S>
Vec<S> gru_cell_backward(const GruParams<S>& p, const GruStepCache<S>& c,
                         const Vec<S>& d_h, GruParams<S>& g, Vec<S>& d_x) {
  const Vec<S>& r = c.reset;
  const Vec<S>& z = c.update;
  const Vec<S>& cand = c.cand;
  const Vec<S> ones = Vec<S>::Ones(z.size());

  Vec<S> d_z = d_h.cwiseProduct(cand - c.h_prev);
  Vec<S> d_cand = d_h.cwiseProduct(z);
  Vec<S> d_h_prev = d_h.cwiseProduct(ones - z);

  Vec<S> d_pre_cand = d_cand.cwiseProduct(ones - cand.cwiseProduct(cand));
  Vec<S> gated = r.cwiseProduct(c.h_prev);
  g.w_cand.noalias() += d_pre_cand * c.input.transpose();
  g.u_cand.noalias() += d_pre_cand * gated.transpose();
  d_x.noalias() += p.w_cand.transpose() * d_pre_cand;
  Vec<S> d_gated = p.u_cand.transpose() * d_pre_cand;

  Vec<S> d_r = d_gated.cwiseProduct(c.h_prev);
  d_h_prev += d_gated.cwiseProduct(r);

  Vec<S> d_pre_r = d_r.cwiseProduct(r.cwiseProduct(ones - r));
  g.w_reset.noalias() += d_pre_r * c.input.transpose();
  g.u_reset.noalias() += d_pre_r * c.h_prev.transpose();
  d_x.noalias() += p.w_reset.transpose() * d_pre_r;
  d_h_prev.noalias() += p.u_reset.transpose() * d_pre_r;

  Vec<S> d_pre_z = d_z.cwiseProduct(z.cwiseProduct(ones - z));
  g.w_update.noalias() += d_pre_z * c.input.transpose();
  g.u_update.noalias() += d_pre_z * c.h_prev.transpose();
  d_x.noalias() += p.w_update.transpose() * d_pre_z;
  d_h_prev.noalias() += p.u_update.transpose() * d_pre_z;

  return d_h_prev;
}

// Index-taking step for one direction, embedding lookup included.
template <typename S>
Vec<S> gru_step(const EncoderParams<S>& enc, Direction dir, int x_index,
                const Vec<S>& h_prev, GruStepCache<S>* cache = nullptr) {
  if (x_index < 0 || x_index >= enc.char_embed.cols())
    throw std::out_of_range("gru_step: character index outside vocabulary");
  Vec<S> x = enc.char_embed.col(x_index);
  const GruParams<S>& p = dir == Direction::kForward ? enc.fwd : enc.bwd;
  return gru_cell(p, x, h_prev, cache);
}

template <typename S>
struct EncodeCache {
  std::vector<GruStepCache<S>> fwd, bwd;  // indexed by sequence position
};

// Bidirectional encoding: forward pass left-to-right, backward pass
// right-to-left, both from zero initial states. Output row t is
// [forward h_t ; backward h_t] (T x 2n).
template <typename S>
Mat<S> encode(const std::vector<int>& chars, const EncoderParams<S>& p,
              EncodeCache<S>* cache = nullptr) {
  if (chars.empty()) throw std::invalid_argument("encode: empty password");
  const auto T = static_cast<Eigen::Index>(chars.size());
  const Eigen::Index n = p.fwd.u_cand.rows();
  Mat<S> states(T, 2 * n);
  if (cache) {
    cache->fwd.resize(chars.size());
    cache->bwd.resize(chars.size());
  }

  Vec<S> h = Vec<S>::Zero(n);
  for (Eigen::Index t = 0; t < T; ++t) {
    h = gru_step(p, Direction::kForward, chars[static_cast<std::size_t>(t)], h,
                 cache ? &cache->fwd[static_cast<std::size_t>(t)] : nullptr);
    states.row(t).head(n) = h.transpose();
  }

  h = Vec<S>::Zero(n);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    h = gru_step(p, Direction::kBackward, chars[static_cast<std::size_t>(t)], h,
                 cache ? &cache->bwd[static_cast<std::size_t>(t)] : nullptr);
    states.row(t).tail(n) = h.transpose();
  }
  return states;
}

// Backpropagation through both directions; d_states matches the encode
// output shape. Accumulates into grads (including the shared embedding).
template <typename S>
void encode_backward(const std::vector<int>& chars, const EncoderParams<S>& p,
                     const EncodeCache<S>& cache, const Mat<S>& d_states,
                     EncoderParams<S>& grads) {
  const auto T = static_cast<Eigen::Index>(chars.size());
  const Eigen::Index n = p.fwd.u_cand.rows();

  Vec<S> d_h = Vec<S>::Zero(n);
  Vec<S> d_x(p.char_embed.rows());
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    d_h += d_states.row(t).head(n).transpose();
    d_x.setZero();
    d_h = gru_cell_backward(p.fwd, cache.fwd[static_cast<std::size_t>(t)], d_h,
                            grads.fwd, d_x);
    grads.char_embed.col(chars[static_cast<std::size_t>(t)]) += d_x;
  }

  d_h.setZero();
  for (Eigen::Index t = 0; t < T; ++t) {
    d_h += d_states.row(t).tail(n).transpose();
    d_x.setZero();
    d_h = gru_cell_backward(p.bwd, cache.bwd[static_cast<std::size_t>(t)], d_h,
                            grads.bwd, d_x);
    grads.char_embed.col(chars[static_cast<std::size_t>(t)]) += d_x;
  }
}

}  // namespace mnemoseq
