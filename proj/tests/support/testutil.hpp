#pragma once

#include <string>
#include <vector>

#include "mnemoseq/attention.hpp"
#include "mnemoseq/decoder.hpp"
#include "mnemoseq/encoder.hpp"
#include "mnemoseq/matrix.hpp"
#include "mnemoseq/readout.hpp"
#include "mnemoseq/rng.hpp"

namespace mnemoseq::testutil {

template <typename S>
void fill(GruParams<S>& p, Rng& rng, double lo, double hi) {
  rng.fill_uniform(p.w_reset, lo, hi);
  rng.fill_uniform(p.u_reset, lo, hi);
  rng.fill_uniform(p.w_update, lo, hi);
  rng.fill_uniform(p.u_update, lo, hi);
  rng.fill_uniform(p.w_cand, lo, hi);
  rng.fill_uniform(p.u_cand, lo, hi);
}

template <typename S>
void fill(EncoderParams<S>& p, Rng& rng, double lo, double hi) {
  rng.fill_uniform(p.char_embed, lo, hi);
  fill(p.fwd, rng, lo, hi);
  fill(p.bwd, rng, lo, hi);
}

template <typename S>
void set_all(GruParams<S>& p, S v) {
  p.w_reset.setConstant(v);
  p.u_reset.setConstant(v);
  p.w_update.setConstant(v);
  p.u_update.setConstant(v);
  p.w_cand.setConstant(v);
  p.u_cand.setConstant(v);
}

template <typename S>
void fill(AttentionParams<S>& p, Rng& rng, double lo, double hi) {
  rng.fill_uniform(p.v_align, lo, hi);
  rng.fill_uniform(p.w_state, lo, hi);
  rng.fill_uniform(p.u_memory, lo, hi);
}

template <typename S>
void fill(DecoderParams<S>& p, Rng& rng, double lo, double hi) {
  rng.fill_uniform(p.word_embed, lo, hi);
  rng.fill_uniform(p.w_cand, lo, hi);
  rng.fill_uniform(p.w_update, lo, hi);
  rng.fill_uniform(p.w_reset, lo, hi);
  rng.fill_uniform(p.u_cand, lo, hi);
  rng.fill_uniform(p.u_update, lo, hi);
  rng.fill_uniform(p.u_reset, lo, hi);
  rng.fill_uniform(p.c_cand, lo, hi);
  rng.fill_uniform(p.c_update, lo, hi);
  rng.fill_uniform(p.c_reset, lo, hi);
  rng.fill_uniform(p.w_init, lo, hi);
}

template <typename S>
void fill(ReadoutParams<S>& p, Rng& rng, double lo, double hi) {
  rng.fill_uniform(p.u_state, lo, hi);
  rng.fill_uniform(p.v_embed, lo, hi);
  rng.fill_uniform(p.c_context, lo, hi);
  rng.fill_uniform(p.w_vocab, lo, hi);
}

template <typename S>
Vec<S> random_vec(Rng& rng, int n, double lo, double hi) {
  Vec<S> v(n);
  for (int i = 0; i < n; ++i) v[i] = static_cast<S>(rng.uniform(lo, hi));
  return v;
}

}  // namespace mnemoseq::testutil
