#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnemoseq/attention.hpp"
#include "mnemoseq/decoder.hpp"
#include "mnemoseq/encoder.hpp"
#include "mnemoseq/readout.hpp"
#include "mnemoseq/rng.hpp"

namespace mnemoseq {

struct ModelDims {
  int char_vocab = 0;  // V_C
  int word_vocab = 0;  // V_W
  int embed = 256;     // m
  int hidden = 256;    // n
  int align = 256;     // n'
  int maxout = 256;    // K

  bool operator==(const ModelDims&) const = default;
};

template <typename S>
struct ModelParams {
  ModelDims dims;
  EncoderParams<S> encoder;
  AttentionParams<S> attention;
  DecoderParams<S> decoder;
  ReadoutParams<S> readout;

  static ModelParams zeros(const ModelDims& d) {
    if (d.char_vocab < 1 || d.word_vocab < 1 || d.embed < 1 || d.hidden < 1 ||
        d.align < 1 || d.maxout < 1)
      throw std::invalid_argument("model dims must all be positive");
    ModelParams p;
    p.dims = d;
    p.encoder = EncoderParams<S>::zeros(d.embed, d.hidden, d.char_vocab);
    p.attention = AttentionParams<S>::zeros(d.align, d.hidden);
    p.decoder = DecoderParams<S>::zeros(d.embed, d.hidden, d.word_vocab);
    p.readout = ReadoutParams<S>::zeros(d.embed, d.hidden, d.maxout, d.word_vocab);
    return p;
  }

  void set_zero() {
    for (auto& e : entries(*this)) e.mat->setZero();
  }

  template <typename T>
  ModelParams<T> cast() const {
    ModelParams<T> out = ModelParams<T>::zeros(dims);
    auto src = entries(*this);
    auto dst = entries(out);
    for (std::size_t i = 0; i < src.size(); ++i)
      *dst[i].mat = src[i].mat->template cast<T>();
    return out;
  }
};

template <typename S>
struct ParamRef {
  std::string name;
  Mat<S>* mat;
};

template <typename S>
struct ParamCRef {
  std::string name;
  const Mat<S>* mat;
};

// Canonical parameter registry. Everything that walks the full parameter set
// (initialization, the optimizer, checkpoints, gradient reports) iterates in
// exactly this order.
template <typename S>
std::vector<ParamRef<S>> entries(ModelParams<S>& p) {
  return {
      {"encoder.char_embed", &p.encoder.char_embed},
      {"encoder.fwd.w_reset", &p.encoder.fwd.w_reset},
      {"encoder.fwd.u_reset", &p.encoder.fwd.u_reset},
      {"encoder.fwd.w_update", &p.encoder.fwd.w_update},
      {"encoder.fwd.u_update", &p.encoder.fwd.u_update},
      {"encoder.fwd.w_cand", &p.encoder.fwd.w_cand},
      {"encoder.fwd.u_cand", &p.encoder.fwd.u_cand},
      {"encoder.bwd.w_reset", &p.encoder.bwd.w_reset},
      {"encoder.bwd.u_reset", &p.encoder.bwd.u_reset},
      {"encoder.bwd.w_update", &p.encoder.bwd.w_update},
      {"encoder.bwd.u_update", &p.encoder.bwd.u_update},
      {"encoder.bwd.w_cand", &p.encoder.bwd.w_cand},
      {"encoder.bwd.u_cand", &p.encoder.bwd.u_cand},
      {"attention.v_align", &p.attention.v_align},
      {"attention.w_state", &p.attention.w_state},
      {"attention.u_memory", &p.attention.u_memory},
      {"decoder.word_embed", &p.decoder.word_embed},
      {"decoder.w_cand", &p.decoder.w_cand},
      {"decoder.w_update", &p.decoder.w_update},
      {"decoder.w_reset", &p.decoder.w_reset},
      {"decoder.u_cand", &p.decoder.u_cand},
      {"decoder.u_update", &p.decoder.u_update},
      {"decoder.u_reset", &p.decoder.u_reset},
      {"decoder.c_cand", &p.decoder.c_cand},
      {"decoder.c_update", &p.decoder.c_update},
      {"decoder.c_reset", &p.decoder.c_reset},
      {"decoder.w_init", &p.decoder.w_init},
      {"readout.u_state", &p.readout.u_state},
      {"readout.v_embed", &p.readout.v_embed},
      {"readout.c_context", &p.readout.c_context},
      {"readout.w_vocab", &p.readout.w_vocab},
  };
}

template <typename S>
std::vector<ParamCRef<S>> entries(const ModelParams<S>& p) {
  std::vector<ParamCRef<S>> out;
  for (auto& e : entries(const_cast<ModelParams<S>&>(p)))
    out.push_back({e.name, e.mat});
  return out;
}

inline constexpr int kParamCount = 31;

// Uniform initialization in [-scale, scale], drawn in registry order from one
// seeded stream.
template <typename S>
ModelParams<S> init_params(const ModelDims& d, std::uint64_t seed,
                           double scale = 0.08) {
  ModelParams<S> p = ModelParams<S>::zeros(d);
  Rng rng(seed);
  for (auto& e : entries(p)) rng.fill_uniform(*e.mat, -scale, scale);
  return p;
}

template <typename S>
bool params_finite(const ModelParams<S>& p) {
  for (auto& e : entries(p))
    if (!e.mat->allFinite()) return false;
  return true;
}

}  // namespace mnemoseq
