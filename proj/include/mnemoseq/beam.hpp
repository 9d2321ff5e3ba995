#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnemoseq/attention.hpp"
#include "mnemoseq/corpus.hpp"
#include "mnemoseq/decoder.hpp"
#include "mnemoseq/encoder.hpp"
#include "mnemoseq/model.hpp"
#include "mnemoseq/readout.hpp"

namespace mnemoseq {

struct BeamConfig {
  int width = 1;
  int max_steps = 0;   // <1: password length plus two boundary slots
  int candidates = 1;  // ranked results to return
};

struct DecodeResult {
  std::vector<int> tokens;  // generated tokens, boundary symbols stripped
  double log_prob = 0.0;    // exact sum of per-step log-probabilities
  bool completed = false;   // ended by generating the end symbol
};

// Partial sentence during search: its token sequence (beginning with the
// start symbol), cumulative log-probability, and the decoder state that
// produced its last token. Completed hypotheses are never extended.
template <typename S>
struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;
  Vec<S> state;
  bool completed = false;
};

// Per-password state shared by every decode step: encoder rows, their
// attention projection (computed once), and the initial decoder state.
template <typename S>
struct DecodeContext {
  Mat<S> states;
  Mat<S> memory_proj;
  Vec<S> s0;
};

template <typename S>
DecodeContext<S> make_decode_context(const std::vector<int>& chars,
                                     const ModelParams<S>& params) {
  for (std::size_t i = 0; i < chars.size(); ++i)
    if (chars[i] < 0 || chars[i] >= params.dims.char_vocab)
      throw std::invalid_argument("unknown password character at position " +
                                  std::to_string(i));
  DecodeContext<S> ctx;
  ctx.states = encode(chars, params.encoder);
  ctx.memory_proj = ctx.states * params.attention.u_memory.transpose();
  ctx.s0 = init_state(ctx.states, params.decoder.w_init);
  return ctx;
}

// One inference step: attention from the previous state, the recurrent
// update, then log-probabilities over the vocabulary. Optionally reports the
// attention weights the step used.
template <typename S>
Vec<S> decode_step_log_probs(const DecodeContext<S>& ctx,
                             const ModelParams<S>& params,
                             const Vec<S>& state_prev, int y_prev,
                             Vec<S>& state_out, Vec<S>* alpha = nullptr) {
  AttentionCache<S> attn;
  attend(state_prev, ctx.states, ctx.memory_proj, params.attention, attn);
  state_out = decoder_step(state_prev, y_prev, attn.context, params.decoder);
  Vec<S> prev_embed = params.decoder.word_embed.col(y_prev);
  if (alpha) *alpha = attn.alpha;
  return readout_log_probs(state_out, prev_embed, attn.context,
                           params.readout);
}

namespace detail {

template <typename S>
DecodeResult strip_boundaries(const Hypothesis<S>& h) {
  DecodeResult r;
  r.log_prob = h.log_prob;
  r.completed = h.completed;
  r.tokens.assign(h.tokens.begin() + 1,
                  h.tokens.end() - (h.completed ? 1 : 0));
  return r;
}

inline bool result_ranked_before(const DecodeResult& a, const DecodeResult& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(),
                                      b.tokens.begin(), b.tokens.end());
}

}  // namespace detail

// Left-to-right beam search. Each step extends every live hypothesis by every
// vocabulary word except the unknown symbol, keeps the `width` best by
// cumulative log-probability (ties to the lexicographically smaller token
// sequence), and retires hypotheses that emit the end symbol into the
// completed set. Search stops once `width` sentences have completed or
// `max_steps` steps have run; completed sentences are returned ranked, with
// the best partial hypothesis as a fallback when nothing completed in time.
// No length normalization is applied.
template <typename S>
std::vector<DecodeResult> beam_search(const std::vector<int>& chars,
                                      const ModelParams<S>& params,
                                      const BeamConfig& config) {
  if (config.width < 1) throw std::invalid_argument("beam_search: width < 1");
  if (config.candidates < 1)
    throw std::invalid_argument("beam_search: candidates < 1");
  const int max_steps = config.max_steps >= 1
                            ? config.max_steps
                            : static_cast<int>(chars.size()) + 2;
  DecodeContext<S> ctx = make_decode_context(chars, params);

  std::vector<Hypothesis<S>> live(1);
  live[0].tokens = {kBosId};
  live[0].state = ctx.s0;
  std::vector<Hypothesis<S>> completed;

  struct Cand {
    int parent;
    int token;
    double score;
  };

  for (int step = 0; step < max_steps && !live.empty() &&
                     static_cast<int>(completed.size()) < config.width;
       ++step) {
    std::vector<Vec<S>> next_state(live.size());
    std::vector<Vec<S>> step_lp(live.size());
    for (std::size_t h = 0; h < live.size(); ++h)
      step_lp[h] = decode_step_log_probs(ctx, params, live[h].state,
                                         live[h].tokens.back(), next_state[h]);

    std::vector<Cand> cands;
    cands.reserve(live.size() *
                  static_cast<std::size_t>(params.dims.word_vocab));
    for (std::size_t h = 0; h < live.size(); ++h)
      for (int w = 0; w < params.dims.word_vocab; ++w) {
        if (w == kUnkId) continue;
        cands.push_back({static_cast<int>(h), w,
                         live[h].log_prob +
                             static_cast<double>(step_lp[h][w])});
      }

    // All live sequences have equal length, so ties compare position by
    // position and then the freshly added token.
    auto ranked_before = [&](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      const auto& sa = live[static_cast<std::size_t>(a.parent)].tokens;
      const auto& sb = live[static_cast<std::size_t>(b.parent)].tokens;
      for (std::size_t i = 0; i < sa.size(); ++i)
        if (sa[i] != sb[i]) return sa[i] < sb[i];
      return a.token < b.token;
    };
    const std::size_t keep =
        std::min(cands.size(), static_cast<std::size_t>(config.width));
    std::partial_sort(cands.begin(),
                      cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), ranked_before);
    cands.resize(keep);

    std::vector<Hypothesis<S>> next_live;
    for (const Cand& c : cands) {
      Hypothesis<S> h;
      h.tokens = live[static_cast<std::size_t>(c.parent)].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.score;
      if (c.token == kEosId) {
        h.completed = true;
        completed.push_back(std::move(h));
      } else {
        h.state = next_state[static_cast<std::size_t>(c.parent)];
        next_live.push_back(std::move(h));
      }
    }
    live = std::move(next_live);
  }

  std::vector<DecodeResult> results;
  if (!completed.empty()) {
    for (const auto& h : completed)
      results.push_back(detail::strip_boundaries(h));
    std::sort(results.begin(), results.end(), detail::result_ranked_before);
    if (results.size() > static_cast<std::size_t>(config.candidates))
      results.resize(static_cast<std::size_t>(config.candidates));
  } else {
    // Nothing reached the end symbol within max_steps: fall back to the best
    // live prefix so callers always receive a sentence.
    std::vector<DecodeResult> partials;
    for (const auto& h : live)
      partials.push_back(detail::strip_boundaries(h));
    std::sort(partials.begin(), partials.end(), detail::result_ranked_before);
    results.push_back(partials.front());
  }
  return results;
}

// Independent argmax decoder used to cross-check width-one beam search. Ties
// go to the smallest token id; the unknown symbol is never produced.
template <typename S>
DecodeResult greedy_decode(const std::vector<int>& chars,
                           const ModelParams<S>& params, int max_steps = 0) {
  if (max_steps < 1) max_steps = static_cast<int>(chars.size()) + 2;
  DecodeContext<S> ctx = make_decode_context(chars, params);
  DecodeResult out;
  Vec<S> state = ctx.s0;
  int prev = kBosId;
  for (int step = 0; step < max_steps; ++step) {
    Vec<S> next;
    Vec<S> lp = decode_step_log_probs(ctx, params, state, prev, next);
    int best = -1;
    for (int w = 0; w < lp.size(); ++w) {
      if (w == kUnkId) continue;
      if (best < 0 || lp[w] > lp[best]) best = w;
    }
    out.log_prob += static_cast<double>(lp[best]);
    state = next;
    prev = best;
    if (best == kEosId) {
      out.completed = true;
      break;
    }
    out.tokens.push_back(best);
  }
  return out;
}

}  // namespace mnemoseq
