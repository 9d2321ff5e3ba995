#pragma once

#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnemoseq/beam.hpp"
#include "mnemoseq/model.hpp"

namespace mnemoseq {

// Attention weights recorded while force-decoding `tokens` against the
// password: one row per password character, one column per token, each
// column a probability distribution over the characters.
template <typename S>
Mat<S> attention_matrix(const std::vector<int>& chars,
                        const std::vector<int>& tokens,
                        const ModelParams<S>& params) {
  if (tokens.empty())
    throw std::invalid_argument("attention_matrix: no tokens");
  DecodeContext<S> ctx = make_decode_context(chars, params);
  Mat<S> grid(static_cast<Eigen::Index>(chars.size()),
              static_cast<Eigen::Index>(tokens.size()));
  Vec<S> state = ctx.s0;
  int prev = kBosId;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    Vec<S> next;
    Vec<S> alpha;
    decode_step_log_probs(ctx, params, state, prev, next, &alpha);
    grid.col(static_cast<Eigen::Index>(t)) = alpha;
    state = next;
    prev = tokens[t];
  }
  return grid;
}

// Plain-text grid for external heat-map plotting: the first line carries the
// TAB-joined tokens; every following line is one password character followed
// by its weight for each token, to six decimals.
template <typename S>
std::string format_attention(const std::vector<std::string>& char_text,
                             const std::vector<std::string>& token_text,
                             const Mat<S>& grid) {
  if (static_cast<Eigen::Index>(char_text.size()) != grid.rows() ||
      static_cast<Eigen::Index>(token_text.size()) != grid.cols())
    throw std::invalid_argument(
        "format_attention: label counts do not match the grid");
  std::ostringstream out;
  for (std::size_t j = 0; j < token_text.size(); ++j) {
    if (j) out << '\t';
    out << token_text[j];
  }
  out << '\n' << std::fixed << std::setprecision(6);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    out << char_text[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
      out << '\t' << static_cast<double>(grid(r, c));
    out << '\n';
  }
  return out.str();
}

}  // namespace mnemoseq
