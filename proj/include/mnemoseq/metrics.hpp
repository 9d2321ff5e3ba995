#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mnemoseq/corpus.hpp"
#include "mnemoseq/text.hpp"

namespace mnemoseq {

struct MnemonicProportion {
  double mp = 0.0;                  // mean per-example value, as a percentage
  std::vector<double> per_example;  // each in [0, 1]
};

// Fraction of password positions whose generated token starts with the
// password character (letters case-insensitive, digits/specials exact; the
// unknown symbol never matches). The denominator is always the password
// length; tokens beyond the shorter of the two sequences cannot score.
inline MnemonicProportion mnemonic_proportion(
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        pairs) {
  if (pairs.empty())
    throw std::invalid_argument("mnemonic_proportion: no examples");
  MnemonicProportion result;
  double total = 0.0;
  for (const auto& [password, tokens] : pairs) {
    const std::vector<std::string> chars = utf8_chars(password);
    if (chars.empty())
      throw std::invalid_argument("mnemonic_proportion: empty password");
    const std::size_t overlap = std::min(chars.size(), tokens.size());
    std::size_t matched = 0;
    for (std::size_t t = 0; t < overlap; ++t)
      if (first_char_matches(tokens[t], chars[t])) ++matched;
    double value =
        static_cast<double>(matched) / static_cast<double>(chars.size());
    result.per_example.push_back(value);
    total += value;
  }
  result.mp = 100.0 * total / static_cast<double>(pairs.size());
  return result;
}

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t order) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() >= order)
    for (std::size_t i = 0; i + order <= tokens.size(); ++i)
      ++counts[{tokens.begin() + static_cast<std::ptrdiff_t>(i),
                tokens.begin() + static_cast<std::ptrdiff_t>(i + order)}];
  return counts;
}

}  // namespace detail

// Corpus-level cumulative BLEU against a single reference per candidate, on a
// 0-100 scale: result[k-1] uses n-gram orders 1..k. Precisions are clipped
// n-gram matches aggregated over the whole corpus; the brevity penalty
// e^{1 - r/c} (capped at 1) uses total candidate length c and total reference
// length r. Any zero precision zeroes that order and all higher ones.
inline std::vector<double> bleu(
    const std::vector<std::vector<std::string>>& candidates,
    const std::vector<std::vector<std::string>>& references,
    std::size_t max_order = 4) {
  if (candidates.size() != references.size())
    throw std::invalid_argument(
        "bleu: candidate and reference counts differ");
  if (candidates.empty()) throw std::invalid_argument("bleu: no examples");
  if (max_order < 1) throw std::invalid_argument("bleu: max_order < 1");

  std::size_t cand_total = 0, ref_total = 0;
  std::vector<std::size_t> clipped(max_order, 0), possible(max_order, 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_total += candidates[i].size();
    ref_total += references[i].size();
    for (std::size_t order = 1; order <= max_order; ++order) {
      auto cand_counts = detail::ngram_counts(candidates[i], order);
      auto ref_counts = detail::ngram_counts(references[i], order);
      for (const auto& [gram, count] : cand_counts) {
        possible[order - 1] += count;
        auto hit = ref_counts.find(gram);
        if (hit != ref_counts.end())
          clipped[order - 1] += std::min(count, hit->second);
      }
    }
  }

  const double brevity =
      (cand_total == 0 || cand_total >= ref_total)
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_total) /
                               static_cast<double>(cand_total));

  std::vector<double> scores(max_order, 0.0);
  double log_sum = 0.0;
  bool dead = cand_total == 0;
  for (std::size_t order = 1; order <= max_order; ++order) {
    if (!dead && (possible[order - 1] == 0 || clipped[order - 1] == 0))
      dead = true;
    if (dead) {
      scores[order - 1] = 0.0;
      continue;
    }
    log_sum += std::log(static_cast<double>(clipped[order - 1]) /
                        static_cast<double>(possible[order - 1]));
    scores[order - 1] =
        100.0 * brevity * std::exp(log_sum / static_cast<double>(order));
  }
  return scores;
}

}  // namespace mnemoseq
