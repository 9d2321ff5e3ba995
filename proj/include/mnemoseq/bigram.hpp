#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnemoseq/corpus.hpp"
#include "mnemoseq/text.hpp"

namespace mnemoseq {

// Fixed log-score for a forced unknown emission. Any real continuation has a
// log-probability above this, so ranked search prefers genuine words whenever
// one exists.
inline constexpr double kUnknownLogScore = -20.0;

// Maximum-likelihood bigram language model over token strings. Counts are
// kept verbatim — no smoothing — so unseen continuations have probability
// exactly zero and surface as dead ends during constrained generation.
class BigramModel {
 public:
  using SuccessorCounts = std::map<std::string, long long>;

  void observe(const std::string& prev, const std::string& next) {
    ++bigrams_[prev][next];
    ++totals_[prev];
    ++unigrams_[prev];
  }
  void finish_sentence(const std::string& last) { ++unigrams_[last]; }

  // P(next | prev): successor count over the predecessor's total.
  double probability(const std::string& prev, const std::string& next) const {
    auto row = bigrams_.find(prev);
    if (row == bigrams_.end()) return 0.0;
    auto hit = row->second.find(next);
    if (hit == row->second.end()) return 0.0;
    return static_cast<double>(hit->second) /
           static_cast<double>(totals_.at(prev));
  }

  const SuccessorCounts& successors(const std::string& prev) const {
    static const SuccessorCounts empty;
    auto row = bigrams_.find(prev);
    return row == bigrams_.end() ? empty : row->second;
  }

  long long predecessor_total(const std::string& prev) const {
    auto hit = totals_.find(prev);
    return hit == totals_.end() ? 0 : hit->second;
  }

  long long unigram_count(const std::string& token) const {
    auto hit = unigrams_.find(token);
    return hit == unigrams_.end() ? 0 : hit->second;
  }

  const std::map<std::string, SuccessorCounts>& bigram_counts() const {
    return bigrams_;
  }
  bool empty() const { return bigrams_.empty(); }

 private:
  std::map<std::string, SuccessorCounts> bigrams_;
  std::map<std::string, long long> totals_;
  std::map<std::string, long long> unigrams_;
};

// Fits the model on sentences that already carry their boundary symbols
// (<s> first, </s> last), exactly as stored in the prepared corpus.
inline BigramModel fit_bigram(
    const std::vector<std::vector<std::string>>& sentences) {
  if (sentences.empty())
    throw std::invalid_argument("fit_bigram: empty corpus");
  BigramModel model;
  for (const auto& s : sentences) {
    if (s.size() < 2 || s.front() != kBos || s.back() != kEos)
      throw std::invalid_argument(
          "fit_bigram: sentences must start with " + std::string(kBos) +
          " and end with " + std::string(kEos));
    for (std::size_t i = 0; i + 1 < s.size(); ++i) model.observe(s[i], s[i + 1]);
    model.finish_sentence(s.back());
  }
  return model;
}

// Constrained beam generation: one output token per password character, each
// a successor of the previous token with positive probability whose first
// character matches the password. When no successor qualifies the hypothesis
// emits <UNK> (scored at kUnknownLogScore) and continues from <UNK>, whose
// empty successor set cascades further unknowns. Hypotheses are ranked by
// summed log-probability; exact ties fall to the lexicographically smaller
// token sequence.
inline std::vector<std::string> generate_constrained(
    const std::string& password, const BigramModel& model, int width = 1) {
  if (width < 1)
    throw std::invalid_argument("generate_constrained: width < 1");
  const std::vector<std::string> chars = utf8_chars(password);

  struct Hyp {
    std::vector<std::string> tokens;
    double score = 0.0;
  };
  std::vector<Hyp> live(1);
  for (const std::string& c : chars) {
    std::vector<Hyp> extended;
    for (const Hyp& h : live) {
      const std::string& prev = h.tokens.empty() ? kBos : h.tokens.back();
      bool found = false;
      for (const auto& [succ, count] : model.successors(prev)) {
        (void)count;
        if (!first_char_matches(succ, c)) continue;
        Hyp next = h;
        next.tokens.push_back(succ);
        next.score += std::log(model.probability(prev, succ));
        extended.push_back(std::move(next));
        found = true;
      }
      if (!found) {
        Hyp next = h;
        next.tokens.push_back(kUnk);
        next.score += kUnknownLogScore;
        extended.push_back(std::move(next));
      }
    }
    std::sort(extended.begin(), extended.end(), [](const Hyp& a, const Hyp& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.tokens < b.tokens;
    });
    if (extended.size() > static_cast<std::size_t>(width))
      extended.resize(static_cast<std::size_t>(width));
    live = std::move(extended);
  }
  return live.front().tokens;
}

// ---------------------------------------------------------------------------
// plain-text persistence: "predecessor TAB successor TAB count", sorted

inline void write_bigram(const BigramModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write bigram model: " + path);
  for (const auto& [prev, row] : model.bigram_counts())
    for (const auto& [next, count] : row)
      out << prev << '\t' << next << '\t' << count << '\n';
}

inline BigramModel read_bigram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read bigram model: " + path);
  BigramModel model;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string prev, next, count_text;
    if (!std::getline(fields, prev, '\t') ||
        !std::getline(fields, next, '\t') ||
        !std::getline(fields, count_text) || prev.empty() || next.empty())
      throw std::runtime_error("malformed bigram line " +
                               std::to_string(line_no) + ": " + line);
    long long count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(count_text, &used);
      if (used != count_text.size()) throw std::invalid_argument(count_text);
    } catch (const std::exception&) {
      throw std::runtime_error("bad count on bigram line " +
                               std::to_string(line_no) + ": " + count_text);
    }
    if (count < 1)
      throw std::runtime_error("bad count on bigram line " +
                               std::to_string(line_no) + ": " + count_text);
    for (long long k = 0; k < count; ++k) {
      model.observe(prev, next);
      // Every token occurrence is either a predecessor occurrence or a
      // sentence-final end symbol; replaying both restores unigram counts.
      if (next == kEos) model.finish_sentence(next);
    }
  }
  return model;
}

}  // namespace mnemoseq
