#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mnemoseq/matrix.hpp"
#include "mnemoseq/rng.hpp"
#include "mnemoseq/text.hpp"
#include "mnemoseq/tokenizer.hpp"

namespace mnemoseq {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<UNK>";
inline constexpr int kBosId = 0;
inline constexpr int kEosId = 1;
inline constexpr int kUnkId = 2;

// Index assigned to characters absent from the char vocabulary (can happen
// for held-out passwords); such sequences cannot be fed to the encoder.
inline constexpr int kUnknownChar = -1;

// ---------------------------------------------------------------------------
// pair derivation

enum class DeriveRule { kFirstLetter };  // extension point; one rule today

// Password = concatenation of each token's first character: letters keep
// their case, a number contributes its first digit, single-character
// punctuation contributes itself.
inline std::string derive_password(const std::vector<std::string>& tokens,
                                   DeriveRule rule = DeriveRule::kFirstLetter) {
  if (rule != DeriveRule::kFirstLetter)
    throw std::invalid_argument("derive_password: unknown rule");
  std::string pw;
  for (const auto& t : tokens) pw += first_char(t);
  return pw;
}

// True when a token counts as matching a password character: its first
// character must agree — case-insensitively for ASCII letters, exactly for
// digits and specials — and boundary/unknown symbols never match anything.
inline bool first_char_matches(const std::string& token,
                               const std::string& password_char) {
  if (token == kBos || token == kEos || token == kUnk) return false;
  std::string head = first_char(token);
  if (password_char.size() == 1 && head.size() == 1 &&
      is_ascii_letter(password_char[0]) && is_ascii_letter(head[0]))
    return ascii_lower(head[0]) == ascii_lower(password_char[0]);
  return head == password_char;
}

// Lowercases every token and brackets the sequence with <s> ... </s>.
inline std::vector<std::string> preprocess_target(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size() + 2);
  out.emplace_back(kBos);
  for (const auto& t : tokens) out.push_back(lower_ascii(t));
  out.emplace_back(kEos);
  return out;
}

inline bool filter_pair(const std::string& password, std::size_t min_len = 8,
                        std::size_t max_len = 16) {
  if (min_len > max_len)
    throw std::invalid_argument("filter_pair: min_len exceeds max_len");
  const std::size_t n = utf8_length(password);
  return n >= min_len && n <= max_len;
}

// ---------------------------------------------------------------------------
// vocabularies

struct Vocab {
  std::vector<std::string> items;
  std::unordered_map<std::string, int> index;

  int add(const std::string& s) {
    auto it = index.find(s);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(items.size());
    items.push_back(s);
    index.emplace(s, id);
    return id;
  }
  int lookup(const std::string& s) const {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
  }
  int size() const { return static_cast<int>(items.size()); }
};

struct VocabPair {
  Vocab chars;  // case-folded password characters
  Vocab words;  // reserved symbols first, then training tokens
};

// Surface-form pair as stored in pairs files: cased password + lowercased
// content tokens (no boundary symbols).
struct RawPair {
  std::string password;
  std::vector<std::string> tokens;
};

inline RawPair make_raw_pair(const TokenizedSentence& sent) {
  RawPair p;
  p.password = derive_password(sent.tokens);
  std::vector<std::string> bracketed = preprocess_target(sent.tokens);
  p.tokens.assign(bracketed.begin() + 1, bracketed.end() - 1);
  return p;
}

// Character vocab: every character of every training password, case-folded,
// in lexicographic order. Word vocab: reserved symbols then every distinct
// training token in lexicographic order. Training partition only.
inline VocabPair build_vocabularies(const std::vector<RawPair>& training) {
  if (training.empty())
    throw std::invalid_argument("build_vocabularies: empty training set");
  std::set<std::string> chars;
  std::set<std::string> words;
  for (const auto& p : training) {
    for (const auto& c : utf8_chars(p.password)) chars.insert(lower_ascii(c));
    for (const auto& t : p.tokens) words.insert(t);
  }
  VocabPair v;
  for (const auto& c : chars) v.chars.add(c);
  v.words.add(kBos);
  v.words.add(kEos);
  v.words.add(kUnk);
  for (const auto& w : words) v.words.add(w);
  return v;
}

// ---------------------------------------------------------------------------
// encoded examples

struct PairExample {
  std::string cased_password;
  std::vector<int> password_chars;  // char-vocab ids; kUnknownChar if unseen
  std::vector<int> target_tokens;   // word-vocab ids, bracketed <s> ... </s>
};

inline PairExample encode_pair(const RawPair& p, const VocabPair& v) {
  PairExample ex;
  ex.cased_password = p.password;
  for (const auto& c : utf8_chars(p.password))
    ex.password_chars.push_back(v.chars.lookup(lower_ascii(c)));
  ex.target_tokens.push_back(kBosId);
  for (const auto& t : p.tokens) {
    const int id = v.words.lookup(t);
    ex.target_tokens.push_back(id < 0 ? kUnkId : id);
  }
  ex.target_tokens.push_back(kEosId);
  return ex;
}

inline bool has_unknown_chars(const PairExample& ex) {
  for (int c : ex.password_chars)
    if (c == kUnknownChar) return true;
  return false;
}

inline std::vector<std::string> decode_tokens(const std::vector<int>& ids,
                                              const Vocab& words) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= words.size())
      throw std::out_of_range("decode_tokens: id outside vocabulary");
    out.push_back(words.items[static_cast<std::size_t>(id)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// splits

struct SplitCounts {
  std::size_t train = 0, validation = 0, test = 0;
};

// train_fraction carves the initial train block; validation_fraction is the
// share of that block held out, rounded so the kept part is the floor.
inline SplitCounts split_counts(std::size_t n, double train_fraction,
                                double validation_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("make_split: train fraction outside (0,1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("make_split: validation fraction outside (0,1)");
  SplitCounts c;
  const auto initial = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction));
  c.train = static_cast<std::size_t>(
      std::floor(static_cast<double>(initial) * (1.0 - validation_fraction)));
  c.validation = initial - c.train;
  c.test = n - initial;
  return c;
}

struct RawSplit {
  std::vector<RawPair> train, validation, test;
  std::uint64_t seed = 0;
};

inline RawSplit make_split(const std::vector<RawPair>& pairs, std::uint64_t seed,
                           double train_fraction, double validation_fraction) {
  const SplitCounts c = split_counts(pairs.size(), train_fraction, validation_fraction);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  RawSplit s;
  s.seed = seed;
  s.train.reserve(c.train);
  s.validation.reserve(c.validation);
  s.test.reserve(c.test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const RawPair& p = pairs[order[i]];
    if (i < c.train) s.train.push_back(p);
    else if (i < c.train + c.validation) s.validation.push_back(p);
    else s.test.push_back(p);
  }
  return s;
}

struct DatasetSplit {
  std::vector<PairExample> train, validation, test;
  std::uint64_t seed = 0;
};

inline DatasetSplit encode_split(const RawSplit& s, const VocabPair& v) {
  DatasetSplit d;
  d.seed = s.seed;
  for (const auto& p : s.train) d.train.push_back(encode_pair(p, v));
  for (const auto& p : s.validation) d.validation.push_back(encode_pair(p, v));
  for (const auto& p : s.test) d.test.push_back(encode_pair(p, v));
  return d;
}

// ---------------------------------------------------------------------------
// batching

using MatI = Mat<int>;

struct PadPolicy {
  int char_pad = 0;
  int word_pad = 0;  // conventionally the out-of-vocab sentinel V_W
};

struct Batch {
  MatI password, password_mask;  // rows = examples
  MatI target, target_mask;      // bracketed targets
  std::vector<int> example_index;

  int size() const { return static_cast<int>(password.rows()); }
};

// Groups examples `order[0..]` into consecutive batches, padding to per-batch
// maxima; masks hold 1 at real positions and 0 at padding.
inline std::vector<Batch> make_batches(const std::vector<PairExample>& examples,
                                       const std::vector<int>& order,
                                       int batch_size, PadPolicy pad) {
  if (batch_size < 1)
    throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    const int rows = static_cast<int>(stop - start);
    int max_t = 0, max_u = 0;
    for (std::size_t i = start; i < stop; ++i) {
      const auto& ex = examples[static_cast<std::size_t>(order[i])];
      max_t = std::max(max_t, static_cast<int>(ex.password_chars.size()));
      max_u = std::max(max_u, static_cast<int>(ex.target_tokens.size()));
    }
    Batch b;
    b.password = MatI::Constant(rows, max_t, pad.char_pad);
    b.password_mask = MatI::Zero(rows, max_t);
    b.target = MatI::Constant(rows, max_u, pad.word_pad);
    b.target_mask = MatI::Zero(rows, max_u);
    for (int r = 0; r < rows; ++r) {
      const int idx = order[start + static_cast<std::size_t>(r)];
      const auto& ex = examples[static_cast<std::size_t>(idx)];
      b.example_index.push_back(idx);
      for (std::size_t t = 0; t < ex.password_chars.size(); ++t) {
        b.password(r, static_cast<Eigen::Index>(t)) = ex.password_chars[t];
        b.password_mask(r, static_cast<Eigen::Index>(t)) = 1;
      }
      for (std::size_t u = 0; u < ex.target_tokens.size(); ++u) {
        b.target(r, static_cast<Eigen::Index>(u)) = ex.target_tokens[u];
        b.target_mask(r, static_cast<Eigen::Index>(u)) = 1;
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<Batch> make_batches(const std::vector<PairExample>& examples,
                                       int batch_size, PadPolicy pad) {
  std::vector<int> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  return make_batches(examples, order, batch_size, pad);
}

}  // namespace mnemoseq
