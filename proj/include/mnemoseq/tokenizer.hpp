#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnemoseq/text.hpp"

namespace mnemoseq {

struct TokenizedSentence {
  std::vector<std::string> tokens;  // surface forms, original casing kept
};

namespace detail {

// Punctuation that detaches from word edges as standalone tokens.
inline bool is_detach_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')': case '*': case '/': case '-':
      return true;
    default:
      return false;
  }
}

// Splits an edge-trimmed piece at hyphens, except intra-word ones (an ASCII
// letter on both sides), which stay attached: "new-delhi" survives, "x-2"
// does not.
inline void split_core(const std::string& core, std::vector<std::string>& out) {
  for (std::size_t i = 0; i < core.size(); ++i) {
    if (core[i] != '-') continue;
    const bool intra_word = i > 0 && i + 1 < core.size() &&
                            is_ascii_letter(core[i - 1]) &&
                            is_ascii_letter(core[i + 1]);
    if (intra_word) continue;
    if (i > 0) split_core(core.substr(0, i), out);
    out.emplace_back("-");
    if (i + 1 < core.size()) split_core(core.substr(i + 1), out);
    return;
  }
  out.push_back(core);
}

// One whitespace-delimited chunk: peel leading and trailing punctuation as
// single-character tokens, keep the interior (internal apostrophes stay:
// "can't" is one token).
inline void split_chunk(const std::string& chunk, std::vector<std::string>& out) {
  std::size_t b = 0, e = chunk.size();
  while (b < e && is_detach_punct(chunk[b])) {
    out.emplace_back(1, chunk[b]);
    ++b;
  }
  std::vector<char> trail;
  while (e > b && is_detach_punct(chunk[e - 1])) {
    trail.push_back(chunk[e - 1]);
    --e;
  }
  if (e > b) split_core(chunk.substr(b, e - b), out);
  for (auto it = trail.rbegin(); it != trail.rend(); ++it) out.emplace_back(1, *it);
}

}  // namespace detail

inline TokenizedSentence tokenize(const std::string& raw) {
  TokenizedSentence sent;
  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
    if (j > i) detail::split_chunk(raw.substr(i, j - i), sent.tokens);
    i = j;
  }
  if (sent.tokens.empty())
    throw std::invalid_argument("tokenize: sentence has no tokens");
  return sent;
}

}  // namespace mnemoseq
