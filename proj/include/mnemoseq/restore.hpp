#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mnemoseq/text.hpp"

namespace mnemoseq {

// Copies the password's capitalization onto the sentence, position by
// position: where the password has an uppercase ASCII letter and the aligned
// token starts with the same letter (compared case-insensitively), the
// token's first letter is uppercased. Everything else — mismatching tokens,
// later characters, positions past the shorter sequence — is left untouched,
// so the operation is idempotent and never fabricates a match.
inline std::vector<std::string> apply_case(const std::vector<std::string>& tokens,
                                           const std::string& password) {
  std::vector<std::string> out = tokens;
  const std::vector<std::string> chars = utf8_chars(password);
  const std::size_t n = std::min(out.size(), chars.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (chars[i].size() != 1 || !is_ascii_upper(chars[i][0])) continue;
    if (out[i].empty()) continue;
    char& first = out[i][0];
    if (is_ascii_letter(first) && ascii_upper(first) == chars[i][0])
      first = chars[i][0];
  }
  return out;
}

// Joins tokens for display. Rule: tokens are separated by single spaces,
// except that . , ! ? ; : and closing brackets/quotes attach to the previous
// token, and opening brackets/quotes attach to the next. A straight quote
// character (" or ') alternates within one sentence: its odd occurrences
// open, its even occurrences close.
inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool suppress_space = true;  // nothing precedes the first token
  int double_quotes = 0;
  int single_quotes = 0;
  for (const std::string& t : tokens) {
    bool attach_left = false;
    bool attach_right = false;
    if (t.size() == 1) {
      switch (t[0]) {
        case '.': case ',': case '!': case '?': case ';': case ':':
        case ')':
          attach_left = true;
          break;
        case '(':
          attach_right = true;
          break;
        case '"':
          attach_left = (double_quotes % 2 == 1);
          attach_right = !attach_left;
          ++double_quotes;
          break;
        case '\'':
          attach_left = (single_quotes % 2 == 1);
          attach_right = !attach_left;
          ++single_quotes;
          break;
        default:
          break;
      }
    }
    if (!suppress_space && !attach_left) out += ' ';
    out += t;
    suppress_space = attach_right;
  }
  return out;
}

// Full display restoration: re-capitalize from the password, then join.
inline std::string restore_case(const std::string& password,
                                const std::vector<std::string>& tokens) {
  return detokenize(apply_case(tokens, password));
}

}  // namespace mnemoseq
