#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mnemoseq {

inline bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_ascii_letter(char c) { return is_ascii_upper(c) || is_ascii_lower(c); }
inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

inline char ascii_lower(char c) { return is_ascii_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }
inline char ascii_upper(char c) { return is_ascii_lower(c) ? static_cast<char>(c - 'a' + 'A') : c; }

inline std::string lower_ascii(std::string s) {
  for (char& c : s) c = ascii_lower(c);
  return s;
}

// Splits a string into UTF-8 code points. Malformed bytes are kept as
// single-byte units instead of being rejected; corpora in the wild are messy.
inline std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t want = 1;
    if ((b & 0xE0u) == 0xC0u) want = 2;
    else if ((b & 0xF0u) == 0xE0u) want = 3;
    else if ((b & 0xF8u) == 0xF0u) want = 4;
    std::size_t n = 1;
    while (n < want && i + n < s.size() &&
           (static_cast<unsigned char>(s[i + n]) & 0xC0u) == 0x80u)
      ++n;
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

inline std::size_t utf8_length(const std::string& s) { return utf8_chars(s).size(); }

// First code point of a non-empty string.
inline std::string first_char(const std::string& s) {
  std::vector<std::string> cs = utf8_chars(s);
  return cs.empty() ? std::string() : cs.front();
}

}  // namespace mnemoseq
