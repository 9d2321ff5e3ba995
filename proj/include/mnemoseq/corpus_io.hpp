#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnemoseq/corpus.hpp"

namespace mnemoseq {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Pairs file: one "cased-password TAB space-joined lowercase tokens" per line.
inline void write_pairs(const std::string& path, const std::vector<RawPair>& pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) {
    std::string l = p.password;
    l += '\t';
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      if (i) l += ' ';
      l += p.tokens[i];
    }
    lines.push_back(std::move(l));
  }
  write_lines(path, lines);
}

inline std::vector<RawPair> read_pairs(const std::string& path) {
  std::vector<RawPair> pairs;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": malformed pair line");
    RawPair p;
    p.password = line.substr(0, tab);
    std::istringstream rest(line.substr(tab + 1));
    std::string tok;
    while (rest >> tok) p.tokens.push_back(tok);
    if (p.tokens.empty())
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": pair has no tokens");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// Vocab file: one entry per line, index = line number, reserved entries first.
inline void write_vocab(const std::string& path, const Vocab& v) {
  write_lines(path, v.items);
}

inline Vocab read_vocab(const std::string& path) {
  Vocab v;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty())
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": empty vocab entry");
    if (v.lookup(lines[i]) >= 0)
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": duplicate vocab entry " + lines[i]);
    v.add(lines[i]);
  }
  return v;
}

// Dictionary for the optional non-English sentence filter: one lowercase word
// per line. A sentence passes when every token containing an ASCII letter is
// present.
inline std::set<std::string> read_dictionary(const std::string& path) {
  std::set<std::string> words;
  for (const auto& l : read_lines(path))
    if (!l.empty()) words.insert(lower_ascii(l));
  return words;
}

inline bool sentence_in_dictionary(const std::vector<std::string>& tokens,
                                   const std::set<std::string>& dict) {
  for (const auto& t : tokens) {
    bool has_letter = false;
    for (char c : t) has_letter = has_letter || is_ascii_letter(c);
    if (has_letter && dict.find(lower_ascii(t)) == dict.end()) return false;
  }
  return true;
}

}  // namespace mnemoseq
