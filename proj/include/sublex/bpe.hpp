// Copyright 2026 The Sublex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sublex/corpus.hpp"
#include "sublex/errors.hpp"
#include "sublex/unicode.hpp"
#include "sublex/vocabulary.hpp"

namespace sublex {

using SymbolPair = std::pair<std::string, std::string>;

class MergeTable {
 public:
  MergeTable() = default;
  explicit MergeTable(std::vector<SymbolPair> merges) : merges_(std::move(merges)) {
    std::set<SymbolPair> seen;
    for (const auto& m : merges_) {
      if (!seen.insert(m).second) {
        throw InvalidConfig("duplicate merge '" + m.first + " " + m.second + "'");
      }
    }
  }

  const std::vector<SymbolPair>& merges() const { return merges_; }
  std::size_t size() const { return merges_.size(); }
  bool empty() const { return merges_.empty(); }

  void write(std::ostream& out) const {
    for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
  }
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write(out);
  }
  static MergeTable load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path);
    std::vector<SymbolPair> merges;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto sp = line.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 == line.size()) {
        throw InvalidConfig("malformed merge at line " + std::to_string(n));
      }
      merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    return MergeTable(std::move(merges));
  }

  friend bool operator==(const MergeTable&, const MergeTable&) = default;

 private:
  std::vector<SymbolPair> merges_;
};

// Applies the merges to one word in table order.
inline std::vector<std::string> apply_merges(const MergeTable& table, std::string_view word) {
  std::vector<std::string> symbols;
  for (auto cp : unicode::code_points(word)) symbols.emplace_back(cp);
  for (const auto& [left, right] : table.merges()) {
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
        next.push_back(left + right);
        ++i;
      } else {
        next.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(next);
  }
  return symbols;
}

struct BpeResult {
  Vocabulary vocab;
  MergeTable merges;
};

namespace detail {

inline std::string positional_form(const std::string& symbol, bool word_initial) {
  return word_initial ? symbol : std::string(kContinuationPrefix) + symbol;
}

}  // namespace detail

// Byte-pair-encoding induction over code points. Each step merges the most
// frequent adjacent pair, ties going to the lexicographically smallest
// (left, right). A symbol enters the vocabulary in the positional form(s) it
// occurs in: plain when word-initial, `##`-prefixed when word-internal.
// Training stops when no pair remains or the next merge would push the
// vocabulary past `target_size`.
inline BpeResult train_bpe(const WordCounts& counts, std::size_t target_size) {
  struct Word {
    std::vector<std::string> symbols;
    std::uint64_t count;
  };
  std::vector<Word> words;
  std::set<std::string> initial_chars;
  std::set<std::string> internal_chars;
  for (const auto& [w, c] : counts) {
    if (c == 0 || w.empty()) continue;
    Word word{{}, c};
    for (auto cp : unicode::code_points(w)) word.symbols.emplace_back(cp);
    initial_chars.insert(word.symbols.front());
    for (std::size_t i = 1; i < word.symbols.size(); ++i) internal_chars.insert(word.symbols[i]);
    words.push_back(std::move(word));
  }

  std::vector<std::string> tokens;
  std::set<std::string> present;
  for (const auto& s : initial_chars) tokens.push_back(s);
  for (const auto& s : internal_chars) tokens.push_back(detail::positional_form(s, false));
  present.insert(tokens.begin(), tokens.end());

  const std::size_t required = kSpecialTokens.size() + tokens.size();
  if (target_size < required) throw TargetTooSmall(target_size, required);

  std::vector<SymbolPair> merges;
  for (;;) {
    // Pair statistics, split by whether the pair starts the word.
    struct PairStat {
      std::uint64_t count = 0;
      bool initial = false;
      bool internal = false;
    };
    std::map<SymbolPair, PairStat> stats;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        auto& st = stats[{w.symbols[i], w.symbols[i + 1]}];
        st.count += w.count;
        (i == 0 ? st.initial : st.internal) = true;
      }
    }
    if (stats.empty()) break;

    auto best = stats.begin();
    for (auto it = stats.begin(); it != stats.end(); ++it) {
      if (it->second.count > best->second.count) best = it;
    }
    const SymbolPair pair = best->first;
    const std::string merged = pair.first + pair.second;

    std::vector<std::string> new_forms;
    if (best->second.initial && !present.count(merged)) new_forms.push_back(merged);
    const std::string internal_form = detail::positional_form(merged, false);
    if (best->second.internal && !present.count(internal_form)) new_forms.push_back(internal_form);
    if (kSpecialTokens.size() + tokens.size() + new_forms.size() > target_size) break;

    for (auto& f : new_forms) {
      present.insert(f);
      tokens.push_back(std::move(f));
    }
    merges.push_back(pair);

    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == pair.first &&
            w.symbols[i + 1] == pair.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(next);
    }
  }

  return {Vocabulary::with_specials(tokens), MergeTable(std::move(merges))};
}

}  // namespace sublex
