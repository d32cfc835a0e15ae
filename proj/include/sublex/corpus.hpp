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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sublex/errors.hpp"
#include "sublex/unicode.hpp"

namespace sublex {

struct NormalizedSentence {
  std::string text;
  std::size_t token_count_ws = 0;

  friend bool operator==(const NormalizedSentence&, const NormalizedSentence&) = default;
};

struct CorpusOptions {
  bool lowercase = true;
};

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) words.push_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

inline NormalizedSentence normalize(std::string_view text, bool lowercase = true) {
  NormalizedSentence out;
  out.text = unicode::normalize(text, lowercase);
  out.token_count_ws = split_whitespace(out.text).size();
  return out;
}

// Streams normalized sentences from a one-sentence-per-line UTF-8 file.
// Only the current line is held in memory. Blank lines are document
// boundaries and are reported through `at_document_boundary()`.
class CorpusReader {
 public:
  explicit CorpusReader(const std::string& path, CorpusOptions options = {})
      : in_(path, std::ios::binary), options_(options) {
    if (!in_) throw FileNotFound(path);
  }

  // Returns the next non-empty sentence, or nullopt at end of file.
  std::optional<NormalizedSentence> next() {
    std::string line;
    boundary_ = false;
    while (std::getline(in_, line)) {
      ++line_number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!unicode::is_valid_utf8(line)) throw InvalidEncoding(line_number_);
      NormalizedSentence s = normalize(line, options_.lowercase);
      if (s.text.empty()) {
        boundary_ = true;
        continue;
      }
      return s;
    }
    return std::nullopt;
  }

  // True when at least one blank line preceded the sentence last returned.
  bool at_document_boundary() const { return boundary_; }
  std::size_t line_number() const { return line_number_; }

 private:
  std::ifstream in_;
  CorpusOptions options_;
  std::size_t line_number_ = 0;
  bool boundary_ = false;
};

inline std::vector<NormalizedSentence> load_corpus(const std::string& path,
                                                   CorpusOptions options = {}) {
  CorpusReader reader(path, options);
  std::vector<NormalizedSentence> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

// Sentences grouped by document (blank-line separated).
inline std::vector<std::vector<std::string>> load_documents(const std::string& path,
                                                            CorpusOptions options = {}) {
  CorpusReader reader(path, options);
  std::vector<std::vector<std::string>> docs;
  while (auto s = reader.next()) {
    if (docs.empty() || reader.at_document_boundary()) docs.emplace_back();
    docs.back().push_back(std::move(s->text));
  }
  return docs;
}

using WordCounts = std::map<std::string, std::uint64_t, std::less<>>;

inline void add_word_counts(WordCounts& counts, std::string_view sentence) {
  for (std::string_view w : split_whitespace(sentence)) {
    auto it = counts.find(w);
    if (it == counts.end()) {
      counts.emplace(std::string(w), 1);
    } else {
      ++it->second;
    }
  }
}

template <typename Range>
WordCounts word_counts(const Range& sentences) {
  WordCounts counts;
  for (const auto& s : sentences) {
    if constexpr (std::is_convertible_v<decltype(s), std::string_view>) {
      add_word_counts(counts, s);
    } else {
      add_word_counts(counts, s.text);
    }
  }
  return counts;
}

inline WordCounts word_counts_from_file(const std::string& path, CorpusOptions options = {}) {
  CorpusReader reader(path, options);
  WordCounts counts;
  while (auto s = reader.next()) add_word_counts(counts, s->text);
  return counts;
}

// Additive, so shards can be merged in any order.
inline void merge_counts(WordCounts& into, const WordCounts& from) {
  for (const auto& [w, c] : from) into[w] += c;
}

// Descending count, ties broken lexicographically.
inline std::vector<std::pair<std::string, std::uint64_t>> sorted_counts(const WordCounts& counts) {
  std::vector<std::pair<std::string, std::uint64_t>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return rows;
}

inline void write_word_counts(std::ostream& out, const WordCounts& counts) {
  for (const auto& [w, c] : sorted_counts(counts)) out << w << '\t' << c << '\n';
}

}  // namespace sublex
