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
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "sublex/tokenizer.hpp"
#include "sublex/vocabulary.hpp"

namespace sublex {

struct VocabDiffReport {
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::size_t intersection = 0;
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  double jaccard = 0.0;
  std::vector<std::string> sample_only_a;
  std::vector<std::string> sample_only_b;
};

struct SegmentationContrast {
  std::string word;
  std::vector<std::string> pieces_a;
  std::vector<std::string> pieces_b;
  std::size_t count_a = 0;
  std::size_t count_b = 0;

  bool differs() const { return count_a != count_b; }
};

struct Membership {
  std::string token;
  bool in_a = false;
  bool in_b = false;
};

namespace detail {

inline std::set<std::string> non_special_tokens(const Vocabulary& v) {
  std::set<std::string> out;
  for (const auto& t : v.tokens()) {
    if (!is_special_token(t)) out.insert(t);
  }
  return out;
}

}  // namespace detail

// Set comparison with the special tokens left out. Samples are the
// lexicographically first `sample_limit` exclusive tokens of each side.
inline VocabDiffReport diff(const Vocabulary& a, const Vocabulary& b, std::size_t sample_limit = 20) {
  const auto sa = detail::non_special_tokens(a);
  const auto sb = detail::non_special_tokens(b);
  VocabDiffReport r;
  r.size_a = sa.size();
  r.size_b = sb.size();
  for (const auto& t : sa) {
    if (sb.count(t)) {
      ++r.intersection;
    } else {
      ++r.only_a;
      if (r.sample_only_a.size() < sample_limit) r.sample_only_a.push_back(t);
    }
  }
  for (const auto& t : sb) {
    if (!sa.count(t)) {
      ++r.only_b;
      if (r.sample_only_b.size() < sample_limit) r.sample_only_b.push_back(t);
    }
  }
  const std::size_t uni = r.size_a + r.size_b - r.intersection;
  r.jaccard = uni == 0 ? 1.0 : static_cast<double>(r.intersection) / static_cast<double>(uni);
  return r;
}

inline std::vector<SegmentationContrast> contrast(const Vocabulary& a, const Vocabulary& b,
                                                  const std::vector<std::string>& words) {
  std::vector<SegmentationContrast> rows;
  rows.reserve(words.size());
  for (const auto& w : words) {
    SegmentationContrast row;
    row.word = w;
    row.pieces_a = wordpiece_segment(a, w).pieces;
    row.pieces_b = wordpiece_segment(b, w).pieces;
    row.count_a = row.pieces_a.size();
    row.count_b = row.pieces_b.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<Membership> membership_table(const Vocabulary& a, const Vocabulary& b,
                                                const std::vector<std::string>& tokens) {
  std::vector<Membership> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back({t, a.contains(t), b.contains(t)});
  return rows;
}

namespace detail {

inline std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

inline std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

}  // namespace detail

// key<TAB>value lines, then one row per contrasted word:
// word<TAB>pieces_a<TAB>pieces_b<TAB>count_a<TAB>count_b
inline void write_structured(std::ostream& out, const VocabDiffReport& r,
                             const std::vector<SegmentationContrast>& rows = {}) {
  out << "size_a\t" << r.size_a << '\n'
      << "size_b\t" << r.size_b << '\n'
      << "intersection\t" << r.intersection << '\n'
      << "only_a\t" << r.only_a << '\n'
      << "only_b\t" << r.only_b << '\n'
      << "jaccard\t" << detail::fixed(r.jaccard, 6) << '\n'
      << "sample_only_a\t" << detail::join(r.sample_only_a, ' ') << '\n'
      << "sample_only_b\t" << detail::join(r.sample_only_b, ' ') << '\n';
  for (const auto& c : rows) {
    out << c.word << '\t' << detail::join(c.pieces_a, ' ') << '\t' << detail::join(c.pieces_b, ' ')
        << '\t' << c.count_a << '\t' << c.count_b << '\n';
  }
}

inline void write_table(std::ostream& out, const VocabDiffReport& r,
                        const std::vector<SegmentationContrast>& rows = {}) {
  out << "                 A        B\n";
  out << "tokens    " << std::setw(8) << r.size_a << ' ' << std::setw(8) << r.size_b << '\n';
  out << "exclusive " << std::setw(8) << r.only_a << ' ' << std::setw(8) << r.only_b << '\n';
  out << "shared    " << std::setw(8) << r.intersection << '\n';
  out << "jaccard   " << std::setw(8) << detail::fixed(r.jaccard, 4) << '\n';
  if (rows.empty()) return;
  out << '\n';
  for (const auto& c : rows) {
    out << (c.differs() ? "* " : "  ") << c.word << ": " << detail::join(c.pieces_a, '-') << " ("
        << c.count_a << ") | " << detail::join(c.pieces_b, '-') << " (" << c.count_b << ")\n";
  }
}

}  // namespace sublex
