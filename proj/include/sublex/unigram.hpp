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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sublex/corpus.hpp"
#include "sublex/errors.hpp"
#include "sublex/unicode.hpp"
#include "sublex/vocabulary.hpp"

namespace sublex {

struct Piece {
  std::string token;
  double log_prob = 0.0;

  friend bool operator==(const Piece&, const Piece&) = default;
};

// Token -> log-probability table. Probabilities sum to one.
class UnigramModel {
 public:
  UnigramModel() = default;
  explicit UnigramModel(std::vector<Piece> pieces) : pieces_(std::move(pieces)) { reindex(); }

  // Builds a normalized model from non-negative weights.
  static UnigramModel from_weights(const std::vector<std::pair<std::string, double>>& weights) {
    double total = 0.0;
    for (const auto& [t, w] : weights) total += w;
    std::vector<Piece> pieces;
    pieces.reserve(weights.size());
    for (const auto& [t, w] : weights) pieces.push_back({t, std::log(w / total)});
    return UnigramModel(std::move(pieces));
  }

  std::size_t size() const { return pieces_.size(); }
  bool empty() const { return pieces_.empty(); }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const Piece& piece(std::size_t i) const { return pieces_.at(i); }
  std::size_t max_piece_length() const { return max_len_; }

  // Index of `token`, or -1.
  int find(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
  }
  bool contains(std::string_view token) const { return find(token) >= 0; }

  double total_probability() const {
    double s = 0.0;
    for (const auto& p : pieces_) s += std::exp(p.log_prob);
    return s;
  }

  // Pieces by descending log-probability, ties lexicographic.
  std::vector<Piece> sorted_pieces() const {
    std::vector<Piece> out = pieces_;
    std::sort(out.begin(), out.end(), [](const Piece& a, const Piece& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return a.token < b.token;
    });
    return out;
  }

  void write(std::ostream& out) const {
    char buf[64];
    for (const auto& p : sorted_pieces()) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.log_prob);
      out << p.token << '\t' << buf << '\n';
    }
  }
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write(out);
  }
  static UnigramModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path);
    std::vector<Piece> pieces;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos || tab == 0) {
        throw InvalidConfig("malformed unigram model line " + std::to_string(n));
      }
      char* end = nullptr;
      const std::string num = line.substr(tab + 1);
      const double lp = std::strtod(num.c_str(), &end);
      if (end == num.c_str() || !std::isfinite(lp) || lp > 0.0) {
        throw InvalidConfig("bad log-probability at unigram model line " + std::to_string(n));
      }
      pieces.push_back({line.substr(0, tab), lp});
    }
    return UnigramModel(std::move(pieces));
  }

 private:
  void reindex() {
    index_.clear();
    max_len_ = 0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (!index_.emplace(pieces_[i].token, static_cast<int>(i)).second) {
        throw InvalidConfig("duplicate unigram piece '" + pieces_[i].token + "'");
      }
      max_len_ = std::max(max_len_, unicode::code_point_count(pieces_[i].token));
    }
  }

  std::vector<Piece> pieces_;
  std::unordered_map<std::string, int, StringHash, std::equal_to<>> index_;
  std::size_t max_len_ = 0;
};

struct ViterbiResult {
  std::vector<int> piece_ids;  // indices into the model
  double score = -std::numeric_limits<double>::infinity();
  bool ok() const { return std::isfinite(score); }
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Lattice edges of `word`: for each end boundary, the (start boundary, piece).
struct Lattice {
  std::vector<std::size_t> bounds;
  std::vector<std::vector<std::pair<std::size_t, int>>> ending_at;

  Lattice(const UnigramModel& model, std::string_view word, int excluded = -1)
      : bounds(unicode::boundaries(word)), ending_at(bounds.size()) {
    const std::size_t n = bounds.size() - 1;
    const std::size_t max_len = model.max_piece_length();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j <= n && j - i <= max_len; ++j) {
        const int id = model.find(word.substr(bounds[i], bounds[j] - bounds[i]));
        if (id >= 0 && id != excluded) ending_at[j].emplace_back(i, id);
      }
    }
  }
  std::size_t length() const { return bounds.size() - 1; }
};

inline bool sequence_less(const UnigramModel& model, const std::vector<int>& a,
                          const std::vector<int>& b) {
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [&](int x, int y) { return model.piece(x).token < model.piece(y).token; });
}

}  // namespace detail

// Best segmentation under the model: maximal summed log-probability, ties to
// fewer pieces, then to the lexicographically smaller piece sequence.
// `excluded` removes one piece from consideration. A word with no
// segmentation yields a non-finite score.
inline ViterbiResult viterbi(const UnigramModel& model, std::string_view word, int excluded = -1) {
  using detail::kNegInf;
  detail::Lattice lattice(model, word, excluded);
  const std::size_t n = lattice.length();
  std::vector<double> score(n + 1, kNegInf);
  std::vector<std::vector<int>> path(n + 1);
  score[0] = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    for (const auto& [i, id] : lattice.ending_at[j]) {
      if (score[i] == kNegInf) continue;
      const double cand = score[i] + model.piece(id).log_prob;
      bool take = cand > score[j];
      if (!take && cand == score[j]) {
        const std::size_t cand_len = path[i].size() + 1;
        if (cand_len != path[j].size()) {
          take = cand_len < path[j].size();
        } else {
          std::vector<int> seq = path[i];
          seq.push_back(id);
          take = detail::sequence_less(model, seq, path[j]);
        }
      }
      if (take) {
        score[j] = cand;
        path[j] = path[i];
        path[j].push_back(id);
      }
    }
  }
  ViterbiResult r;
  if (n == 0) {
    r.score = 0.0;
    return r;
  }
  r.score = score[n];
  if (r.ok()) r.piece_ids = std::move(path[n]);
  return r;
}

namespace detail {

[[noreturn]] inline void throw_uncovered(const UnigramModel& model, std::string_view word) {
  for (auto cp : unicode::code_points(word)) {
    if (!model.contains(cp)) throw UncoveredCharacter(std::string(word), std::string(cp));
  }
  const auto cps = unicode::code_points(word);
  throw UncoveredCharacter(std::string(word), cps.empty() ? std::string() : std::string(cps[0]));
}

}  // namespace detail

// log P(word), marginalized over all segmentations.
inline double word_log_likelihood(const UnigramModel& model, std::string_view word) {
  detail::Lattice lattice(model, word);
  const std::size_t n = lattice.length();
  std::vector<double> alpha(n + 1, detail::kNegInf);
  alpha[0] = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    for (const auto& [i, id] : lattice.ending_at[j]) {
      alpha[j] = detail::log_add(alpha[j], alpha[i] + model.piece(id).log_prob);
    }
  }
  return alpha[n];
}

// Single characters observed in the corpus, split by position class.
struct Alphabet {
  std::set<std::string> all;
  std::set<std::string> initial;
  std::set<std::string> internal;

  // Vocabulary entries needed to cover every corpus word positionally.
  std::size_t form_count() const { return initial.size() + internal.size(); }
};

inline Alphabet alphabet_of(const WordCounts& counts) {
  Alphabet a;
  for (const auto& [w, c] : counts) {
    if (c == 0) continue;
    const auto cps = unicode::code_points(w);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      a.all.emplace(cps[i]);
      (i == 0 ? a.initial : a.internal).emplace(cps[i]);
    }
  }
  return a;
}

// All single characters plus the most frequent substrings of up to
// `max_piece_len` code points (ties lexicographic), `seed_size` entries in
// total. Probabilities are proportional to occurrence counts.
inline UnigramModel seed_unigram(const WordCounts& counts, std::size_t seed_size,
                                 std::size_t max_piece_len = 16) {
  std::map<std::string, double> substrings;
  for (const auto& [w, c] : counts) {
    if (c == 0) continue;
    const auto b = unicode::boundaries(w);
    const std::size_t n = b.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j <= n && j - i <= max_piece_len; ++j) {
        substrings[w.substr(b[i], b[j] - b[i])] += static_cast<double>(c);
      }
    }
  }
  std::vector<std::pair<std::string, double>> chars;
  std::vector<std::pair<std::string, double>> multi;
  for (auto& [s, c] : substrings) {
    (unicode::code_point_count(s) == 1 ? chars : multi).emplace_back(s, c);
  }
  std::stable_sort(multi.begin(), multi.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t room = seed_size > chars.size() ? seed_size - chars.size() : 0;
  if (multi.size() > room) multi.resize(room);

  std::vector<std::pair<std::string, double>> weights = std::move(chars);
  weights.insert(weights.end(), multi.begin(), multi.end());
  return UnigramModel::from_weights(weights);
}

struct EmResult {
  UnigramModel model;
  double log_likelihood = 0.0;  // under the input model
};

// One expectation-maximization step. Expected piece counts come from the
// forward-backward sums over each word's segmentation lattice.
inline EmResult em_step(const UnigramModel& model, const WordCounts& counts) {
  using detail::kNegInf;
  // Keeps every entry's log-probability finite.
  constexpr double kMinExpectedCount = 1e-300;

  std::vector<double> expected(model.size(), 0.0);
  double loglik = 0.0;
  for (const auto& [w, c] : counts) {
    if (c == 0 || w.empty()) continue;
    detail::Lattice lattice(model, w);
    const std::size_t n = lattice.length();
    std::vector<double> alpha(n + 1, kNegInf);
    std::vector<double> beta(n + 1, kNegInf);
    alpha[0] = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      for (const auto& [i, id] : lattice.ending_at[j]) {
        alpha[j] = detail::log_add(alpha[j], alpha[i] + model.piece(id).log_prob);
      }
    }
    if (alpha[n] == kNegInf) detail::throw_uncovered(model, w);
    beta[n] = 0.0;
    for (std::size_t j = n; j >= 1; --j) {
      for (const auto& [i, id] : lattice.ending_at[j]) {
        beta[i] = detail::log_add(beta[i], beta[j] + model.piece(id).log_prob);
      }
    }
    const double log_z = alpha[n];
    const double weight = static_cast<double>(c);
    loglik += weight * log_z;
    for (std::size_t j = 1; j <= n; ++j) {
      for (const auto& [i, id] : lattice.ending_at[j]) {
        const double post = alpha[i] + model.piece(id).log_prob + beta[j] - log_z;
        expected[id] += weight * std::exp(post);
      }
    }
  }

  std::vector<std::pair<std::string, double>> weights;
  weights.reserve(model.size());
  for (std::size_t k = 0; k < model.size(); ++k) {
    weights.emplace_back(model.piece(k).token, std::max(expected[k], kMinExpectedCount));
  }
  return {UnigramModel::from_weights(weights), loglik};
}

// Removes the `n` multi-character pieces whose deletion costs the least
// corpus log-likelihood. The cost of a piece is the summed drop in Viterbi
// score of the words whose best path uses it, re-segmented without it; unused
// pieces cost nothing. Ties go to the lexicographically smaller piece. Single
// characters are never removed.
inline UnigramModel prune_count(const UnigramModel& model, const WordCounts& counts,
                                std::size_t n) {
  std::vector<int> multi;
  for (std::size_t k = 0; k < model.size(); ++k) {
    if (unicode::code_point_count(model.piece(k).token) > 1) multi.push_back(static_cast<int>(k));
  }
  n = std::min(n, multi.size());
  if (n == 0) return model;

  std::vector<double> loss(model.size(), 0.0);
  for (const auto& [w, c] : counts) {
    if (c == 0 || w.empty()) continue;
    const ViterbiResult best = viterbi(model, w);
    if (!best.ok()) detail::throw_uncovered(model, w);
    std::set<int> used(best.piece_ids.begin(), best.piece_ids.end());
    for (int id : used) {
      if (unicode::code_point_count(model.piece(id).token) <= 1) continue;
      const ViterbiResult alt = viterbi(model, w, id);
      // Single characters stay, so an alternative always exists.
      loss[id] += static_cast<double>(c) * (best.score - alt.score);
    }
  }
  std::sort(multi.begin(), multi.end(), [&](int a, int b) {
    if (loss[a] != loss[b]) return loss[a] < loss[b];
    return model.piece(a).token < model.piece(b).token;
  });
  std::set<int> removed(multi.begin(), multi.begin() + static_cast<std::ptrdiff_t>(n));

  std::vector<std::pair<std::string, double>> weights;
  for (std::size_t k = 0; k < model.size(); ++k) {
    if (!removed.count(static_cast<int>(k))) {
      weights.emplace_back(model.piece(k).token, std::exp(model.piece(k).log_prob));
    }
  }
  return UnigramModel::from_weights(weights);
}

inline std::size_t multi_char_count(const UnigramModel& model) {
  std::size_t m = 0;
  for (const auto& p : model.pieces()) m += unicode::code_point_count(p.token) > 1;
  return m;
}

// Keeps `keep_fraction` of the multi-character pieces (rounded down).
inline UnigramModel prune(const UnigramModel& model, const WordCounts& counts,
                          double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction < 1.0)) {
    throw InvalidConfig("keep_fraction must lie in (0, 1)");
  }
  const std::size_t m = multi_char_count(model);
  const auto keep = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(m)));
  return prune_count(model, counts, m - keep);
}

struct UnigramConfig {
  std::size_t seed_size = 0;  // 0 selects 10x the target size
  std::size_t em_iters_per_round = 2;
  double keep_fraction = 0.8;
  std::size_t max_piece_len = 16;
};

struct UnigramResult {
  UnigramModel model;
  Vocabulary vocab;
};

// Vocabulary export: specials, then pieces by descending log-probability,
// each in the positional forms it needs. A piece gets its plain form when a
// corpus word's best path starts with it and its `##` form when a path uses it
// word-internally; single characters additionally get the forms of every
// position they occupy in the corpus, so greedy longest-match segmentation
// covers every corpus word. Unused pieces export in plain form.
inline Vocabulary export_vocabulary(const UnigramModel& model, const WordCounts& counts) {
  std::vector<char> initial(model.size(), 0);
  std::vector<char> internal(model.size(), 0);
  for (const auto& [w, c] : counts) {
    if (c == 0 || w.empty()) continue;
    const ViterbiResult best = viterbi(model, w);
    if (!best.ok()) detail::throw_uncovered(model, w);
    for (std::size_t k = 0; k < best.piece_ids.size(); ++k) {
      (k == 0 ? initial : internal)[best.piece_ids[k]] = 1;
    }
  }
  const Alphabet alphabet = alphabet_of(counts);
  for (const auto& ch : alphabet.initial) {
    if (int id = model.find(ch); id >= 0) initial[id] = 1;
  }
  for (const auto& ch : alphabet.internal) {
    if (int id = model.find(ch); id >= 0) internal[id] = 1;
  }

  std::vector<std::string> tokens;
  for (const auto& p : model.sorted_pieces()) {
    const int id = model.find(p.token);
    const bool plain = initial[id] || !internal[id];
    if (plain) tokens.push_back(p.token);
    if (internal[id]) tokens.push_back(std::string(kContinuationPrefix) + p.token);
  }
  return Vocabulary::with_specials(tokens);
}

// seed -> [EM x k -> prune] until the exported vocabulary fits `target_size`.
inline UnigramResult train_unigram(const WordCounts& counts, std::size_t target_size,
                                   UnigramConfig config = {}) {
  if (config.em_iters_per_round == 0) throw InvalidConfig("em_iters_per_round must be positive");
  if (!(config.keep_fraction > 0.0 && config.keep_fraction < 1.0)) {
    throw InvalidConfig("keep_fraction must lie in (0, 1)");
  }
  if (config.max_piece_len == 0) throw InvalidConfig("max_piece_len must be positive");
  const Alphabet alphabet = alphabet_of(counts);
  const std::size_t required = kSpecialTokens.size() + alphabet.form_count();
  if (target_size < required) throw TargetTooSmall(target_size, required);
  if (alphabet.all.empty()) return {UnigramModel{}, Vocabulary{}};

  const std::size_t seed_size = config.seed_size ? config.seed_size : 10 * target_size;
  UnigramModel model = seed_unigram(counts, seed_size, config.max_piece_len);
  for (;;) {
    for (std::size_t k = 0; k < config.em_iters_per_round; ++k) {
      model = em_step(model, counts).model;
    }
    Vocabulary vocab = export_vocabulary(model, counts);
    if (vocab.size() <= target_size) return {std::move(model), std::move(vocab)};

    const std::size_t excess = vocab.size() - target_size;
    const std::size_t m = multi_char_count(model);
    const auto keep =
        static_cast<std::size_t>(std::floor(config.keep_fraction * static_cast<double>(m)));
    model = prune_count(model, counts, std::min(m - keep, excess));
  }
}

}  // namespace sublex
