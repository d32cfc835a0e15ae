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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sublex/corpus.hpp"
#include "sublex/errors.hpp"
#include "sublex/unicode.hpp"
#include "sublex/unigram.hpp"
#include "sublex/vocabulary.hpp"

namespace sublex {

struct Segmentation {
  std::vector<std::string> pieces;
  std::vector<TokenId> ids;

  std::size_t size() const { return pieces.size(); }
  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

struct WordpieceOptions {
  // Rescue unmatched positions one character at a time instead of mapping
  // the whole word to [UNK].
  bool char_fallback = false;
  // Longer words become [UNK] outright.
  std::size_t max_chars_per_word = 100;
};

// Greedy longest-match-first: the longest vocabulary prefix, then the longest
// `##`-prefixed piece for each remainder.
inline Segmentation wordpiece_segment(const Vocabulary& vocab, std::string_view word,
                                      const WordpieceOptions& options = {}) {
  Segmentation seg;
  const auto unk = [&] {
    Segmentation u;
    u.pieces.emplace_back(kUnk);
    u.ids.push_back(vocab.unk_id());
    return u;
  };
  const auto b = unicode::boundaries(word);
  const std::size_t n = b.size() - 1;
  if (n == 0 || n > options.max_chars_per_word) return unk();

  std::string candidate;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = n;
    std::optional<TokenId> match;
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate += kContinuationPrefix;
      candidate += word.substr(b[start], b[end] - b[start]);
      if ((match = vocab.find(candidate))) break;
    }
    if (!match) {
      if (!options.char_fallback) return unk();
      // The piece keeps its text so detokenization still reconstructs the word.
      end = start + 1;
      candidate.clear();
      if (start > 0) candidate += kContinuationPrefix;
      candidate += word.substr(b[start], b[end] - b[start]);
      seg.pieces.push_back(candidate);
      seg.ids.push_back(vocab.unk_id());
    } else {
      seg.pieces.push_back(candidate);
      seg.ids.push_back(*match);
    }
    start = end;
  }
  return seg;
}

// Maximum-likelihood segmentation. Pieces are raw model entries (no
// continuation markers); ids index the model.
inline std::pair<Segmentation, double> viterbi_segment(const UnigramModel& model,
                                                       std::string_view word) {
  const ViterbiResult r = viterbi(model, word);
  if (!r.ok()) detail::throw_uncovered(model, word);
  Segmentation seg;
  for (int id : r.piece_ids) {
    seg.pieces.push_back(model.piece(id).token);
    seg.ids.push_back(id);
  }
  return {std::move(seg), r.score};
}

enum class TokenizerMode { kWordpiece, kUnigram };

inline std::optional<TokenizerMode> parse_tokenizer_mode(std::string_view s) {
  if (s == "wordpiece") return TokenizerMode::kWordpiece;
  if (s == "unigram") return TokenizerMode::kUnigram;
  return std::nullopt;
}

// Immutable after construction; safe to share across threads.
class Tokenizer {
 public:
  explicit Tokenizer(Vocabulary vocab, WordpieceOptions options = {})
      : vocab_(std::move(vocab)), mode_(TokenizerMode::kWordpiece), options_(options) {}

  Tokenizer(Vocabulary vocab, UnigramModel model)
      : vocab_(std::move(vocab)), model_(std::move(model)), mode_(TokenizerMode::kUnigram) {}

  const Vocabulary& vocab() const { return vocab_; }
  TokenizerMode mode() const { return mode_; }

  // Word-internal pieces carry the continuation prefix in both modes.
  Segmentation segment(std::string_view word) const {
    if (mode_ == TokenizerMode::kWordpiece) return wordpiece_segment(vocab_, word, options_);
    auto [seg, score] = viterbi_segment(*model_, word);
    for (std::size_t k = 0; k < seg.pieces.size(); ++k) {
      if (k > 0) seg.pieces[k].insert(0, kContinuationPrefix);
      seg.ids[k] = vocab_.id_or_unk(seg.pieces[k]);
    }
    return seg;
  }

  std::vector<std::string> tokenize(std::string_view sentence) const {
    std::vector<std::string> out;
    for (std::string_view w : split_whitespace(sentence)) {
      auto seg = segment(w);
      for (auto& p : seg.pieces) out.push_back(std::move(p));
    }
    return out;
  }

  std::vector<TokenId> tokenize_ids(std::string_view sentence) const {
    std::vector<TokenId> out;
    for (std::string_view w : split_whitespace(sentence)) {
      auto seg = segment(w);
      out.insert(out.end(), seg.ids.begin(), seg.ids.end());
    }
    return out;
  }

 private:
  Vocabulary vocab_;
  std::optional<UnigramModel> model_;
  TokenizerMode mode_;
  WordpieceOptions options_;
};

inline std::vector<TokenId> encode(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id_or_unk(t));
  return ids;
}

inline std::vector<std::string> decode(const Vocabulary& vocab, const std::vector<TokenId>& ids) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) {
    // Negative ids wrap to huge values and fail the range check.
    tokens.push_back(vocab.token(static_cast<std::size_t>(id)));
  }
  return tokens;
}

inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (is_continuation(t) && !out.empty()) {
      out += strip_continuation(t);
    } else {
      if (!out.empty()) out += ' ';
      out += strip_continuation(t);
    }
  }
  return out;
}

}  // namespace sublex
