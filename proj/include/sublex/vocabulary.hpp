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

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sublex/errors.hpp"
#include "sublex/unicode.hpp"

namespace sublex {

using TokenId = std::int32_t;

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kMask = "[MASK]";
inline constexpr std::array<std::string_view, 5> kSpecialTokens = {kPad, kUnk, kCls, kSep, kMask};
inline constexpr std::string_view kContinuationPrefix = "##";

inline bool is_continuation(std::string_view token) {
  return token.starts_with(kContinuationPrefix);
}

inline std::string_view strip_continuation(std::string_view token) {
  return is_continuation(token) ? token.substr(kContinuationPrefix.size()) : token;
}

inline bool is_special_token(std::string_view token) {
  for (auto s : kSpecialTokens) {
    if (s == token) return true;
  }
  return false;
}

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

// Ordered token list with a bijective token -> id map. Vocabularies built by
// this library put the specials at ids 0-4; loaded files (e.g. a baseline
// vocabulary) may place them elsewhere, so special ids are looked up.
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(std::vector<std::string>(kSpecialTokens.begin(), kSpecialTokens.end())) {}

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    ids_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
        throw InvalidConfig("duplicate vocabulary token '" + tokens_[i] + "' at id " +
                            std::to_string(i));
      }
    }
    for (std::size_t k = 0; k < kSpecialTokens.size(); ++k) {
      auto it = ids_.find(kSpecialTokens[k]);
      if (it == ids_.end()) {
        throw InvalidConfig("vocabulary lacks special token " + std::string(kSpecialTokens[k]));
      }
      special_ids_[k] = it->second;
    }
  }

  // Specials first, then `tokens` in order, skipping specials and repeats.
  static Vocabulary with_specials(const std::vector<std::string>& tokens) {
    std::vector<std::string> all(kSpecialTokens.begin(), kSpecialTokens.end());
    std::unordered_map<std::string, bool, StringHash, std::equal_to<>> seen;
    for (auto s : kSpecialTokens) seen.emplace(std::string(s), true);
    for (const auto& t : tokens) {
      if (seen.emplace(t, true).second) all.push_back(t);
    }
    return Vocabulary(std::move(all));
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t id) const {
    if (id >= tokens_.size()) throw IdOutOfRange(id, tokens_.size());
    return tokens_[id];
  }
  bool contains(std::string_view token) const { return ids_.find(token) != ids_.end(); }
  std::optional<TokenId> find(std::string_view token) const {
    auto it = ids_.find(token);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  TokenId id_or_unk(std::string_view token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? unk_id() : it->second;
  }

  TokenId pad_id() const { return special_ids_[0]; }
  TokenId unk_id() const { return special_ids_[1]; }
  TokenId cls_id() const { return special_ids_[2]; }
  TokenId sep_id() const { return special_ids_[3]; }
  TokenId mask_id() const { return special_ids_[4]; }
  bool is_special(TokenId id) const {
    for (TokenId s : special_ids_) {
      if (s == id) return true;
    }
    return false;
  }

  void write(std::ostream& out) const {
    for (const auto& t : tokens_) out << t << '\n';
  }
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write(out);
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path);
    std::vector<std::string> tokens;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!unicode::is_valid_utf8(line)) throw InvalidEncoding(n);
      tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> ids_;
  std::array<TokenId, 5> special_ids_{};
};

}  // namespace sublex
