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
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sublex/errors.hpp"
#include "sublex/random.hpp"
#include "sublex/vocabulary.hpp"

namespace sublex {

enum class NspLabel : int { kIsNext = 0, kNotNext = 1 };

using TokenIds = std::vector<TokenId>;
// Sentences (as token ids) grouped by document.
using Document = std::vector<TokenIds>;

struct NspPair {
  TokenIds seg_a;
  TokenIds seg_b;
  NspLabel label = NspLabel::kIsNext;
  std::size_t document = 0;

  friend bool operator==(const NspPair&, const NspPair&) = default;
};

struct PretrainExample {
  std::vector<TokenId> input_ids;
  std::vector<int> segment_ids;
  std::vector<int> attention_mask;
  std::vector<int> mlm_positions;
  std::vector<TokenId> mlm_labels;
  NspLabel nsp_label = NspLabel::kIsNext;

  std::size_t length() const { return input_ids.size(); }
  friend bool operator==(const PretrainExample&, const PretrainExample&) = default;
};

struct MaskingPolicy {
  double mask_rate = 0.15;
  double mask_share = 0.8;    // replaced by [MASK]
  double random_share = 0.1;  // replaced by a random non-special token
  // The rest stay unchanged.
};

inline void validate(const MaskingPolicy& p) {
  if (!(p.mask_rate >= 0.0 && p.mask_rate <= 1.0)) throw InvalidConfig("mask_rate must lie in [0, 1]");
  if (!(p.mask_share >= 0.0 && p.random_share >= 0.0 && p.mask_share + p.random_share <= 1.0)) {
    throw InvalidConfig("mask/random shares must be non-negative and sum to at most 1");
  }
}

// For every consecutive sentence pair of every document: with probability
// 1/2 the true next sentence, otherwise a uniformly drawn sentence of another
// document. Each document draws from its own stream (seed, document index).
inline std::vector<NspPair> build_nsp_pairs(const std::vector<Document>& documents,
                                            std::uint64_t seed) {
  if (documents.size() < 2) throw InsufficientDocuments(documents.size());
  std::size_t total = 0;
  for (const auto& d : documents) total += d.size();

  std::vector<NspPair> pairs;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const Document& doc = documents[d];
    const std::size_t others = total - doc.size();
    Rng rng = derive_rng(seed, {d, 0});
    for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
      NspPair p;
      p.seg_a = doc[i];
      p.document = d;
      if (uniform01(rng) < 0.5 || others == 0) {
        p.seg_b = doc[i + 1];
        p.label = NspLabel::kIsNext;
      } else {
        auto k = uniform_index(rng, others);
        std::size_t od = 0;
        for (;; ++od) {
          if (od == d) continue;
          if (k < documents[od].size()) break;
          k -= documents[od].size();
        }
        p.seg_b = documents[od][k];
        p.label = NspLabel::kNotNext;
      }
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

struct MlmResult {
  TokenIds ids;
  std::vector<int> positions;
  TokenIds labels;
};

inline bool is_maskable(const Vocabulary& vocab, TokenId id) {
  return id != vocab.cls_id() && id != vocab.sep_id() && id != vocab.pad_id();
}

// Each maskable position is selected independently with `mask_rate`; a
// selected position becomes [MASK], a random non-special token, or stays,
// per the policy shares. If nothing was selected one maskable position is
// drawn uniformly, so every example carries at least one target.
inline MlmResult apply_mlm(const TokenIds& ids, const Vocabulary& vocab, Rng& rng,
                           const MaskingPolicy& policy = {}) {
  validate(policy);
  MlmResult r{ids, {}, {}};
  std::vector<int> eligible;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (is_maskable(vocab, ids[i])) eligible.push_back(static_cast<int>(i));
  }
  if (eligible.empty()) return r;

  for (int pos : eligible) {
    if (uniform01(rng) < policy.mask_rate) r.positions.push_back(pos);
  }
  if (r.positions.empty()) {
    r.positions.push_back(eligible[uniform_index(rng, eligible.size())]);
  }

  std::vector<TokenId> ordinary;
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    if (!vocab.is_special(static_cast<TokenId>(t))) ordinary.push_back(static_cast<TokenId>(t));
  }
  for (int pos : r.positions) {
    r.labels.push_back(ids[pos]);
    const double u = uniform01(rng);
    if (u < policy.mask_share) {
      r.ids[pos] = vocab.mask_id();
    } else if (u < policy.mask_share + policy.random_share && !ordinary.empty()) {
      r.ids[pos] = ordinary[uniform_index(rng, ordinary.size())];
    }
  }
  return r;
}

inline MlmResult apply_mlm(const TokenIds& ids, const Vocabulary& vocab, std::uint64_t seed,
                           const MaskingPolicy& policy = {}) {
  Rng rng = derive_rng(seed);
  return apply_mlm(ids, vocab, rng, policy);
}

// Shortens the longer segment from its end (segment B on ties) until the
// two fit in `budget` tokens.
inline void truncate_pair(TokenIds& a, TokenIds& b, std::size_t budget) {
  while (a.size() + b.size() > budget) {
    (a.size() > b.size() ? a : b).pop_back();
  }
}

// Unmasked [CLS] A [SEP] B [SEP] [PAD]... layout.
inline PretrainExample layout_pair(TokenIds a, TokenIds b, NspLabel label, const Vocabulary& vocab,
                                   std::size_t max_len) {
  if (a.empty() || b.empty()) throw EmptySegment();
  if (max_len < 5) throw InvalidConfig("max_len must be at least 5 for segment pairs");
  truncate_pair(a, b, max_len - 3);
  PretrainExample ex;
  ex.nsp_label = label;
  ex.input_ids.push_back(vocab.cls_id());
  ex.input_ids.insert(ex.input_ids.end(), a.begin(), a.end());
  ex.input_ids.push_back(vocab.sep_id());
  ex.segment_ids.assign(ex.input_ids.size(), 0);
  ex.input_ids.insert(ex.input_ids.end(), b.begin(), b.end());
  ex.input_ids.push_back(vocab.sep_id());
  ex.segment_ids.resize(ex.input_ids.size(), 1);
  ex.attention_mask.assign(ex.input_ids.size(), 1);
  ex.input_ids.resize(max_len, vocab.pad_id());
  ex.segment_ids.resize(max_len, 0);
  ex.attention_mask.resize(max_len, 0);
  return ex;
}

inline PretrainExample make_example(const NspPair& pair, const Vocabulary& vocab,
                                    std::size_t max_len, Rng& rng,
                                    const MaskingPolicy& policy = {}) {
  PretrainExample ex = layout_pair(pair.seg_a, pair.seg_b, pair.label, vocab, max_len);
  MlmResult m = apply_mlm(ex.input_ids, vocab, rng, policy);
  ex.input_ids = std::move(m.ids);
  ex.mlm_positions = std::move(m.positions);
  ex.mlm_labels = std::move(m.labels);
  return ex;
}

inline PretrainExample make_example(const NspPair& pair, const Vocabulary& vocab,
                                    std::size_t max_len, std::uint64_t seed,
                                    const MaskingPolicy& policy = {}) {
  Rng rng = derive_rng(seed);
  return make_example(pair, vocab, max_len, rng, policy);
}

// Single-segment [CLS] A [SEP] layout for classification, A cut to fit.
inline PretrainExample make_single_segment(TokenIds a, const Vocabulary& vocab,
                                           std::size_t max_len) {
  if (max_len < 2) throw InvalidConfig("max_len must be at least 2");
  if (a.size() > max_len - 2) a.resize(max_len - 2);
  PretrainExample ex;
  ex.input_ids.push_back(vocab.cls_id());
  ex.input_ids.insert(ex.input_ids.end(), a.begin(), a.end());
  ex.input_ids.push_back(vocab.sep_id());
  ex.segment_ids.assign(ex.input_ids.size(), 0);
  ex.attention_mask.assign(ex.input_ids.size(), 1);
  ex.input_ids.resize(max_len, vocab.pad_id());
  ex.segment_ids.resize(max_len, 0);
  ex.attention_mask.resize(max_len, 0);
  return ex;
}

// Checks the layout invariants; returns an empty string when they hold.
// `expected_seps` is 2 for pretraining pairs and 1 for single segments.
inline std::string check_example(const PretrainExample& ex, TokenId pad, TokenId cls, TokenId sep,
                                 std::size_t max_len, int expected_seps = 2) {
  if (ex.input_ids.size() != max_len || ex.segment_ids.size() != max_len ||
      ex.attention_mask.size() != max_len) {
    return "length differs from max_len";
  }
  if (ex.input_ids.empty() || ex.input_ids[0] != cls) return "position 0 is not [CLS]";
  std::size_t content = 0;
  while (content < max_len && ex.input_ids[content] != pad) ++content;
  for (std::size_t i = content; i < max_len; ++i) {
    if (ex.input_ids[i] != pad) return "non-pad token after padding";
    if (ex.segment_ids[i] != 0) return "padding carries a non-zero segment id";
  }
  for (std::size_t i = 0; i < max_len; ++i) {
    if (ex.attention_mask[i] != (i < content ? 1 : 0)) return "attention mask disagrees with padding";
  }
  int seps = 0;
  int segment = 0;
  for (std::size_t i = 0; i < content; ++i) {
    if (ex.segment_ids[i] != segment) return "segment ids out of order";
    if (ex.input_ids[i] == sep) {
      ++seps;
      segment = 1;
    }
  }
  if (seps != expected_seps) return "wrong number of [SEP] tokens";
  if (content == 0 || ex.input_ids[content - 1] != sep) return "content does not end with [SEP]";
  if (ex.mlm_positions.size() != ex.mlm_labels.size()) return "mlm positions/labels size mismatch";
  for (std::size_t k = 0; k < ex.mlm_positions.size(); ++k) {
    const int p = ex.mlm_positions[k];
    if (p < 0 || static_cast<std::size_t>(p) >= content) return "mlm position outside content";
    const TokenId t = ex.input_ids[p];
    if (t == cls || t == sep || t == pad) return "mlm position on a special token";
    if (k > 0 && ex.mlm_positions[k - 1] >= p) return "mlm positions not increasing";
  }
  return {};
}

inline std::string check_example(const PretrainExample& ex, const Vocabulary& vocab,
                                 std::size_t max_len, int expected_seps = 2) {
  return check_example(ex, vocab.pad_id(), vocab.cls_id(), vocab.sep_id(), max_len, expected_seps);
}

struct PretrainDataConfig {
  std::size_t max_len = 128;
  MaskingPolicy policy;
  std::uint64_t seed = 0;
};

// Documents are the shards: pairs and masking for document d draw from
// streams derived from (seed, d). Output is ordered by document, then pair.
inline std::vector<PretrainExample> generate_examples(const std::vector<Document>& documents,
                                                      const Vocabulary& vocab,
                                                      const PretrainDataConfig& config) {
  validate(config.policy);
  const auto pairs = build_nsp_pairs(documents, config.seed);
  std::vector<PretrainExample> out;
  out.reserve(pairs.size());
  std::size_t current_doc = SIZE_MAX;
  Rng rng;
  for (const auto& p : pairs) {
    if (p.document != current_doc) {
      current_doc = p.document;
      rng = derive_rng(config.seed, {current_doc, 1});
    }
    if (p.seg_a.empty() || p.seg_b.empty()) continue;
    out.push_back(make_example(p, vocab, config.max_len, rng, config.policy));
  }
  return out;
}

// --- example file -----------------------------------------------------------
//
//   sublex-examples<TAB>version=1<TAB>max_len=L<TAB>count=N
//   input_ids=..<TAB>segment_ids=..<TAB>attention_mask=..<TAB>mlm_positions=..<TAB>mlm_labels=..<TAB>nsp_label=0|1
//
// Lists are comma-separated integers; every line ends with a newline.

inline constexpr std::string_view kExampleMagic = "sublex-examples";
inline constexpr int kExampleFormatVersion = 1;

namespace detail {

template <typename T>
void write_list(std::ostream& out, const std::vector<T>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << static_cast<long long>(v[i]);
  }
}

template <typename T>
bool parse_list(std::string_view s, std::vector<T>& out) {
  out.clear();
  if (s.empty()) return true;
  std::size_t i = 0;
  while (i <= s.size()) {
    const std::size_t j = std::min(s.find(',', i), s.size());
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + j, v);
    if (ec != std::errc() || ptr != s.data() + j) return false;
    out.push_back(static_cast<T>(v));
    i = j + 1;
  }
  return true;
}

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  for (;;) {
    const std::size_t j = s.find('\t', i);
    out.push_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

inline bool take_field(std::string_view field, std::string_view key, std::string_view& value) {
  if (!field.starts_with(key) || field.size() <= key.size() || field[key.size()] != '=') {
    return false;
  }
  value = field.substr(key.size() + 1);
  return true;
}

}  // namespace detail

inline void write_examples(std::ostream& out, const std::vector<PretrainExample>& examples,
                           std::size_t max_len) {
  out << kExampleMagic << "\tversion=" << kExampleFormatVersion << "\tmax_len=" << max_len
      << "\tcount=" << examples.size() << '\n';
  for (const auto& ex : examples) {
    if (ex.length() != max_len) throw LengthMismatch(ex.length(), max_len);
    out << "input_ids=";
    detail::write_list(out, ex.input_ids);
    out << "\tsegment_ids=";
    detail::write_list(out, ex.segment_ids);
    out << "\tattention_mask=";
    detail::write_list(out, ex.attention_mask);
    out << "\tmlm_positions=";
    detail::write_list(out, ex.mlm_positions);
    out << "\tmlm_labels=";
    detail::write_list(out, ex.mlm_labels);
    out << "\tnsp_label=" << static_cast<int>(ex.nsp_label) << '\n';
  }
}

inline void write_examples(const std::string& path, const std::vector<PretrainExample>& examples,
                           std::size_t max_len) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_examples(out, examples, max_len);
}

struct ExampleFile {
  std::size_t max_len = 0;
  std::vector<PretrainExample> examples;
};

inline ExampleFile read_examples(std::istream& in) {
  ExampleFile file;
  std::string line;
  if (!std::getline(in, line) || in.eof()) throw CorruptRecord(0, "missing header");
  const auto head = detail::split_tabs(line);
  std::string_view v;
  std::size_t count = 0;
  const auto header_num = [&](std::string_view field, std::string_view key, std::size_t& out) {
    if (!detail::take_field(field, key, v)) return false;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    return ec == std::errc() && p == v.data() + v.size();
  };
  std::size_t version = 0;
  if (head.size() != 4 || head[0] != kExampleMagic || !header_num(head[1], "version", version) ||
      version != kExampleFormatVersion || !header_num(head[2], "max_len", file.max_len) ||
      !header_num(head[3], "count", count)) {
    throw CorruptRecord(0, "bad header");
  }
  for (std::size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line)) throw CorruptRecord(k, "file truncated");
    if (in.eof()) throw CorruptRecord(k, "record not newline-terminated");
    const auto f = detail::split_tabs(line);
    if (f.size() != 6) throw CorruptRecord(k, "expected 6 fields");
    PretrainExample ex;
    int nsp = 0;
    std::vector<int> nsp_list;
    bool ok = detail::take_field(f[0], "input_ids", v) && detail::parse_list(v, ex.input_ids) &&
              detail::take_field(f[1], "segment_ids", v) && detail::parse_list(v, ex.segment_ids) &&
              detail::take_field(f[2], "attention_mask", v) &&
              detail::parse_list(v, ex.attention_mask) &&
              (f[3] == "mlm_positions=" ||
               (detail::take_field(f[3], "mlm_positions", v) &&
                detail::parse_list(v, ex.mlm_positions))) &&
              (f[4] == "mlm_labels=" ||
               (detail::take_field(f[4], "mlm_labels", v) && detail::parse_list(v, ex.mlm_labels))) &&
              detail::take_field(f[5], "nsp_label", v) && detail::parse_list(v, nsp_list) &&
              nsp_list.size() == 1;
    if (!ok) throw CorruptRecord(k, "unparsable field");
    nsp = nsp_list[0];
    if (nsp != 0 && nsp != 1) throw CorruptRecord(k, "nsp_label must be 0 or 1");
    ex.nsp_label = static_cast<NspLabel>(nsp);
    if (ex.input_ids.size() != file.max_len || ex.segment_ids.size() != file.max_len ||
        ex.attention_mask.size() != file.max_len ||
        ex.mlm_positions.size() != ex.mlm_labels.size()) {
      throw CorruptRecord(k, "field lengths disagree with header");
    }
    file.examples.push_back(std::move(ex));
  }
  if (std::getline(in, line)) throw CorruptRecord(count, "records beyond header count");
  return file;
}

inline ExampleFile read_examples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path);
  return read_examples(in);
}

}  // namespace sublex
