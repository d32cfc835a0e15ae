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
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sublex/errors.hpp"
#include "sublex/model.hpp"
#include "sublex/pretrain_data.hpp"
#include "sublex/tokenizer.hpp"
#include "sublex/trainer.hpp"
#include "sublex/unigram.hpp"

namespace sublex {

enum class VocabMode { kBpe, kUnigram };

// All pipeline settings. The file form is flat `section.key = value` lines;
// `#` starts a comment. Precedence, lowest first: built-in defaults, the
// config file, `--set key=value` flags, dedicated command-line flags.
struct PipelineConfig {
  std::uint64_t seed = 0;

  CorpusOptions corpus;

  VocabMode vocab_mode = VocabMode::kUnigram;
  std::size_t vocab_size = 1000;
  UnigramConfig unigram;

  TokenizerMode tokenizer_mode = TokenizerMode::kWordpiece;
  WordpieceOptions wordpiece;

  std::size_t max_len = 128;
  MaskingPolicy masking;

  ModelConfig model;

  TrainConfig pretrain;
  TrainConfig finetune;
  double train_fraction = 0.9;

  PipelineConfig() {
    model.hidden_dim = 64;
    model.num_layers = 2;
    model.num_heads = 4;
    model.ff_dim = 128;
    finetune.learning_rate = 3e-5;
    finetune.epochs = 5;
  }

  // Applies one `section.key` setting; unknown keys and unparsable values
  // raise InvalidConfig.
  void set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw InvalidConfig("unknown config key '" + key + "'");
    try {
      it->second(*this, value);
    } catch (const InvalidConfig&) {
      throw;
    } catch (const std::exception&) {
      throw InvalidConfig("bad value '" + value + "' for config key '" + key + "'");
    }
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw InvalidConfig(path + ":" + std::to_string(n) + ": expected key = value");
      }
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  // Model shape for a given vocabulary, with the pipeline's length and seed.
  ModelConfig model_for(std::size_t vocab_size_) const {
    ModelConfig m = model;
    m.vocab_size = vocab_size_;
    m.max_len = max_len;
    m.seed = seed;
    return m;
  }

  TrainConfig pretrain_config() const {
    TrainConfig t = pretrain;
    t.seed = seed;
    return t;
  }

  TrainConfig finetune_config() const {
    TrainConfig t = finetune;
    t.seed = seed;
    return t;
  }

  // Runs every owning module's checks; called before any output is written.
  void validate() const {
    if (vocab_size < kSpecialTokens.size()) throw InvalidConfig("vocab.size is below the special-token count");
    if (unigram.em_iters_per_round == 0) throw InvalidConfig("vocab.em_iters_per_round must be positive");
    if (!(unigram.keep_fraction > 0.0 && unigram.keep_fraction < 1.0)) {
      throw InvalidConfig("vocab.keep_fraction must lie in (0, 1)");
    }
    if (unigram.max_piece_len == 0) throw InvalidConfig("vocab.max_piece_len must be positive");
    if (max_len < 5) throw InvalidConfig("pretrain_data.max_len must be at least 5");
    sublex::validate(masking);
    model_for(kSpecialTokens.size()).validate();
    pretrain.validate();
    finetune.validate();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw InvalidConfig("train.train_fraction must lie in (0, 1)");
    }
  }

  static std::vector<std::string> keys() {
    std::vector<std::string> out;
    for (const auto& [k, f] : setters()) out.push_back(k);
    return out;
  }

 private:
  using Setter = std::function<void(PipelineConfig&, const std::string&)>;

  static std::size_t to_size(const std::string& v) {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw InvalidConfig("negative value '" + v + "'");
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw InvalidConfig("trailing characters in '" + v + "'");
    return static_cast<std::size_t>(x);
  }
  static double to_double(const std::string& v) {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw InvalidConfig("trailing characters in '" + v + "'");
    return x;
  }
  static bool to_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidConfig("expected true or false, got '" + v + "'");
  }

  static const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](PipelineConfig& c, const std::string& v) { c.seed = to_size(v); }},
        {"corpus.lowercase",
         [](PipelineConfig& c, const std::string& v) { c.corpus.lowercase = to_bool(v); }},
        {"vocab.mode",
         [](PipelineConfig& c, const std::string& v) {
           if (v == "bpe") {
             c.vocab_mode = VocabMode::kBpe;
           } else if (v == "unigram") {
             c.vocab_mode = VocabMode::kUnigram;
           } else {
             throw InvalidConfig("vocab.mode must be bpe or unigram");
           }
         }},
        {"vocab.size", [](PipelineConfig& c, const std::string& v) { c.vocab_size = to_size(v); }},
        {"vocab.seed_size",
         [](PipelineConfig& c, const std::string& v) { c.unigram.seed_size = to_size(v); }},
        {"vocab.em_iters_per_round",
         [](PipelineConfig& c, const std::string& v) { c.unigram.em_iters_per_round = to_size(v); }},
        {"vocab.keep_fraction",
         [](PipelineConfig& c, const std::string& v) { c.unigram.keep_fraction = to_double(v); }},
        {"vocab.max_piece_len",
         [](PipelineConfig& c, const std::string& v) { c.unigram.max_piece_len = to_size(v); }},
        {"tokenizer.mode",
         [](PipelineConfig& c, const std::string& v) {
           auto m = parse_tokenizer_mode(v);
           if (!m) throw InvalidConfig("tokenizer.mode must be wordpiece or unigram");
           c.tokenizer_mode = *m;
         }},
        {"tokenizer.char_fallback",
         [](PipelineConfig& c, const std::string& v) { c.wordpiece.char_fallback = to_bool(v); }},
        {"pretrain_data.max_len",
         [](PipelineConfig& c, const std::string& v) { c.max_len = to_size(v); }},
        {"pretrain_data.mask_rate",
         [](PipelineConfig& c, const std::string& v) { c.masking.mask_rate = to_double(v); }},
        {"pretrain_data.mask_share",
         [](PipelineConfig& c, const std::string& v) { c.masking.mask_share = to_double(v); }},
        {"pretrain_data.random_share",
         [](PipelineConfig& c, const std::string& v) { c.masking.random_share = to_double(v); }},
        {"model.hidden_dim",
         [](PipelineConfig& c, const std::string& v) { c.model.hidden_dim = to_size(v); }},
        {"model.num_layers",
         [](PipelineConfig& c, const std::string& v) { c.model.num_layers = to_size(v); }},
        {"model.num_heads",
         [](PipelineConfig& c, const std::string& v) { c.model.num_heads = to_size(v); }},
        {"model.ff_dim", [](PipelineConfig& c, const std::string& v) { c.model.ff_dim = to_size(v); }},
        {"model.dropout_rate",
         [](PipelineConfig& c, const std::string& v) { c.model.dropout_rate = to_double(v); }},
        {"model.init_std",
         [](PipelineConfig& c, const std::string& v) { c.model.init_std = to_double(v); }},
        {"train.learning_rate",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.learning_rate = to_double(v); }},
        {"train.warmup_steps",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.warmup_steps = to_size(v); }},
        {"train.batch_size",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.batch_size = to_size(v); }},
        {"train.max_steps",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.max_steps = to_size(v); }},
        {"train.plateau_epsilon",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.plateau_epsilon = to_double(v); }},
        {"train.plateau_patience",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.plateau_patience = to_size(v); }},
        {"train.eval_interval",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.eval_interval = to_size(v); }},
        {"train.eval_examples",
         [](PipelineConfig& c, const std::string& v) { c.pretrain.eval_examples = to_size(v); }},
        {"train.weight_decay",
         [](PipelineConfig& c, const std::string& v) {
           c.pretrain.weight_decay = c.finetune.weight_decay = to_double(v);
         }},
        {"train.epochs", [](PipelineConfig& c, const std::string& v) { c.finetune.epochs = to_size(v); }},
        {"train.finetune_learning_rate",
         [](PipelineConfig& c, const std::string& v) { c.finetune.learning_rate = to_double(v); }},
        {"train.finetune_batch_size",
         [](PipelineConfig& c, const std::string& v) { c.finetune.batch_size = to_size(v); }},
        {"train.finetune_warmup_fraction",
         [](PipelineConfig& c, const std::string& v) { c.finetune.warmup_fraction = to_double(v); }},
        {"train.train_fraction",
         [](PipelineConfig& c, const std::string& v) { c.train_fraction = to_double(v); }},
    };
    return table;
  }
};

}  // namespace sublex
