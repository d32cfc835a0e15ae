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

#include "sublex/config.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace sublex {
namespace {

TEST(PipelineConfig, DefaultsValidate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.vocab_mode, VocabMode::kUnigram);
  EXPECT_EQ(c.tokenizer_mode, TokenizerMode::kWordpiece);
  EXPECT_DOUBLE_EQ(c.train_fraction, 0.9);
  EXPECT_EQ(c.finetune.epochs, 5u);
}

TEST(PipelineConfig, EveryKeyAcceptsAValue) {
  for (const auto& k : PipelineConfig::keys()) {
    PipelineConfig c;
    std::string v = "1";
    if (k == "vocab.mode") v = "bpe";
    if (k == "tokenizer.mode") v = "unigram";
    if (k.find("fraction") != std::string::npos || k.find("rate") != std::string::npos ||
        k.find("share") != std::string::npos || k.find("epsilon") != std::string::npos ||
        k.find("std") != std::string::npos || k.find("decay") != std::string::npos) {
      v = "0.5";
    }
    EXPECT_NO_THROW(c.set(k, v)) << k;
  }
}

TEST(PipelineConfig, SetAndErrors) {
  PipelineConfig c;
  c.set("model.hidden_dim", "32");
  c.set("train.finetune_learning_rate", "2e-5");
  EXPECT_EQ(c.model.hidden_dim, 32u);
  EXPECT_DOUBLE_EQ(c.finetune.learning_rate, 2e-5);
  EXPECT_THROW(c.set("model.hidden", "32"), InvalidConfig);
  EXPECT_THROW(c.set("model.hidden_dim", "3x"), InvalidConfig);
  EXPECT_THROW(c.set("model.hidden_dim", "-3"), InvalidConfig);
  EXPECT_THROW(c.set("vocab.mode", "wordpiece"), InvalidConfig);
  EXPECT_THROW(c.set("corpus.lowercase", "maybe"), InvalidConfig);
}

TEST(PipelineConfig, ValidateCatchesBadCombinations) {
  PipelineConfig c;
  c.set("model.num_heads", "3");
  EXPECT_THROW(c.validate(), InvalidConfig);
  PipelineConfig d;
  d.set("train.train_fraction", "1");
  EXPECT_THROW(d.validate(), InvalidConfig);
  PipelineConfig e;
  e.set("pretrain_data.mask_share", "0.95");
  EXPECT_THROW(e.validate(), InvalidConfig);
}

TEST(PipelineConfig, FileWithComments) {
  testing::TempDir dir("config");
  testing::write_text(dir.file("c.conf"),
                      "# pipeline\nseed = 7\n\nvocab.size=300   # small\n  model.num_layers = 1\n");
  PipelineConfig c;
  c.load(dir.file("c.conf"));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.vocab_size, 300u);
  EXPECT_EQ(c.model.num_layers, 1u);
  EXPECT_EQ(c.model_for(50).seed, 7u);
  EXPECT_EQ(c.model_for(50).vocab_size, 50u);
  EXPECT_EQ(c.pretrain_config().seed, 7u);

  testing::write_text(dir.file("bad.conf"), "seed 7\n");
  EXPECT_THROW(c.load(dir.file("bad.conf")), InvalidConfig);
  EXPECT_THROW(c.load(dir.file("missing.conf")), FileNotFound);
}

}  // namespace
}  // namespace sublex
