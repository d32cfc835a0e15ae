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

#include "sublex/bpe.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

namespace sublex {
namespace {

// Hand trace of {low:5, lower:2, newest:6}, ties to the smallest (left, right):
//   (w,e)=8 | (l,o)=7 | (e,we)=6 beats (n,e),(s,t),(we,s) | (ewe,s)=6 |
//   (ewes,t)=6 | (n,ewest)=6 | (lo,w)=5 | (lo,we)=2 beats (we,r) | (lowe,r)=2
const std::vector<SymbolPair> kLowerNewestMerges = {
    {"w", "e"},    {"l", "o"},     {"e", "we"}, {"ewe", "s"},  {"ewes", "t"},
    {"n", "ewest"}, {"lo", "w"},    {"lo", "we"}, {"lowe", "r"},
};

const WordCounts kLowerNewest = {{"low", 5}, {"lower", 2}, {"newest", 6}};

TEST(TrainBpe, HandTraceMergeSequence) {
  const auto r = train_bpe(kLowerNewest, 40);
  EXPECT_EQ(r.merges.merges(), kLowerNewestMerges);
  const std::vector<std::string> expected = {
      "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
      "l", "n", "##e", "##o", "##r", "##s", "##t", "##w",
      "##we", "lo", "##ewe", "##ewes", "##ewest", "newest", "low", "lowe", "lower"};
  EXPECT_EQ(r.vocab.tokens(), expected);
}

TEST(TrainBpe, StopsBeforeExceedingTarget) {
  const auto r = train_bpe(kLowerNewest, 14);
  EXPECT_EQ(r.vocab.size(), 14u);
  ASSERT_EQ(r.merges.size(), 1u);
  EXPECT_EQ(r.merges.merges()[0], (SymbolPair{"w", "e"}));
}

TEST(TrainBpe, SingleRepeatedCharacter) {
  const auto r = train_bpe({{"aa", 1}}, 100);
  ASSERT_EQ(r.merges.size(), 1u);
  EXPECT_EQ(r.merges.merges()[0], (SymbolPair{"a", "a"}));
  EXPECT_TRUE(r.vocab.contains("aa"));
}

TEST(TrainBpe, EmptyCountsGiveSpecialsOnly) {
  const auto r = train_bpe({}, 10);
  EXPECT_EQ(r.vocab.size(), kSpecialTokens.size());
  EXPECT_TRUE(r.merges.empty());
}

TEST(TrainBpe, TargetTooSmall) {
  // 5 specials + 8 positional character forms.
  EXPECT_THROW(train_bpe(kLowerNewest, 12), TargetTooSmall);
  EXPECT_NO_THROW(train_bpe(kLowerNewest, 13));
}

TEST(TrainBpe, DeterministicBytes) {
  const WordCounts counts = {{"contravention", 7}, {"intervention", 4}, {"convention", 3},
                             {"reconvention", 2}, {"tort", 9}, {"tortious", 3}};
  const auto a = train_bpe(counts, 60);
  const auto b = train_bpe(counts, 60);
  std::ostringstream va, vb, ma, mb;
  a.vocab.write(va);
  b.vocab.write(vb);
  a.merges.write(ma);
  b.merges.write(mb);
  EXPECT_EQ(va.str(), vb.str());
  EXPECT_EQ(ma.str(), mb.str());
}

TEST(TrainBpe, VocabularyHoldsCharactersAndMergeProducts) {
  const WordCounts counts = {{"contravention", 7}, {"intervention", 4}, {"tort", 9}};
  const auto r = train_bpe(counts, 50);
  EXPECT_LE(r.vocab.size(), 50u);
  for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) {
    EXPECT_EQ(r.vocab.token(i), kSpecialTokens[i]);
  }
  for (const auto& [l, rr] : r.merges.merges()) {
    EXPECT_TRUE(r.vocab.contains(l + rr) || r.vocab.contains("##" + l + rr)) << l << rr;
  }
  // Every word's final symbols are in the vocabulary in positional form.
  for (const auto& [w, c] : counts) {
    const auto symbols = apply_merges(r.merges, w);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      EXPECT_TRUE(r.vocab.contains(i == 0 ? symbols[i] : "##" + symbols[i])) << symbols[i];
    }
  }
}

TEST(ApplyMerges, FollowsTableOrder) {
  const MergeTable table(kLowerNewestMerges);
  EXPECT_EQ(apply_merges(table, "lower"), (std::vector<std::string>{"lower"}));
  EXPECT_EQ(apply_merges(table, "lowest"), (std::vector<std::string>{"lowe", "s", "t"}));
}

TEST(MergeTable, RejectsDuplicatesAndRoundTripsThroughFile) {
  EXPECT_THROW(MergeTable({{"a", "b"}, {"a", "b"}}), InvalidConfig);
  testing::TempDir dir("bpe");
  const MergeTable table(kLowerNewestMerges);
  table.save(dir.file("m.txt"));
  EXPECT_EQ(testing::read_text(dir.file("m.txt")).substr(0, 8), "w e\nl o\n");
  EXPECT_EQ(MergeTable::load(dir.file("m.txt")), table);
}

}  // namespace
}  // namespace sublex
