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

#include "sublex/vocab_diff.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace sublex {
namespace {

TEST(Diff, SmallSetsByHand) {
  const auto a = Vocabulary::with_specials({"a", "b", "c"});
  const auto b = Vocabulary::with_specials({"b", "c", "d"});
  const auto r = diff(a, b);
  EXPECT_EQ(r.size_a, 3u);
  EXPECT_EQ(r.size_b, 3u);
  EXPECT_EQ(r.intersection, 2u);
  EXPECT_EQ(r.only_a, 1u);
  EXPECT_EQ(r.only_b, 1u);
  EXPECT_DOUBLE_EQ(r.jaccard, 0.5);
  EXPECT_EQ(r.sample_only_a, (std::vector<std::string>{"a"}));
  EXPECT_EQ(r.sample_only_b, (std::vector<std::string>{"d"}));
}

TEST(Diff, SpecialsIgnoredAndEmptyIsIdentical) {
  const Vocabulary a;
  const auto r = diff(a, a);
  EXPECT_EQ(r.size_a, 0u);
  EXPECT_EQ(r.intersection, 0u);
  EXPECT_DOUBLE_EQ(r.jaccard, 1.0);
}

TEST(Diff, SamplesAreLexicographicAndCapped) {
  const auto a = Vocabulary::with_specials({"z", "y", "x", "w"});
  const Vocabulary b;
  const auto r = diff(a, b, 2);
  EXPECT_EQ(r.only_a, 4u);
  EXPECT_EQ(r.sample_only_a, (std::vector<std::string>{"w", "x"}));
}

TEST(Diff, PositionalFormsAreDistinctTokens) {
  const auto a = Vocabulary::with_specials({"legal", "##legal"});
  const auto b = Vocabulary::with_specials({"legal"});
  const auto r = diff(a, b);
  EXPECT_EQ(r.intersection, 1u);
  EXPECT_EQ(r.sample_only_a, (std::vector<std::string>{"##legal"}));
}

TEST(Membership, LegalWordsAcrossVocabularies) {
  // A general vocabulary lacking the domain pieces next to a domain one.
  const auto general = Vocabulary::with_specials({"the", "court", "legal", "contra", "##vent", "##ion"});
  const auto domain = Vocabulary::with_specials({"the", "court", "legal", "##legal", "contravention"});
  const auto rows = membership_table(general, domain, {"##legal", "legal", "contravention"});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].in_a);
  EXPECT_TRUE(rows[0].in_b);
  EXPECT_TRUE(rows[1].in_a && rows[1].in_b);
  EXPECT_FALSE(rows[2].in_a);
  EXPECT_TRUE(rows[2].in_b);

  const auto c = contrast(general, domain, {"contravention", "court"});
  EXPECT_EQ(c[0].count_a, 3u);
  EXPECT_EQ(c[0].count_b, 1u);
  EXPECT_TRUE(c[0].differs());
  EXPECT_FALSE(c[1].differs());
}

TEST(WriteStructured, Layout) {
  const auto a = Vocabulary::with_specials({"a", "b", "c"});
  const auto b = Vocabulary::with_specials({"b", "c", "d"});
  std::ostringstream out;
  write_structured(out, diff(a, b), contrast(a, b, {"bc"}));
  EXPECT_EQ(out.str(),
            "size_a\t3\nsize_b\t3\nintersection\t2\nonly_a\t1\nonly_b\t1\njaccard\t0.500000\n"
            "sample_only_a\ta\nsample_only_b\td\nbc\t[UNK]\t[UNK]\t1\t1\n");
}

TEST(WriteTable, MarksDifferingRows) {
  const auto a = Vocabulary::with_specials({"ab"});
  const auto b = Vocabulary::with_specials({"a", "##b"});
  std::ostringstream out;
  write_table(out, diff(a, b), contrast(a, b, {"ab"}));
  EXPECT_NE(out.str().find("* ab: ab (1) | a-##b (2)"), std::string::npos) << out.str();
}

}  // namespace
}  // namespace sublex
