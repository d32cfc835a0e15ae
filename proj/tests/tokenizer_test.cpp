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

#include "sublex/tokenizer.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sublex/bpe.hpp"
#include "sublex/corpus.hpp"
#include "test_util.hpp"

namespace sublex {
namespace {

using Strings = std::vector<std::string>;

UnigramModel model_of(std::initializer_list<std::pair<const char*, double>> probs) {
  std::vector<std::pair<std::string, double>> w;
  for (const auto& [t, p] : probs) w.emplace_back(t, p);
  return UnigramModel::from_weights(w);
}

TEST(Viterbi, WholePieceBeatsCharacters) {
  // a*b = 0.16 < ab = 0.2.
  const auto m = model_of({{"a", 0.4}, {"b", 0.4}, {"ab", 0.2}});
  const auto [seg, score] = viterbi_segment(m, "ab");
  EXPECT_EQ(seg.pieces, (Strings{"ab"}));
  EXPECT_NEAR(score, std::log(0.2), 1e-15);
}

TEST(Viterbi, CharactersBeatWeakPiece) {
  // a*b = 0.2025 > ab = 0.1.
  const auto m = model_of({{"a", 0.45}, {"b", 0.45}, {"ab", 0.1}});
  const auto [seg, score] = viterbi_segment(m, "ab");
  EXPECT_EQ(seg.pieces, (Strings{"a", "b"}));
  EXPECT_NEAR(score, 2 * std::log(0.45), 1e-15);
}

TEST(Viterbi, TieGoesToFewerPieces) {
  // a+a and aa both score log(1/4) exactly.
  const UnigramModel m(std::vector<Piece>{{"a", std::log(0.5)}, {"aa", std::log(0.25)}, {"b", std::log(0.25)}});
  const auto [seg, score] = viterbi_segment(m, "aa");
  EXPECT_EQ(seg.pieces, (Strings{"aa"}));
}

TEST(Viterbi, UncoveredCharacterThrows) {
  const auto m = model_of({{"a", 1.0}});
  EXPECT_THROW(viterbi_segment(m, "ax"), UncoveredCharacter);
}

TEST(Viterbi, MatchesExhaustiveOracle) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = testing::random_model(rng, "abcd", 3 + rng() % 12, 5);
    std::string w;
    const int len = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < len; ++i) w += "abcd"[rng() % 4];
    const auto oracle = testing::brute_force_best(m, w);
    const auto [seg, score] = viterbi_segment(m, w);
    EXPECT_EQ(seg.pieces, oracle.pieces) << w;
    EXPECT_EQ(score, oracle.score) << w;
  }
}

TEST(Viterbi, MultibyteCharacters) {
  const auto m = model_of({{"é", 0.3}, {"t", 0.3}, {"ét", 0.4}});
  const auto [seg, score] = viterbi_segment(m, "étét");
  EXPECT_EQ(seg.pieces, (Strings{"ét", "ét"}));
}

Vocabulary legal_pieces() {
  return Vocabulary::with_specials({"contra", "##vent", "##ion", "intervention", "rec", "##on", "the",
                                    "a", "##b", "##c"});
}

TEST(Wordpiece, GreedyLongestMatch) {
  const auto v = legal_pieces();
  EXPECT_EQ(wordpiece_segment(v, "contravention").pieces, (Strings{"contra", "##vent", "##ion"}));
  EXPECT_EQ(wordpiece_segment(v, "intervention").pieces, (Strings{"intervention"}));
  EXPECT_EQ(wordpiece_segment(v, "reconvention").pieces, (Strings{"rec", "##on", "##vent", "##ion"}));
  EXPECT_EQ(wordpiece_segment(v, "abc").pieces, (Strings{"a", "##b", "##c"}));
}

TEST(Wordpiece, UnmatchedWordBecomesUnk) {
  const auto v = legal_pieces();
  const auto seg = wordpiece_segment(v, "abx");
  EXPECT_EQ(seg.pieces, (Strings{"[UNK]"}));
  EXPECT_EQ(seg.ids, (std::vector<TokenId>{v.unk_id()}));
  WordpieceOptions opt;
  opt.max_chars_per_word = 2;
  EXPECT_EQ(wordpiece_segment(v, "abc", opt).pieces, (Strings{"[UNK]"}));
}

TEST(Wordpiece, CharFallbackKeepsText) {
  const auto v = legal_pieces();
  WordpieceOptions opt;
  opt.char_fallback = true;
  const auto seg = wordpiece_segment(v, "abxc", opt);
  EXPECT_EQ(seg.pieces, (Strings{"a", "##b", "##x", "##c"}));
  EXPECT_EQ(seg.ids[2], v.unk_id());
  EXPECT_EQ(detokenize(seg.pieces), "abxc");
}

TEST(Tokenizer, SentenceIdsAndRoundTrip) {
  const auto v = legal_pieces();
  const Tokenizer tok(v);
  const auto pieces = tok.tokenize("the contravention");
  EXPECT_EQ(pieces, (Strings{"the", "contra", "##vent", "##ion"}));
  const auto ids = tok.tokenize_ids("the contravention");
  EXPECT_EQ(ids, encode(v, pieces));
  EXPECT_EQ(decode(v, ids), pieces);
  EXPECT_EQ(detokenize(pieces), "the contravention");
}

TEST(Tokenizer, UnigramModeAddsContinuationPrefix) {
  const auto m = model_of({{"a", 0.2}, {"b", 0.2}, {"ab", 0.6}});
  const auto v = Vocabulary::with_specials({"ab", "a", "##a", "##b", "##ab"});
  const Tokenizer tok(v, m);
  const auto seg = tok.segment("aba");
  EXPECT_EQ(seg.pieces, (Strings{"ab", "##a"}));
  EXPECT_EQ(seg.ids, (std::vector<TokenId>{*v.find("ab"), *v.find("##a")}));
}

TEST(Decode, OutOfRangeIds) {
  const auto v = legal_pieces();
  EXPECT_THROW(decode(v, {static_cast<TokenId>(v.size())}), IdOutOfRange);
  EXPECT_THROW(decode(v, {-1}), IdOutOfRange);
}

TEST(Encode, UnknownTokensMapToUnk) {
  const auto v = legal_pieces();
  EXPECT_EQ(encode(v, {"zzz"}), (std::vector<TokenId>{v.unk_id()}));
}

TEST(Tokenizer, CorpusRoundTripWithTrainedVocabulary) {
  const auto sentences = load_corpus(testing::data_path("corpus_200.txt"));
  const auto counts = word_counts(sentences);
  const auto bpe = train_bpe(counts, 300);
  const Tokenizer tok(bpe.vocab);
  for (const auto& s : sentences) {
    const auto pieces = tok.tokenize(s.text);
    EXPECT_EQ(detokenize(pieces), s.text);
    for (auto id : encode(bpe.vocab, pieces)) EXPECT_NE(id, bpe.vocab.unk_id()) << s.text;
  }
}

// Frozen wordpiece output for the first 100 fixture sentences under a
// 120-entry BPE vocabulary (small enough that most words split).
TEST(Tokenizer, GoldenSegmentation) {
  const auto sentences = load_corpus(testing::data_path("corpus_200.txt"));
  const auto bpe = train_bpe(word_counts(sentences), 120);
  const Tokenizer tok(bpe.vocab);
  std::ostringstream out;
  for (std::size_t i = 0; i < 100 && i < sentences.size(); ++i) {
    const auto pieces = tok.tokenize(sentences[i].text);
    for (std::size_t k = 0; k < pieces.size(); ++k) out << (k ? " " : "") << pieces[k];
    out << '\n';
  }
  const std::string golden = testing::read_text(testing::data_path("golden_wordpiece_100.txt"));
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(out.str(), golden);
}

}  // namespace
}  // namespace sublex
