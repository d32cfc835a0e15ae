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

#include "sublex/cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

namespace sublex {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  const auto r = run({"build-vocab", "--bogus", "x", "-o", "y"});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
  EXPECT_EQ(run({"build-vocab", "--mode", "wordpiece", "c.txt", "-o", "v"}).code, cli::kUsage);
}

TEST(Cli, VersionAndHelp) {
  const auto v = run({"--version"});
  EXPECT_EQ(v.code, cli::kOk);
  EXPECT_NE(v.out.find("checkpoint-format 1"), std::string::npos);
  const auto h = run({"--help"});
  EXPECT_EQ(h.code, cli::kOk);
  EXPECT_NE(h.out.find("pipeline"), std::string::npos);
}

TEST(Cli, DataErrorsNameTheStage) {
  testing::TempDir dir("cli_err");
  const auto r = run({"build-vocab", dir.file("missing.txt"), "-o", dir.file("v.txt")});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("corpus.word_counts"), std::string::npos) << r.err;

  const auto bad = run({"build-vocab", "--set", "model.num_heads=3", testing::data_path("corpus_200.txt"),
                        "-o", dir.file("v.txt")});
  EXPECT_EQ(bad.code, cli::kDataError);
  EXPECT_FALSE(std::filesystem::exists(dir.file("v.txt")));

  testing::write_text(dir.file("c.txt"), "ab\n");
  const auto small = run({"build-vocab", "--mode", "bpe", "--size", "6", dir.file("c.txt"), "-o",
                          dir.file("v.txt")});
  EXPECT_EQ(small.code, cli::kDataError);
  EXPECT_NE(small.err.find("vocab_induction.train_bpe"), std::string::npos) << small.err;
}

TEST(Cli, BuildVocabTokenizeAndDiff) {
  testing::TempDir dir("cli");
  const auto corpus = testing::data_path("corpus_200.txt");
  ASSERT_EQ(run({"build-vocab", "--mode", "bpe", "--size", "200", corpus, "-o", dir.file("bpe.txt"),
                 "--counts", dir.file("counts.tsv")})
                .code,
            cli::kOk);
  const auto vocab = Vocabulary::load(dir.file("bpe.txt"));
  EXPECT_LE(vocab.size(), 200u);
  EXPECT_EQ(vocab.token(0), "[PAD]");
  EXPECT_TRUE(std::filesystem::exists(dir.file("bpe.txt.merges")));
  EXPECT_FALSE(testing::read_text(dir.file("counts.tsv")).empty());

  ASSERT_EQ(run({"build-vocab", "--size", "200", corpus, "-o", dir.file("uni.txt")}).code, cli::kOk);
  EXPECT_TRUE(std::filesystem::exists(dir.file("uni.txt.model")));

  const auto tok = run({"tokenize", "--vocab", dir.file("bpe.txt")}, "The Court\n\nheld\n");
  EXPECT_EQ(tok.code, cli::kOk);
  std::istringstream lines(tok.out);
  std::string first, second, third;
  std::getline(lines, first);
  std::getline(lines, second);
  std::getline(lines, third);
  EXPECT_EQ(detokenize([&] {
              std::vector<std::string> v;
              std::istringstream s(first);
              for (std::string p; s >> p;) v.push_back(p);
              return v;
            }()),
            "the court");
  EXPECT_EQ(second, "");

  const auto ids = run({"tokenize", "--vocab", dir.file("uni.txt"), "--mode", "unigram", "--ids"},
                       "the court\n");
  EXPECT_EQ(ids.code, cli::kOk);
  EXPECT_EQ(ids.out.find_first_not_of("0123456789,\n"), std::string::npos) << ids.out;

  const auto d = run({"vocab-diff", dir.file("bpe.txt"), dir.file("uni.txt")});
  EXPECT_EQ(d.code, cli::kOk);
  EXPECT_EQ(d.out.rfind("size_a\t", 0), 0u);
  const auto t = run({"vocab-diff", "--table", dir.file("bpe.txt"), dir.file("uni.txt")});
  EXPECT_NE(t.out.find("jaccard"), std::string::npos);
}

TEST(Cli, TinyPipeline) {
  testing::TempDir dir("cli_pipe");
  const auto r = run({"pipeline", "--corpus", testing::data_path("corpus_200.txt"), "--labeled",
                      testing::data_path("labeled_100.tsv"), "--test", testing::data_path("test_112.tsv"),
                      "-o", dir.file("out"), "--seed", "3", "--set", "vocab.size=150", "--set",
                      "pretrain_data.max_len=32", "--set", "model.hidden_dim=16", "--set",
                      "model.num_layers=1", "--set", "model.num_heads=2", "--set", "model.ff_dim=32",
                      "--set", "train.max_steps=4", "--set", "train.eval_interval=2", "--set",
                      "train.eval_examples=8", "--set", "train.batch_size=8", "--set", "train.epochs=1"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  for (const char* f : {"vocab.txt", "vocab.txt.model", "word_counts.tsv", "examples.txt",
                        "pretrained.ckpt", "loss.tsv", "finetuned.ckpt", "finetune_epochs.tsv",
                        "validation_report.tsv", "test_report.tsv", "report.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.file(std::string("out/") + f))) << f;
  }
  EXPECT_NE(testing::read_text(dir.file("out/test_report.tsv")).find("n_examples\t112"),
            std::string::npos);
  EXPECT_EQ(testing::read_text(dir.file("out/loss.tsv")).substr(0, 2), "2\t");

  const auto ev = run({"eval", "--vocab", dir.file("out/vocab.txt"), "--checkpoint",
                       dir.file("out/finetuned.ckpt"), "--data", testing::data_path("test_112.tsv")});
  EXPECT_EQ(ev.code, cli::kOk) << ev.err;
  EXPECT_EQ(ev.out, testing::read_text(dir.file("out/test_report.tsv")));
}

}  // namespace
}  // namespace sublex
