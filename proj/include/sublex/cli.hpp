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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sublex/bpe.hpp"
#include "sublex/checkpoint.hpp"
#include "sublex/config.hpp"
#include "sublex/corpus.hpp"
#include "sublex/pretrain_data.hpp"
#include "sublex/tokenizer.hpp"
#include "sublex/trainer.hpp"
#include "sublex/unigram.hpp"
#include "sublex/vocab_diff.hpp"
#include "sublex/vocabulary.hpp"

#ifndef SUBLEX_VERSION
#define SUBLEX_VERSION "0.0.0"
#endif

namespace sublex::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

// A library error tagged with the module operation that raised it.
class StageError : public Error {
 public:
  StageError(std::string_view op, const std::string& what) : Error(std::string(op) + ": " + what) {}
};

template <typename F>
auto stage(std::string_view op, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(op, e.what());
  }
}

inline std::string companion_path(const std::string& vocab_path, VocabMode mode) {
  return vocab_path + (mode == VocabMode::kBpe ? ".merges" : ".model");
}

// --- stages -----------------------------------------------------------------

inline void build_vocab(const PipelineConfig& cfg, const std::string& corpus,
                        const std::string& out_vocab, const std::string& counts_out = {}) {
  const WordCounts counts =
      stage("corpus.word_counts", [&] { return word_counts_from_file(corpus, cfg.corpus); });
  if (cfg.vocab_mode == VocabMode::kBpe) {
    auto r = stage("vocab_induction.train_bpe", [&] { return train_bpe(counts, cfg.vocab_size); });
    r.vocab.save(out_vocab);
    r.merges.save(companion_path(out_vocab, cfg.vocab_mode));
  } else {
    auto r = stage("vocab_induction.train_unigram",
                   [&] { return train_unigram(counts, cfg.vocab_size, cfg.unigram); });
    r.vocab.save(out_vocab);
    r.model.save(companion_path(out_vocab, cfg.vocab_mode));
  }
  if (!counts_out.empty()) {
    std::ofstream out(counts_out, std::ios::binary);
    if (!out) throw IoError("cannot write " + counts_out);
    write_word_counts(out, counts);
  }
}

inline Tokenizer load_tokenizer(const PipelineConfig& cfg, const std::string& vocab_path,
                                const std::string& model_path) {
  Vocabulary vocab = stage("tokenizer.load_vocabulary", [&] { return Vocabulary::load(vocab_path); });
  if (cfg.tokenizer_mode == TokenizerMode::kWordpiece) return Tokenizer(std::move(vocab), cfg.wordpiece);
  const std::string path = model_path.empty() ? vocab_path + ".model" : model_path;
  UnigramModel model = stage("tokenizer.load_unigram_model", [&] { return UnigramModel::load(path); });
  return Tokenizer(std::move(vocab), std::move(model));
}

inline std::vector<Document> tokenize_documents(const PipelineConfig& cfg, const Tokenizer& tok,
                                                const std::string& corpus) {
  const auto docs = stage("corpus.load_corpus", [&] { return load_documents(corpus, cfg.corpus); });
  std::vector<Document> out;
  stage("tokenizer.tokenize", [&] {
    for (const auto& d : docs) {
      Document doc;
      for (const auto& s : d) {
        auto ids = tok.tokenize_ids(s);
        if (!ids.empty()) doc.push_back(std::move(ids));
      }
      if (!doc.empty()) out.push_back(std::move(doc));
    }
    return 0;
  });
  return out;
}

inline std::size_t gen_data(const PipelineConfig& cfg, const Tokenizer& tok,
                            const std::string& corpus, const std::string& out_path) {
  const auto docs = tokenize_documents(cfg, tok, corpus);
  PretrainDataConfig dc{cfg.max_len, cfg.masking, cfg.seed};
  auto examples =
      stage("pretrain_data.make_example", [&] { return generate_examples(docs, tok.vocab(), dc); });
  write_examples(out_path, examples, cfg.max_len);
  return examples.size();
}

inline PretrainResult run_pretrain(const PipelineConfig& cfg, std::size_t vocab_size,
                                   const std::string& examples_path, const std::string& init,
                                   const std::string& out_ckpt, const std::string& loss_out) {
  ExampleFile data = stage("pretrain_data.read_examples", [&] { return read_examples(examples_path); });
  EncoderWeights w = init.empty()
                         ? stage("model.init_weights", [&] { return init_weights(cfg.model_for(vocab_size)); })
                         : stage("model.load_checkpoint", [&] { return load_checkpoint(init); });
  PretrainResult r =
      stage("trainer.pretrain", [&] { return pretrain(std::move(w), data, cfg.pretrain_config()); });
  save_checkpoint(out_ckpt, r.weights);
  if (!loss_out.empty()) {
    std::ofstream out(loss_out, std::ios::binary);
    if (!out) throw IoError("cannot write " + loss_out);
    write_loss_history(out, r.history);
  }
  return r;
}

struct FinetuneOutcome {
  EncoderWeights weights;
  std::vector<EpochLog> epochs;
  EvalReport validation;
};

inline FinetuneOutcome run_finetune(const PipelineConfig& cfg, const Tokenizer& tok,
                                    const std::string& ckpt, const std::string& labeled,
                                    const std::string& out_ckpt) {
  EncoderWeights w = stage("model.load_checkpoint", [&] { return load_checkpoint(ckpt); });
  const auto data = stage("trainer.read_labeled", [&] { return read_labeled(labeled, cfg.corpus.lowercase); });
  auto [train, validation] =
      stage("trainer.split_data", [&] { return split_data(data, cfg.train_fraction, cfg.seed); });
  const std::size_t L = w.config.max_len;
  const auto train_set = encode_labeled(train, tok, L);
  const auto val_set = encode_labeled(validation, tok, L);
  auto r = stage("trainer.finetune", [&] { return finetune(std::move(w), train_set, cfg.finetune_config()); });
  EvalReport rep = stage("trainer.evaluate", [&] { return evaluate(r.weights, val_set, "validation"); });
  save_checkpoint(out_ckpt, r.weights);
  return {std::move(r.weights), std::move(r.epochs), rep};
}

inline EvalReport run_eval(const PipelineConfig& cfg, const Tokenizer& tok, const EncoderWeights& w,
                           const std::string& data_path, const std::string& name) {
  const auto data = stage("trainer.read_labeled", [&] { return read_labeled(data_path, cfg.corpus.lowercase); });
  const auto set = encode_labeled(data, tok, w.config.max_len);
  return stage("trainer.evaluate", [&] { return evaluate(w, set, name); });
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

inline std::string epoch_log(const std::vector<EpochLog>& epochs) {
  std::ostringstream s;
  char buf[64];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%.10g", e.mean_loss);
    s << e.epoch << '\t' << buf << '\n';
  }
  return s.str();
}

inline std::string report_text(const EvalReport& r) {
  std::ostringstream s;
  write_report(s, r);
  return s.str();
}

// --- command line -------------------------------------------------------------

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

inline void add_common(CLI::App* cmd, CommonOptions& o, const std::string& seed_effect) {
  cmd->add_option("--config", o.config_path, "Flat key=value pipeline config file");
  cmd->add_option("--set", o.sets, "Override a config key (section.key=value); repeatable")
      ->allow_extra_args(false);
  cmd->add_option("--seed", o.seed, "Global seed; " + seed_effect);
}

inline PipelineConfig resolve(const CommonOptions& o) {
  PipelineConfig cfg;
  if (!o.config_path.empty()) cfg.load(o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidConfig("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

inline std::string version_text() {
  return std::string("sublex ") + SUBLEX_VERSION + "\nexample-format " +
         std::to_string(kExampleFormatVersion) + "\ncheckpoint-format " +
         std::to_string(kCheckpointVersion) + "\n";
}

inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Domain subword vocabularies, vocabulary divergence and encoder pretraining"};
  app.name("sublex");
  bool show_version = false;
  app.add_flag("--version", show_version, "Print toolkit and file-format versions");
  app.require_subcommand(0, 1);

  // build-vocab
  CommonOptions bv_common;
  std::string bv_mode, bv_corpus, bv_out, bv_counts;
  std::optional<std::size_t> bv_size;
  auto* bv = app.add_subcommand("build-vocab", "Induce a subword vocabulary from a corpus");
  add_common(bv, bv_common, "has no effect (vocabulary induction is deterministic)");
  bv->add_option("--mode", bv_mode, "bpe or unigram (vocab.mode)")->check(CLI::IsMember({"bpe", "unigram"}));
  bv->add_option("--size", bv_size, "Target vocabulary size (vocab.size)");
  bv->add_option("corpus", bv_corpus, "Corpus file, one sentence per line")->required();
  bv->add_option("-o,--output", bv_out, "Vocabulary file to write; the merge table or unigram "
                                        "model goes to <output>.merges / <output>.model")
      ->required();
  bv->add_option("--counts", bv_counts, "Also write word counts (word<TAB>count)");

  // tokenize
  CommonOptions tk_common;
  std::string tk_vocab, tk_mode, tk_model;
  bool tk_ids = false;
  auto* tk = app.add_subcommand("tokenize", "Segment sentences from standard input");
  add_common(tk, tk_common, "has no effect (tokenization is deterministic)");
  tk->add_option("--vocab", tk_vocab, "Vocabulary file")->required();
  tk->add_option("--mode", tk_mode, "wordpiece or unigram (tokenizer.mode)")
      ->check(CLI::IsMember({"wordpiece", "unigram"}));
  tk->add_option("--model", tk_model, "Unigram model file (default <vocab>.model)");
  tk->add_flag("--ids", tk_ids, "Print comma-joined ids instead of pieces");

  // vocab-diff
  CommonOptions vd_common;
  std::string vd_a, vd_b, vd_words;
  std::size_t vd_samples = 20;
  bool vd_table = false;
  auto* vd = app.add_subcommand("vocab-diff", "Compare two vocabularies");
  add_common(vd, vd_common, "has no effect");
  vd->add_option("A", vd_a, "First vocabulary (e.g. the baseline)")->required();
  vd->add_option("B", vd_b, "Second vocabulary (e.g. the domain vocabulary)")->required();
  vd->add_option("--samples", vd_samples, "Exclusive tokens listed per side");
  vd->add_option("--words", vd_words, "Word list (one per line) to segment under both vocabularies");
  vd->add_flag("--table", vd_table, "Human-readable table instead of key<TAB>value output");

  // gen-data
  CommonOptions gd_common;
  std::string gd_vocab, gd_model, gd_corpus, gd_out;
  std::optional<std::size_t> gd_max_len;
  auto* gd = app.add_subcommand("gen-data", "Generate masked-LM / next-sentence examples");
  add_common(gd, gd_common, "selects next-sentence negatives and masked positions");
  gd->add_option("--vocab", gd_vocab, "Vocabulary file")->required();
  gd->add_option("--model", gd_model, "Unigram model file for tokenizer.mode=unigram");
  gd->add_option("--max-len", gd_max_len, "Sequence length (pretrain_data.max_len)");
  gd->add_option("corpus", gd_corpus, "Corpus file; blank lines separate documents")->required();
  gd->add_option("-o,--output", gd_out, "Example file to write")->required();

  // pretrain
  CommonOptions pt_common;
  std::string pt_vocab, pt_examples, pt_init, pt_out, pt_loss;
  auto* pt = app.add_subcommand("pretrain", "Pretrain the encoder on an example file");
  add_common(pt, pt_common, "sets weight initialization, batch order and dropout");
  pt->add_option("--vocab", pt_vocab, "Vocabulary file (fixes the model's vocabulary size)")->required();
  pt->add_option("--examples", pt_examples, "Example file from gen-data")->required();
  pt->add_option("--init", pt_init, "Start from this checkpoint instead of fresh weights");
  pt->add_option("-o,--output", pt_out, "Checkpoint to write")->required();
  pt->add_option("--loss-out", pt_loss, "Loss history (step<TAB>loss)");

  // finetune
  CommonOptions ft_common;
  std::string ft_vocab, ft_model, ft_ckpt, ft_data, ft_out, ft_log, ft_report;
  auto* ft = app.add_subcommand("finetune", "Fine-tune for yes/no statement classification");
  add_common(ft, ft_common, "sets the train/validation split, batch order and dropout");
  ft->add_option("--vocab", ft_vocab, "Vocabulary file")->required();
  ft->add_option("--model", ft_model, "Unigram model file for tokenizer.mode=unigram");
  ft->add_option("--checkpoint", ft_ckpt, "Pretrained checkpoint")->required();
  ft->add_option("--data", ft_data, "Labeled file (Y|N<TAB>statement)")->required();
  ft->add_option("-o,--output", ft_out, "Fine-tuned checkpoint to write")->required();
  ft->add_option("--epoch-log", ft_log, "Per-epoch mean loss (epoch<TAB>loss)");
  ft->add_option("--report", ft_report, "Validation report (key<TAB>value)");

  // eval
  CommonOptions ev_common;
  std::string ev_vocab, ev_model, ev_ckpt, ev_data, ev_name = "test", ev_out;
  bool ev_table = false;
  auto* ev = app.add_subcommand("eval", "Accuracy of a fine-tuned checkpoint on a labeled file");
  add_common(ev, ev_common, "has no effect (evaluation is deterministic)");
  ev->add_option("--vocab", ev_vocab, "Vocabulary file")->required();
  ev->add_option("--model", ev_model, "Unigram model file for tokenizer.mode=unigram");
  ev->add_option("--checkpoint", ev_ckpt, "Fine-tuned checkpoint")->required();
  ev->add_option("--data", ev_data, "Labeled file (Y|N<TAB>statement)")->required();
  ev->add_option("--name", ev_name, "Dataset name in the report");
  ev->add_option("-o,--output", ev_out, "Write the report here instead of standard output");
  ev->add_flag("--table", ev_table, "Also print the human-readable table");

  // pipeline
  CommonOptions pl_common;
  std::string pl_corpus, pl_labeled, pl_test, pl_dir;
  auto* pl = app.add_subcommand(
      "pipeline", "build-vocab -> gen-data -> pretrain -> finetune -> eval in one run");
  add_common(pl, pl_common, "drives every seeded stage; identical seeds give identical artifacts");
  pl->add_option("--corpus", pl_corpus, "Pretraining corpus")->required();
  pl->add_option("--labeled", pl_labeled, "Labeled fine-tuning data (split train/validation)")->required();
  pl->add_option("--test", pl_test, "Optional labeled test file");
  pl->add_option("-o,--output-dir", pl_dir, "Directory for all artifacts")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (show_version) {
      out << version_text();
      return kOk;
    }
    err << "sublex: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  if (show_version) {
    out << version_text();
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    err << "sublex: a subcommand is required\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*bv) {
      PipelineConfig cfg = resolve(bv_common);
      if (!bv_mode.empty()) cfg.set("vocab.mode", bv_mode);
      if (bv_size) cfg.vocab_size = *bv_size;
      cfg.validate();
      build_vocab(cfg, bv_corpus, bv_out, bv_counts);
    } else if (*tk) {
      PipelineConfig cfg = resolve(tk_common);
      if (!tk_mode.empty()) cfg.set("tokenizer.mode", tk_mode);
      cfg.validate();
      const Tokenizer tok = load_tokenizer(cfg, tk_vocab, tk_model);
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        if (!unicode::is_valid_utf8(line)) throw StageError("corpus.normalize", InvalidEncoding(n).what());
        const auto sentence = normalize(line, cfg.corpus.lowercase);
        const auto pieces = stage("tokenizer.tokenize", [&] { return tok.tokenize(sentence.text); });
        for (std::size_t i = 0; i < pieces.size(); ++i) {
          if (i) out << (tk_ids ? ',' : ' ');
          if (tk_ids) {
            out << tok.vocab().id_or_unk(pieces[i]);
          } else {
            out << pieces[i];
          }
        }
        out << '\n';
      }
    } else if (*vd) {
      resolve(vd_common).validate();
      const Vocabulary a = stage("vocab_diff.load", [&] { return Vocabulary::load(vd_a); });
      const Vocabulary b = stage("vocab_diff.load", [&] { return Vocabulary::load(vd_b); });
      std::vector<std::string> words;
      if (!vd_words.empty()) {
        std::ifstream wf(vd_words);
        if (!wf) throw StageError("vocab_diff.contrast", FileNotFound(vd_words).what());
        std::string w;
        while (std::getline(wf, w)) {
          const auto nw = normalize(w, true).text;
          if (!nw.empty()) words.push_back(nw);
        }
      }
      const auto report = diff(a, b, vd_samples);
      const auto rows = contrast(a, b, words);
      if (vd_table) {
        write_table(out, report, rows);
      } else {
        write_structured(out, report, rows);
      }
    } else if (*gd) {
      PipelineConfig cfg = resolve(gd_common);
      if (gd_max_len) cfg.max_len = *gd_max_len;
      cfg.validate();
      const Tokenizer tok = load_tokenizer(cfg, gd_vocab, gd_model);
      gen_data(cfg, tok, gd_corpus, gd_out);
    } else if (*pt) {
      PipelineConfig cfg = resolve(pt_common);
      cfg.validate();
      const Vocabulary vocab = stage("tokenizer.load_vocabulary", [&] { return Vocabulary::load(pt_vocab); });
      const auto r = run_pretrain(cfg, vocab.size(), pt_examples, pt_init, pt_out, pt_loss);
      out << "steps\t" << r.steps << "\nplateaued\t" << (r.plateaued ? "true" : "false") << '\n';
      if (!r.history.empty()) out << "final_loss\t" << r.history.back().loss << '\n';
    } else if (*ft) {
      PipelineConfig cfg = resolve(ft_common);
      cfg.validate();
      const Tokenizer tok = load_tokenizer(cfg, ft_vocab, ft_model);
      const auto r = run_finetune(cfg, tok, ft_ckpt, ft_data, ft_out);
      if (!ft_log.empty()) write_file(ft_log, epoch_log(r.epochs));
      if (!ft_report.empty()) write_file(ft_report, report_text(r.validation));
      write_report(out, r.validation);
    } else if (*ev) {
      PipelineConfig cfg = resolve(ev_common);
      cfg.validate();
      const Tokenizer tok = load_tokenizer(cfg, ev_vocab, ev_model);
      const EncoderWeights w = stage("model.load_checkpoint", [&] { return load_checkpoint(ev_ckpt); });
      const EvalReport r = run_eval(cfg, tok, w, ev_data, ev_name);
      std::ostringstream text;
      write_report(text, r);
      if (ev_table) {
        text << '\n';
        write_comparison_table(text, {{"model", std::nullopt, r.accuracy}});
      }
      if (ev_out.empty()) {
        out << text.str();
      } else {
        write_file(ev_out, text.str());
      }
    } else if (*pl) {
      PipelineConfig cfg = resolve(pl_common);
      cfg.validate();
      for (const auto& p : {pl_corpus, pl_labeled}) {
        if (!std::filesystem::exists(p)) throw StageError("pipeline", FileNotFound(p).what());
      }
      if (!pl_test.empty() && !std::filesystem::exists(pl_test)) {
        throw StageError("pipeline", FileNotFound(pl_test).what());
      }
      std::filesystem::create_directories(pl_dir);
      const auto path = [&](const char* name) { return (std::filesystem::path(pl_dir) / name).string(); };

      build_vocab(cfg, pl_corpus, path("vocab.txt"), path("word_counts.tsv"));
      const Tokenizer tok = load_tokenizer(cfg, path("vocab.txt"), "");
      gen_data(cfg, tok, pl_corpus, path("examples.txt"));
      const auto pre = run_pretrain(cfg, tok.vocab().size(), path("examples.txt"), "",
                                    path("pretrained.ckpt"), path("loss.tsv"));
      const auto fin =
          run_finetune(cfg, tok, path("pretrained.ckpt"), pl_labeled, path("finetuned.ckpt"));
      write_file(path("finetune_epochs.tsv"), epoch_log(fin.epochs));
      write_file(path("validation_report.tsv"), report_text(fin.validation));
      ComparisonRow row{"sublex", fin.validation.accuracy, std::nullopt};
      if (!pl_test.empty()) {
        const EvalReport test = run_eval(cfg, tok, fin.weights, pl_test, "test");
        write_file(path("test_report.tsv"), report_text(test));
        row.test = test.accuracy;
      }
      std::ostringstream table;
      write_comparison_table(table, {row});
      write_file(path("report.txt"), table.str());
      out << "pretrain_steps\t" << pre.steps << '\n' << report_text(fin.validation);
    }
  } catch (const Error& e) {
    err << "sublex: error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cin, std::cout, std::cerr);
}

}  // namespace sublex::cli
