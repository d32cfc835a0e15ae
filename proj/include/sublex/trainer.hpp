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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sublex/corpus.hpp"
#include "sublex/errors.hpp"
#include "sublex/model.hpp"
#include "sublex/pretrain_data.hpp"
#include "sublex/random.hpp"
#include "sublex/tokenizer.hpp"

namespace sublex {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t warmup_steps = 100;  // pretraining
  double warmup_fraction = 0.1;    // fine-tuning: share of total steps
  std::size_t batch_size = 32;
  std::size_t max_steps = 10000;
  double plateau_epsilon = 1e-3;
  std::size_t plateau_patience = 5;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
  std::size_t eval_interval = 100;
  std::size_t eval_examples = 256;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-6;

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidConfig("train.learning_rate must be positive");
    if (batch_size == 0 || max_steps == 0 || eval_interval == 0 || eval_examples == 0 ||
        plateau_patience == 0) {
      throw InvalidConfig("train batch_size, max_steps, eval_interval, eval_examples and "
                          "plateau_patience must be positive");
    }
    // 1 is accepted as the degenerate "stop after the first window" setting.
    if (!(plateau_epsilon > 0.0 && plateau_epsilon <= 1.0)) {
      throw InvalidConfig("train.plateau_epsilon must lie in (0, 1]");
    }
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
      throw InvalidConfig("train.warmup_fraction must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        !(adam_epsilon > 0.0)) {
      throw InvalidConfig("invalid optimizer hyperparameters");
    }
  }
};

// Adam with decoupled weight decay. Decay skips biases and layer-norm
// parameters.
class AdamW {
 public:
  AdamW(const ModelConfig& config, const TrainConfig& train)
      : m_(EncoderWeights::zeros(config)), v_(EncoderWeights::zeros(config)), cfg_(train) {}

  void step(EncoderWeights& w, EncoderWeights& g, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto tw = w.tensors();
    auto tg = g.tensors();
    auto tm = m_.tensors();
    auto tv = v_.tensors();
    for (std::size_t i = 0; i < tw.size(); ++i) {
      Matrix& p = *tw[i].tensor;
      const Matrix& grad = *tg[i].tensor;
      Matrix& m = *tm[i].tensor;
      Matrix& v = *tv[i].tensor;
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
      Matrix update =
          (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.adam_epsilon);
      if (tw[i].decay && cfg_.weight_decay > 0.0) update += cfg_.weight_decay * p;
      p -= lr * update;
    }
  }

  std::size_t steps() const { return t_; }

 private:
  EncoderWeights m_;
  EncoderWeights v_;
  TrainConfig cfg_;
  std::size_t t_ = 0;
};

// Linear warmup to the peak rate, constant afterwards. Steps are 1-based.
inline double learning_rate_at(std::size_t step, double peak, std::size_t warmup) {
  if (warmup == 0 || step >= warmup) return peak;
  return peak * static_cast<double>(step) / static_cast<double>(warmup);
}

// Fires once the relative improvement between consecutive evaluations has
// stayed below `epsilon` for `patience` evaluations in a row.
class PlateauDetector {
 public:
  PlateauDetector(double epsilon, std::size_t patience) : epsilon_(epsilon), patience_(patience) {}

  bool observe(double loss) {
    if (previous_) {
      const double denom = std::abs(*previous_);
      const double improvement = denom > 0.0 ? (*previous_ - loss) / denom : 0.0;
      streak_ = improvement < epsilon_ ? streak_ + 1 : 0;
    }
    previous_ = loss;
    return streak_ >= patience_;
  }

  std::size_t streak() const { return streak_; }

 private:
  double epsilon_;
  std::size_t patience_;
  std::optional<double> previous_;
  std::size_t streak_ = 0;
};

struct LossRecord {
  std::size_t step = 0;
  double loss = 0.0;
};

struct PretrainResult {
  EncoderWeights weights;
  std::vector<LossRecord> history;
  std::size_t steps = 0;
  bool plateaued = false;
};

inline void write_loss_history(std::ostream& out, const std::vector<LossRecord>& history) {
  char buf[64];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%.10g", r.loss);
    out << r.step << '\t' << buf << '\n';
  }
}

inline Batch make_batch(const std::vector<PretrainExample>& examples,
                        const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
  Batch b;
  for (std::size_t i = begin; i < end; ++i) b.examples.push_back(examples[order[i]]);
  return b;
}

inline double pretrain_eval_loss(const EncoderWeights& w, const Batch& eval) {
  const auto out = forward(w, eval);
  return loss(out.mlm_logits, out.nsp_logits, eval).total();
}

// MLM+NSP pretraining. Evaluates on the first `eval_examples` examples every
// `eval_interval` steps and stops on a loss plateau or at `max_steps`.
inline PretrainResult pretrain(EncoderWeights weights, const ExampleFile& data,
                               const TrainConfig& config) {
  config.validate();
  if (data.max_len != weights.config.max_len) {
    throw LengthMismatch(data.max_len, weights.config.max_len);
  }
  if (data.examples.empty()) throw EmptyDataset();

  const auto& examples = data.examples;
  const std::size_t n = examples.size();
  Batch eval;
  for (std::size_t i = 0; i < std::min(n, config.eval_examples); ++i) {
    eval.examples.push_back(examples[i]);
  }

  PretrainResult result{std::move(weights), {}, 0, false};
  AdamW opt(result.weights.config, config);
  PlateauDetector plateau(config.plateau_epsilon, config.plateau_patience);
  Rng dropout = derive_rng(config.seed, {0xd0});
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;
  std::size_t epoch = 0;

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    if (cursor >= n) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng = derive_rng(config.seed, {0x5f, epoch++});
      shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t end = std::min(n, cursor + config.batch_size);
    const Batch batch = make_batch(examples, order, cursor, end);
    cursor = end;

    GradientResult gr = gradients(result.weights, batch, Objective::kPretrain,
                                  result.weights.config.dropout_rate > 0.0 ? &dropout : nullptr);
    if (!std::isfinite(gr.loss)) throw NonFiniteLoss(step);
    opt.step(result.weights, gr.grads,
             learning_rate_at(step, config.learning_rate, config.warmup_steps));
    result.steps = step;

    if (step % config.eval_interval == 0 || step == config.max_steps) {
      const double l = pretrain_eval_loss(result.weights, eval);
      if (!std::isfinite(l)) throw NonFiniteLoss(step);
      result.history.push_back({step, l});
      if (plateau.observe(l)) {
        result.plateaued = true;
        break;
      }
    }
  }
  return result;
}

// --- fine-tuning ---------------------------------------------------------------

enum class Answer { kNo = 0, kYes = 1 };

struct LabeledExample {
  std::string statement;
  Answer label = Answer::kNo;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

// `label<TAB>statement` lines, label Y or N. Statements are normalized.
inline std::vector<LabeledExample> read_labeled(const std::string& path, bool lowercase = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path);
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!unicode::is_valid_utf8(line)) throw InvalidEncoding(n);
    const auto tab = line.find('\t');
    const std::string label = tab == std::string::npos ? line : line.substr(0, tab);
    if (tab == std::string::npos || (label != "Y" && label != "N")) {
      throw InvalidConfig("labeled line " + std::to_string(n) + " must be `Y|N<TAB>statement`");
    }
    out.push_back({normalize(line.substr(tab + 1), lowercase).text,
                   label == "Y" ? Answer::kYes : Answer::kNo});
  }
  return out;
}

inline void write_labeled(std::ostream& out, const std::vector<LabeledExample>& data) {
  for (const auto& e : data) out << (e.label == Answer::kYes ? 'Y' : 'N') << '\t' << e.statement << '\n';
}

// Deterministic shuffle, then the first round(fraction * N) items (kept
// within [1, N-1]) train and the rest validate.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_data(const std::vector<T>& data,
                                                     double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidConfig("train fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  if (n < 2) throw DatasetTooSmall(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_rng(seed, {0x5b});
  shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? out.first : out.second).push_back(data[order[i]]);
  }
  return out;
}

// Statements encoded as single-segment model inputs.
struct ClassificationSet {
  std::vector<PretrainExample> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

inline ClassificationSet encode_labeled(const std::vector<LabeledExample>& data,
                                        const Tokenizer& tokenizer, std::size_t max_len) {
  ClassificationSet set;
  for (const auto& e : data) {
    set.inputs.push_back(
        make_single_segment(tokenizer.tokenize_ids(e.statement), tokenizer.vocab(), max_len));
    set.labels.push_back(static_cast<int>(e.label));
  }
  return set;
}

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
};

struct FinetuneResult {
  EncoderWeights weights;
  std::vector<EpochLog> epochs;
};

// Exactly `config.epochs` shuffled passes of cross-entropy training on the
// class logits, with linear warmup over `warmup_fraction` of all steps.
inline FinetuneResult finetune(EncoderWeights weights, const ClassificationSet& train,
                               const TrainConfig& config) {
  config.validate();
  if (train.size() == 0) throw EmptyDataset();
  if (train.inputs.front().length() != weights.config.max_len) {
    throw LengthMismatch(train.inputs.front().length(), weights.config.max_len);
  }
  const std::size_t n = train.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total = per_epoch * config.epochs;
  const auto warmup = static_cast<std::size_t>(config.warmup_fraction * static_cast<double>(total));

  FinetuneResult result{std::move(weights), {}};
  AdamW opt(result.weights.config, config);
  Rng dropout = derive_rng(config.seed, {0xd1});
  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = derive_rng(config.seed, {0xf7, epoch});
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      Batch batch;
      for (std::size_t i = begin; i < end; ++i) {
        batch.examples.push_back(train.inputs[order[i]]);
        batch.class_labels.push_back(train.labels[order[i]]);
      }
      ++step;
      GradientResult gr = gradients(result.weights, batch, Objective::kClassify,
                                    result.weights.config.dropout_rate > 0.0 ? &dropout : nullptr);
      if (!std::isfinite(gr.loss)) throw NonFiniteLoss(step);
      loss_sum += gr.loss * static_cast<double>(end - begin);
      opt.step(result.weights, gr.grads, learning_rate_at(step, config.learning_rate, warmup));
    }
    result.epochs.push_back({epoch + 1, loss_sum / static_cast<double>(n)});
  }
  return result;
}

struct EvalReport {
  std::string dataset_name;
  std::size_t n_examples = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
};

// Prediction is the argmax of the two class logits (ties to "no").
inline std::vector<int> predict(const EncoderWeights& w, const ClassificationSet& set,
                                std::size_t batch_size = 64) {
  std::vector<int> out;
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    Batch batch;
    const std::size_t end = std::min(set.size(), begin + batch_size);
    batch.examples.assign(set.inputs.begin() + static_cast<std::ptrdiff_t>(begin),
                          set.inputs.begin() + static_cast<std::ptrdiff_t>(end));
    const Matrix logits = classify_forward(w, batch);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) out.push_back(logits(r, 1) > logits(r, 0) ? 1 : 0);
  }
  return out;
}

inline EvalReport evaluate(const EncoderWeights& w, const ClassificationSet& set,
                           std::string dataset_name) {
  if (set.size() == 0) throw EmptyDataset();
  const auto pred = predict(w, set);
  EvalReport r;
  r.dataset_name = std::move(dataset_name);
  r.n_examples = set.size();
  for (std::size_t i = 0; i < pred.size(); ++i) r.n_correct += pred[i] == set.labels[i];
  r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_examples);
  return r;
}

inline void write_report(std::ostream& out, const EvalReport& r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", r.accuracy);
  out << "dataset\t" << r.dataset_name << '\n'
      << "n_examples\t" << r.n_examples << '\n'
      << "n_correct\t" << r.n_correct << '\n'
      << "accuracy\t" << buf << '\n';
}

// One row of the model comparison table: accuracy per split.
struct ComparisonRow {
  std::string model;
  std::optional<double> validation;
  std::optional<double> test;
};

inline void write_comparison_table(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.model.size());
  const auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (v) {
      std::snprintf(buf, sizeof(buf), "%10.4f", *v);
    } else {
      std::snprintf(buf, sizeof(buf), "%10s", "-");
    }
    return std::string(buf);
  };
  out << std::string(width - 5, ' ') << "Model Validation       Test\n";
  for (const auto& r : rows) {
    out << std::string(width - r.model.size(), ' ') << r.model << ' ' << cell(r.validation) << ' '
        << cell(r.test) << '\n';
  }
}

}  // namespace sublex
