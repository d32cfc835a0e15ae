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

// Tiny model configurations, synthetic batches and a finite-difference
// gradient checker shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sublex/model.hpp"
#include "sublex/pretrain_data.hpp"
#include "sublex/random.hpp"

namespace sublex::testing {

inline ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 20;
  c.hidden_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ff_dim = 16;
  c.max_len = 8;
  c.seed = 3;
  // Larger than the default so gradients are well above rounding noise.
  c.init_std = 0.3;
  return c;
}

// A random [CLS] A [SEP] B [SEP] example of length L with `pad` trailing
// pads and a few masked positions.
inline PretrainExample random_example(Rng& rng, std::size_t vocab_size, std::size_t L,
                                      std::size_t pad) {
  const std::size_t content = L - pad;
  const std::size_t a = 1 + uniform_index(rng, content - 4);
  const std::size_t b = content - 3 - a;
  const auto tok = [&] { return static_cast<TokenId>(5 + uniform_index(rng, vocab_size - 5)); };
  TokenIds sa, sb;
  for (std::size_t i = 0; i < a; ++i) sa.push_back(tok());
  for (std::size_t i = 0; i < b; ++i) sb.push_back(tok());
  PretrainExample ex;
  ex.input_ids.push_back(2);
  ex.input_ids.insert(ex.input_ids.end(), sa.begin(), sa.end());
  ex.input_ids.push_back(3);
  ex.segment_ids.assign(ex.input_ids.size(), 0);
  ex.input_ids.insert(ex.input_ids.end(), sb.begin(), sb.end());
  ex.input_ids.push_back(3);
  ex.segment_ids.resize(ex.input_ids.size(), 1);
  ex.attention_mask.assign(ex.input_ids.size(), 1);
  ex.input_ids.resize(L, 0);
  ex.segment_ids.resize(L, 0);
  ex.attention_mask.resize(L, 0);
  for (std::size_t i = 1; i + 1 < content; ++i) {
    if (ex.input_ids[i] == 3) continue;
    if (uniform01(rng) < 0.4 || ex.mlm_positions.empty()) {
      ex.mlm_positions.push_back(static_cast<int>(i));
      ex.mlm_labels.push_back(ex.input_ids[i]);
      ex.input_ids[i] = 4;
    }
  }
  ex.nsp_label = uniform01(rng) < 0.5 ? NspLabel::kIsNext : NspLabel::kNotNext;
  return ex;
}

inline Batch random_batch(const ModelConfig& c, std::size_t n, std::uint64_t seed) {
  Rng rng = derive_rng(seed, {77});
  Batch batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.examples.push_back(random_example(rng, c.vocab_size, c.max_len, i % 3));
    batch.class_labels.push_back(static_cast<int>(i % 2));
  }
  return batch;
}

// Every trainable tensor of the model, with non-trivial biases and
// layer-norm parameters so no gradient is structurally tiny.
inline EncoderWeights perturbed_weights(const ModelConfig& c) {
  EncoderWeights w = init_weights(c);
  Rng rng = derive_rng(c.seed, {91});
  for (auto& t : w.tensors()) {
    if (t.decay) continue;
    for (Eigen::Index i = 0; i < t.tensor->size(); ++i) {
      t.tensor->data()[i] += 0.2 * (uniform01(rng) - 0.5);
    }
  }
  return w;
}

inline double objective_loss(const EncoderWeights& w, const Batch& batch, Objective objective) {
  const auto out = forward(w, batch);
  if (objective == Objective::kClassify) return classification_loss(out.class_logits, batch.class_labels);
  return loss(out.mlm_logits, out.nsp_logits, batch).total();
}

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor) for every entry of every
// tensor, central differences with step h.
inline std::vector<TensorCheck> gradient_check(const EncoderWeights& w0, const Batch& batch,
                                               Objective objective, double h = 1e-5,
                                               double floor = 1e-6) {
  EncoderWeights w = w0;
  const auto analytic = gradients(w, batch, objective).grads;
  const auto grads = analytic.tensors();
  std::vector<TensorCheck> out;
  auto params = w.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    TensorCheck check{params[t].name, 0.0, 0};
    Matrix& m = *params[t].tensor;
    const Matrix& g = *grads[t].second;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + h;
      const double up = objective_loss(w, batch, objective);
      m.data()[i] = orig - h;
      const double down = objective_loss(w, batch, objective);
      m.data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double a = g.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      check.max_rel_error = std::max(check.max_rel_error, rel);
      ++check.entries;
    }
    out.push_back(check);
  }
  return out;
}

}  // namespace sublex::testing
