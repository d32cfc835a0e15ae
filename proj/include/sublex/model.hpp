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

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sublex/errors.hpp"
#include "sublex/pretrain_data.hpp"
#include "sublex/random.hpp"

namespace sublex {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ff_dim = 256;
  std::size_t max_len = 128;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;
  double init_std = 0.02;
  double layer_norm_eps = 1e-12;

  std::size_t head_dim() const { return hidden_dim / num_heads; }

  void validate() const {
    if (vocab_size < 5) throw InvalidConfig("model.vocab_size must be at least 5");
    if (hidden_dim == 0 || num_heads == 0 || num_layers == 0 || ff_dim == 0) {
      throw InvalidConfig("model dimensions must be positive");
    }
    if (hidden_dim % num_heads != 0) {
      throw InvalidConfig("model.hidden_dim (" + std::to_string(hidden_dim) +
                          ") is not divisible by model.num_heads (" + std::to_string(num_heads) + ")");
    }
    if (max_len < 2) throw InvalidConfig("model.max_len must be at least 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw InvalidConfig("model.dropout_rate must lie in [0, 1)");
    }
    if (!(init_std > 0.0) || !(layer_norm_eps > 0.0)) {
      throw InvalidConfig("model.init_std and layer_norm_eps must be positive");
    }
  }

  // BERT-Base shape.
  static ModelConfig base(std::size_t vocab_size) {
    ModelConfig c;
    c.vocab_size = vocab_size;
    c.hidden_dim = 768;
    c.num_layers = 12;
    c.num_heads = 12;
    c.ff_dim = 3072;
    c.max_len = 128;
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerWeights {
  Matrix query, key, value, output;      // H x H
  Matrix query_b, key_b, value_b, output_b;  // 1 x H
  Matrix attn_ln_g, attn_ln_b;           // 1 x H
  Matrix ffn_in, ffn_in_b;               // H x F, 1 x F
  Matrix ffn_out, ffn_out_b;             // F x H, 1 x H
  Matrix ffn_ln_g, ffn_ln_b;             // 1 x H
};

struct NamedTensor {
  std::string name;
  Matrix* tensor;
  bool decay;  // subject to weight decay
};

struct EncoderWeights {
  ModelConfig config;
  Matrix token_emb;     // V x H, also the MLM output projection
  Matrix position_emb;  // L x H
  Matrix segment_emb;   // 2 x H
  Matrix emb_ln_g, emb_ln_b;
  std::vector<LayerWeights> layers;
  Matrix mlm_bias;            // 1 x V
  Matrix pool, pool_b;        // H x H, 1 x H
  Matrix nsp, nsp_b;          // H x 2, 1 x 2
  Matrix classifier, classifier_b;  // H x 2, 1 x 2

  // Every tensor in a fixed order; the order defines the checkpoint layout.
  std::vector<NamedTensor> tensors() {
    std::vector<NamedTensor> t{
        {"embeddings/token", &token_emb, true},
        {"embeddings/position", &position_emb, true},
        {"embeddings/segment", &segment_emb, true},
        {"embeddings/ln/gamma", &emb_ln_g, false},
        {"embeddings/ln/beta", &emb_ln_b, false},
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + "/";
      auto& w = layers[l];
      t.push_back({p + "attention/query/kernel", &w.query, true});
      t.push_back({p + "attention/query/bias", &w.query_b, false});
      t.push_back({p + "attention/key/kernel", &w.key, true});
      t.push_back({p + "attention/key/bias", &w.key_b, false});
      t.push_back({p + "attention/value/kernel", &w.value, true});
      t.push_back({p + "attention/value/bias", &w.value_b, false});
      t.push_back({p + "attention/output/kernel", &w.output, true});
      t.push_back({p + "attention/output/bias", &w.output_b, false});
      t.push_back({p + "attention/ln/gamma", &w.attn_ln_g, false});
      t.push_back({p + "attention/ln/beta", &w.attn_ln_b, false});
      t.push_back({p + "ffn/in/kernel", &w.ffn_in, true});
      t.push_back({p + "ffn/in/bias", &w.ffn_in_b, false});
      t.push_back({p + "ffn/out/kernel", &w.ffn_out, true});
      t.push_back({p + "ffn/out/bias", &w.ffn_out_b, false});
      t.push_back({p + "ffn/ln/gamma", &w.ffn_ln_g, false});
      t.push_back({p + "ffn/ln/beta", &w.ffn_ln_b, false});
    }
    t.push_back({"mlm/bias", &mlm_bias, false});
    t.push_back({"pooler/kernel", &pool, true});
    t.push_back({"pooler/bias", &pool_b, false});
    t.push_back({"nsp/kernel", &nsp, true});
    t.push_back({"nsp/bias", &nsp_b, false});
    t.push_back({"classifier/kernel", &classifier, true});
    t.push_back({"classifier/bias", &classifier_b, false});
    return t;
  }

  std::vector<std::pair<std::string, const Matrix*>> tensors() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    for (const auto& nt : const_cast<EncoderWeights*>(this)->tensors()) {
      out.emplace_back(nt.name, nt.tensor);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : tensors()) n += static_cast<std::size_t>(m->size());
    return n;
  }

  bool all_finite() const {
    for (const auto& [name, m] : tensors()) {
      if (!m->allFinite()) return false;
    }
    return true;
  }

  // Same shapes, all zeros.
  static EncoderWeights zeros(const ModelConfig& c) {
    c.validate();
    const auto V = static_cast<Eigen::Index>(c.vocab_size);
    const auto H = static_cast<Eigen::Index>(c.hidden_dim);
    const auto L = static_cast<Eigen::Index>(c.max_len);
    const auto F = static_cast<Eigen::Index>(c.ff_dim);
    EncoderWeights w;
    w.config = c;
    w.token_emb = Matrix::Zero(V, H);
    w.position_emb = Matrix::Zero(L, H);
    w.segment_emb = Matrix::Zero(2, H);
    w.emb_ln_g = Matrix::Zero(1, H);
    w.emb_ln_b = Matrix::Zero(1, H);
    w.layers.resize(c.num_layers);
    for (auto& l : w.layers) {
      for (Matrix* m : {&l.query, &l.key, &l.value, &l.output}) *m = Matrix::Zero(H, H);
      for (Matrix* m : {&l.query_b, &l.key_b, &l.value_b, &l.output_b, &l.attn_ln_g, &l.attn_ln_b,
                        &l.ffn_out_b, &l.ffn_ln_g, &l.ffn_ln_b}) {
        *m = Matrix::Zero(1, H);
      }
      l.ffn_in = Matrix::Zero(H, F);
      l.ffn_in_b = Matrix::Zero(1, F);
      l.ffn_out = Matrix::Zero(F, H);
    }
    w.mlm_bias = Matrix::Zero(1, V);
    w.pool = Matrix::Zero(H, H);
    w.pool_b = Matrix::Zero(1, H);
    w.nsp = Matrix::Zero(H, 2);
    w.nsp_b = Matrix::Zero(1, 2);
    w.classifier = Matrix::Zero(H, 2);
    w.classifier_b = Matrix::Zero(1, 2);
    return w;
  }
};

inline bool operator==(const EncoderWeights& a, const EncoderWeights& b) {
  if (!(a.config == b.config)) return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].first != tb[i].first || ta[i].second->rows() != tb[i].second->rows() ||
        ta[i].second->cols() != tb[i].second->cols() || *ta[i].second != *tb[i].second) {
      return false;
    }
  }
  return true;
}

// Kernels and embeddings ~ truncated normal(0, init_std); layer-norm scales
// one; everything else zero.
inline EncoderWeights init_weights(const ModelConfig& config) {
  EncoderWeights w = EncoderWeights::zeros(config);
  Rng rng = derive_rng(config.seed, {0x1417});
  for (auto& t : w.tensors()) {
    if (t.name.ends_with("/gamma")) {
      t.tensor->setOnes();
    } else if (t.decay) {
      for (Eigen::Index i = 0; i < t.tensor->size(); ++i) {
        t.tensor->data()[i] = truncated_normal(rng, config.init_std);
      }
    }
  }
  return w;
}

// A batch of examples sharing one sequence length.
struct Batch {
  std::vector<PretrainExample> examples;
  std::vector<int> class_labels;  // classification only

  std::size_t size() const { return examples.size(); }
};

namespace detail {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

inline Matrix layer_norm(const Matrix& z, const Matrix& gamma, const Matrix& beta, double eps,
                         LayerNormCache* cache) {
  const Eigen::Index n = z.rows();
  const auto H = static_cast<double>(z.cols());
  Matrix xhat(n, z.cols());
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = z.row(r).sum() / H;
    const RowVector centered = z.row(r).array() - mu;
    const double var = centered.squaredNorm() / H;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = centered * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

inline Matrix layer_norm_backward(const Matrix& dy, const Matrix& gamma, const LayerNormCache& c,
                                  Matrix& dgamma, Matrix& dbeta) {
  dgamma.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  const auto H = static_cast<double>(dy.cols());
  Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
  Matrix dz(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / H;
    const double mean_dx = dxhat.row(r).dot(c.xhat.row(r)) / H;
    dz.row(r) = c.inv_std(r) * (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx);
  }
  return dz;
}

// Inverted dropout: kept entries are scaled by 1/(1-rate). An empty mask
// means dropout is off.
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng* rng) {
  if (!rng || rate <= 0.0) return {};
  Matrix m(rows, cols);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform01(*rng) < rate ? 0.0 : scale;
  return m;
}

inline Matrix apply_mask(const Matrix& x, const Matrix& mask) {
  if (mask.size() == 0) return x;
  return x.cwiseProduct(mask);
}

inline Matrix add_bias(Matrix x, const Matrix& b) {
  x.rowwise() += b.row(0);
  return x;
}

struct LayerCache {
  Matrix input;  // L x H
  Matrix q, k, v;
  std::vector<Matrix> probs;       // per head, L x L, before dropout
  std::vector<Matrix> prob_masks;  // per head dropout masks
  Matrix context;                  // L x H
  Matrix attn_mask;                // dropout on attention output
  LayerNormCache ln1;
  Matrix y1;
  Matrix ffn_pre;  // L x F
  Matrix ffn_act;
  Matrix ffn_mask;
  LayerNormCache ln2;
};

struct ExampleCache {
  Matrix emb_mask;
  LayerNormCache emb_ln;
  std::vector<LayerCache> layers;
  Matrix hidden;  // final L x H
  RowVector pooled;
};

inline void check_example_shape(const ModelConfig& c, const PretrainExample& ex) {
  const std::size_t L = ex.input_ids.size();
  if (L == 0 || L > c.max_len || ex.segment_ids.size() != L || ex.attention_mask.size() != L) {
    throw ShapeMismatch("example length " + std::to_string(L) +
                        " incompatible with model max_len " + std::to_string(c.max_len));
  }
  for (TokenId id : ex.input_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) {
      throw ShapeMismatch("token id " + std::to_string(id) + " outside model vocabulary");
    }
  }
  if (ex.attention_mask[0] != 1) throw ShapeMismatch("position 0 must be attended");
  for (int s : ex.segment_ids) {
    if (s != 0 && s != 1) throw ShapeMismatch("segment id must be 0 or 1");
  }
  for (int p : ex.mlm_positions) {
    if (p < 0 || static_cast<std::size_t>(p) >= L) throw ShapeMismatch("mlm position out of range");
  }
  for (TokenId id : ex.mlm_labels) {
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) {
      throw ShapeMismatch("mlm label outside model vocabulary");
    }
  }
}

inline void check_batch(const ModelConfig& c, const Batch& batch) {
  if (batch.examples.empty()) throw ShapeMismatch("empty batch");
  const std::size_t L = batch.examples.front().input_ids.size();
  for (const auto& ex : batch.examples) {
    if (ex.input_ids.size() != L) throw ShapeMismatch("batch mixes sequence lengths");
    check_example_shape(c, ex);
  }
}

// Runs the encoder on one example. `rng` enables dropout.
inline void encode_example(const EncoderWeights& w, const PretrainExample& ex, Rng* rng,
                           ExampleCache& cache) {
  const ModelConfig& c = w.config;
  const auto L = static_cast<Eigen::Index>(ex.input_ids.size());
  const auto H = static_cast<Eigen::Index>(c.hidden_dim);
  const auto heads = static_cast<Eigen::Index>(c.num_heads);
  const auto d = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  Matrix e(L, H);
  for (Eigen::Index i = 0; i < L; ++i) {
    e.row(i) = w.token_emb.row(ex.input_ids[i]) + w.position_emb.row(i) +
               w.segment_emb.row(ex.segment_ids[i]);
  }
  Matrix x = layer_norm(e, w.emb_ln_g, w.emb_ln_b, c.layer_norm_eps, &cache.emb_ln);
  cache.emb_mask = dropout_mask(L, H, c.dropout_rate, rng);
  x = apply_mask(x, cache.emb_mask);

  cache.layers.resize(w.layers.size());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const LayerWeights& lw = w.layers[l];
    LayerCache& lc = cache.layers[l];
    lc.input = x;
    lc.q = add_bias(x * lw.query, lw.query_b);
    lc.k = add_bias(x * lw.key, lw.key_b);
    lc.v = add_bias(x * lw.value, lw.value_b);
    lc.context.resize(L, H);
    lc.probs.resize(static_cast<std::size_t>(heads));
    lc.prob_masks.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index h = 0; h < heads; ++h) {
      Matrix s = lc.q.middleCols(h * d, d) * lc.k.middleCols(h * d, d).transpose() * scale;
      for (Eigen::Index j = 0; j < L; ++j) {
        if (ex.attention_mask[j] == 0) s.col(j).setConstant(kNegInf);
      }
      for (Eigen::Index i = 0; i < L; ++i) {
        const double mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp();
      }
      // Vectorized exp clamps -inf to a denormal rather than zero.
      for (Eigen::Index j = 0; j < L; ++j) {
        if (ex.attention_mask[j] == 0) s.col(j).setZero();
      }
      for (Eigen::Index i = 0; i < L; ++i) s.row(i) /= s.row(i).sum();
      auto& mask = lc.prob_masks[static_cast<std::size_t>(h)];
      mask = dropout_mask(L, L, c.dropout_rate, rng);
      lc.context.middleCols(h * d, d) = apply_mask(s, mask) * lc.v.middleCols(h * d, d);
      lc.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    Matrix attn = add_bias(lc.context * lw.output, lw.output_b);
    lc.attn_mask = dropout_mask(L, H, c.dropout_rate, rng);
    lc.y1 = layer_norm(x + apply_mask(attn, lc.attn_mask), lw.attn_ln_g, lw.attn_ln_b,
                       c.layer_norm_eps, &lc.ln1);
    lc.ffn_pre = add_bias(lc.y1 * lw.ffn_in, lw.ffn_in_b);
    lc.ffn_act = lc.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix f = add_bias(lc.ffn_act * lw.ffn_out, lw.ffn_out_b);
    lc.ffn_mask = dropout_mask(L, H, c.dropout_rate, rng);
    x = layer_norm(lc.y1 + apply_mask(f, lc.ffn_mask), lw.ffn_ln_g, lw.ffn_ln_b, c.layer_norm_eps,
                   &lc.ln2);
  }
  cache.hidden = std::move(x);
  cache.pooled = ((cache.hidden.row(0) * w.pool) + w.pool_b.row(0)).array().tanh().matrix();
}

// Backpropagates d(loss)/d(hidden) and d(loss)/d(pooled) into `g`.
inline void backprop_example(const EncoderWeights& w, const PretrainExample& ex,
                             const ExampleCache& cache, Matrix d_hidden, const RowVector& d_pooled,
                             EncoderWeights& g) {
  const ModelConfig& c = w.config;
  const auto L = static_cast<Eigen::Index>(ex.input_ids.size());
  const auto heads = static_cast<Eigen::Index>(c.num_heads);
  const auto d = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  // Pooler.
  const RowVector du = d_pooled.array() * (1.0 - cache.pooled.array().square());
  g.pool += cache.hidden.row(0).transpose() * du;
  g.pool_b.row(0) += du;
  d_hidden.row(0) += du * w.pool.transpose();

  Matrix dx = std::move(d_hidden);
  for (std::size_t li = w.layers.size(); li-- > 0;) {
    const LayerWeights& lw = w.layers[li];
    const LayerCache& lc = cache.layers[li];
    LayerWeights& lg = g.layers[li];

    // Feed-forward block.
    Matrix dz2 = layer_norm_backward(dx, lw.ffn_ln_g, lc.ln2, lg.ffn_ln_g, lg.ffn_ln_b);
    Matrix dy1 = dz2;
    const Matrix df = apply_mask(dz2, lc.ffn_mask);
    lg.ffn_out += lc.ffn_act.transpose() * df;
    lg.ffn_out_b.row(0) += df.colwise().sum();
    Matrix dpre = (df * lw.ffn_out.transpose()).cwiseProduct(
        lc.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    lg.ffn_in += lc.y1.transpose() * dpre;
    lg.ffn_in_b.row(0) += dpre.colwise().sum();
    dy1 += dpre * lw.ffn_in.transpose();

    // Attention block.
    Matrix dz1 = layer_norm_backward(dy1, lw.attn_ln_g, lc.ln1, lg.attn_ln_g, lg.attn_ln_b);
    Matrix dinput = dz1;
    const Matrix da = apply_mask(dz1, lc.attn_mask);
    lg.output += lc.context.transpose() * da;
    lg.output_b.row(0) += da.colwise().sum();
    const Matrix dctx = da * lw.output.transpose();

    const auto H = static_cast<Eigen::Index>(c.hidden_dim);
    Matrix dq(L, H), dk(L, H), dv(L, H);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Matrix& p = lc.probs[static_cast<std::size_t>(h)];
      const Matrix& mask = lc.prob_masks[static_cast<std::size_t>(h)];
      const Matrix pd = apply_mask(p, mask);
      const auto dctx_h = dctx.middleCols(h * d, d);
      dv.middleCols(h * d, d) = pd.transpose() * dctx_h;
      const Matrix dp = apply_mask(dctx_h * lc.v.middleCols(h * d, d).transpose(), mask);
      Matrix ds = p.cwiseProduct(dp);
      const Eigen::VectorXd row_dot = ds.rowwise().sum();
      ds -= p.cwiseProduct(row_dot.replicate(1, L));
      ds *= scale;
      dq.middleCols(h * d, d) = ds * lc.k.middleCols(h * d, d);
      dk.middleCols(h * d, d) = ds.transpose() * lc.q.middleCols(h * d, d);
    }
    lg.query += lc.input.transpose() * dq;
    lg.key += lc.input.transpose() * dk;
    lg.value += lc.input.transpose() * dv;
    lg.query_b.row(0) += dq.colwise().sum();
    lg.key_b.row(0) += dk.colwise().sum();
    lg.value_b.row(0) += dv.colwise().sum();
    dinput += dq * lw.query.transpose() + dk * lw.key.transpose() + dv * lw.value.transpose();
    dx = std::move(dinput);
  }

  // Embeddings.
  const Matrix de = layer_norm_backward(apply_mask(dx, cache.emb_mask), w.emb_ln_g, cache.emb_ln,
                                        g.emb_ln_g, g.emb_ln_b);
  for (Eigen::Index i = 0; i < L; ++i) {
    g.token_emb.row(ex.input_ids[i]) += de.row(i);
    g.position_emb.row(i) += de.row(i);
    g.segment_emb.row(ex.segment_ids[i]) += de.row(i);
  }
}

inline RowVector softmax(const RowVector& logits) {
  RowVector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

// Cross-entropy of one row of logits against `label`.
inline double cross_entropy(const RowVector& logits, int label) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits(label);
}

}  // namespace detail

struct ForwardOutput {
  std::vector<Matrix> mlm_logits;  // per example: |mlm_positions| x V
  Matrix nsp_logits;               // B x 2
  Matrix pooled;                   // B x H
  Matrix class_logits;             // B x 2
  std::vector<Matrix> hidden;      // per example: L x H
};

// Deterministic forward pass (dropout off).
inline ForwardOutput forward(const EncoderWeights& w, const Batch& batch) {
  detail::check_batch(w.config, batch);
  const auto B = static_cast<Eigen::Index>(batch.size());
  ForwardOutput out;
  out.nsp_logits.resize(B, 2);
  out.class_logits.resize(B, 2);
  out.pooled.resize(B, static_cast<Eigen::Index>(w.config.hidden_dim));
  detail::ExampleCache cache;
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& ex = batch.examples[static_cast<std::size_t>(b)];
    detail::encode_example(w, ex, nullptr, cache);
    Matrix logits(static_cast<Eigen::Index>(ex.mlm_positions.size()), w.token_emb.rows());
    for (std::size_t k = 0; k < ex.mlm_positions.size(); ++k) {
      logits.row(static_cast<Eigen::Index>(k)) =
          cache.hidden.row(ex.mlm_positions[k]) * w.token_emb.transpose() + w.mlm_bias.row(0);
    }
    out.mlm_logits.push_back(std::move(logits));
    out.pooled.row(b) = cache.pooled;
    out.nsp_logits.row(b) = cache.pooled * w.nsp + w.nsp_b.row(0);
    out.class_logits.row(b) = cache.pooled * w.classifier + w.classifier_b.row(0);
    out.hidden.push_back(cache.hidden);
  }
  return out;
}

// Attention probabilities of every layer and head for one example
// (layer-major, then head), dropout off.
inline std::vector<Matrix> attention_probabilities(const EncoderWeights& w,
                                                   const PretrainExample& ex) {
  detail::check_example_shape(w.config, ex);
  detail::ExampleCache cache;
  detail::encode_example(w, ex, nullptr, cache);
  std::vector<Matrix> out;
  for (auto& lc : cache.layers) {
    for (auto& p : lc.probs) out.push_back(p);
  }
  return out;
}

inline Matrix classify_forward(const EncoderWeights& w, const Batch& batch) {
  return forward(w, batch).class_logits;
}

struct LossParts {
  double mlm = 0.0;
  double nsp = 0.0;
  double total() const { return mlm + nsp; }
};

// Mean cross-entropy over every masked position of the batch.
inline double mlm_loss(const std::vector<Matrix>& mlm_logits, const Batch& batch) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& labels = batch.examples[b].mlm_labels;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      sum += detail::cross_entropy(mlm_logits[b].row(static_cast<Eigen::Index>(k)), labels[k]);
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline double nsp_loss(const Matrix& nsp_logits, const Batch& batch) {
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    sum += detail::cross_entropy(nsp_logits.row(static_cast<Eigen::Index>(b)),
                                 static_cast<int>(batch.examples[b].nsp_label));
  }
  return batch.size() ? sum / static_cast<double>(batch.size()) : 0.0;
}

inline LossParts loss(const std::vector<Matrix>& mlm_logits, const Matrix& nsp_logits,
                      const Batch& batch) {
  if (mlm_logits.size() != batch.size() || static_cast<std::size_t>(nsp_logits.rows()) != batch.size()) {
    throw ShapeMismatch("logits do not match batch size");
  }
  return {mlm_loss(mlm_logits, batch), nsp_loss(nsp_logits, batch)};
}

inline double classification_loss(const Matrix& class_logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(class_logits.rows()) != labels.size()) {
    throw ShapeMismatch("class logits do not match label count");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    sum += detail::cross_entropy(class_logits.row(static_cast<Eigen::Index>(b)), labels[b]);
  }
  return labels.empty() ? 0.0 : sum / static_cast<double>(labels.size());
}

struct GradientResult {
  double loss = 0.0;
  EncoderWeights grads;
};

enum class Objective { kPretrain, kClassify };

// Loss and exact gradients. `dropout_rng` (nullable) enables dropout.
// Examples are accumulated in batch order, so results are reproducible.
inline GradientResult gradients(const EncoderWeights& w, const Batch& batch, Objective objective,
                                Rng* dropout_rng = nullptr) {
  detail::check_batch(w.config, batch);
  if (objective == Objective::kClassify && batch.class_labels.size() != batch.size()) {
    throw ShapeMismatch("classification batch needs one label per example");
  }
  GradientResult r{0.0, EncoderWeights::zeros(w.config)};
  EncoderWeights& g = r.grads;
  const auto B = static_cast<double>(batch.size());
  std::size_t n_masked = 0;
  for (const auto& ex : batch.examples) n_masked += ex.mlm_positions.size();

  detail::ExampleCache cache;
  for (const auto& ex : batch.examples) {
    detail::encode_example(w, ex, dropout_rng, cache);
    Matrix d_hidden = Matrix::Zero(cache.hidden.rows(), cache.hidden.cols());
    RowVector d_pooled = RowVector::Zero(cache.hidden.cols());
    const std::size_t b = static_cast<std::size_t>(&ex - batch.examples.data());

    if (objective == Objective::kPretrain) {
      for (std::size_t k = 0; k < ex.mlm_positions.size(); ++k) {
        const int pos = ex.mlm_positions[k];
        const RowVector h = cache.hidden.row(pos);
        const RowVector logits = h * w.token_emb.transpose() + w.mlm_bias.row(0);
        r.loss += detail::cross_entropy(logits, ex.mlm_labels[k]) / static_cast<double>(n_masked);
        RowVector dl = detail::softmax(logits);
        dl(ex.mlm_labels[k]) -= 1.0;
        dl /= static_cast<double>(n_masked);
        d_hidden.row(pos) += dl * w.token_emb;
        g.token_emb += dl.transpose() * h;
        g.mlm_bias.row(0) += dl;
      }
      const RowVector logits = cache.pooled * w.nsp + w.nsp_b.row(0);
      const int label = static_cast<int>(ex.nsp_label);
      r.loss += detail::cross_entropy(logits, label) / B;
      RowVector dl = detail::softmax(logits);
      dl(label) -= 1.0;
      dl /= B;
      g.nsp += cache.pooled.transpose() * dl;
      g.nsp_b.row(0) += dl;
      d_pooled += dl * w.nsp.transpose();
    } else {
      const RowVector logits = cache.pooled * w.classifier + w.classifier_b.row(0);
      const int label = batch.class_labels[b];
      r.loss += detail::cross_entropy(logits, label) / B;
      RowVector dl = detail::softmax(logits);
      dl(label) -= 1.0;
      dl /= B;
      g.classifier += cache.pooled.transpose() * dl;
      g.classifier_b.row(0) += dl;
      d_pooled += dl * w.classifier.transpose();
    }
    detail::backprop_example(w, ex, cache, std::move(d_hidden), d_pooled, g);
  }
  return r;
}

// Pretraining-objective gradients with dropout off.
inline GradientResult backward(const EncoderWeights& w, const Batch& batch) {
  return gradients(w, batch, Objective::kPretrain, nullptr);
}

}  // namespace sublex
