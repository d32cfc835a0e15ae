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

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sublex/errors.hpp"
#include "sublex/model.hpp"

// Checkpoint layout (all integers and doubles little-endian):
//
//   bytes 0-7   magic "SUBLEXCK"
//   u32         format version (1)
//   u32         byte length N of the config block
//   N bytes     config as `key=value\n` lines, fixed key order
//   u32         number of arrays
//   per array:
//     u32       name length, then the name bytes
//     u64       rows
//     u64       cols
//     f64 x rows*cols, row-major
//
// Arrays appear in EncoderWeights::tensors() order.

namespace sublex {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'S', 'U', 'B', 'L', 'E', 'X', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("checkpoint truncated");
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string config_block(const ModelConfig& c) {
  std::ostringstream s;
  s << "vocab_size=" << c.vocab_size << '\n'
    << "hidden_dim=" << c.hidden_dim << '\n'
    << "num_layers=" << c.num_layers << '\n'
    << "num_heads=" << c.num_heads << '\n'
    << "ff_dim=" << c.ff_dim << '\n'
    << "max_len=" << c.max_len << '\n'
    << "dropout_rate=" << format_double(c.dropout_rate) << '\n'
    << "seed=" << c.seed << '\n'
    << "init_std=" << format_double(c.init_std) << '\n'
    << "layer_norm_eps=" << format_double(c.layer_norm_eps) << '\n'
    << "activation=gelu\n"
    << "layer_norm=post\n";
  return s.str();
}

inline ModelConfig parse_config_block(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed checkpoint config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw IoError("checkpoint config lacks " + k);
    return it->second;
  };
  ModelConfig c;
  try {
    c.vocab_size = std::stoull(need("vocab_size"));
    c.hidden_dim = std::stoull(need("hidden_dim"));
    c.num_layers = std::stoull(need("num_layers"));
    c.num_heads = std::stoull(need("num_heads"));
    c.ff_dim = std::stoull(need("ff_dim"));
    c.max_len = std::stoull(need("max_len"));
    c.dropout_rate = std::stod(need("dropout_rate"));
    c.seed = std::stoull(need("seed"));
    c.init_std = std::stod(need("init_std"));
    c.layer_norm_eps = std::stod(need("layer_norm_eps"));
  } catch (const std::logic_error&) {
    throw IoError("non-numeric value in checkpoint config");
  }
  return c;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const EncoderWeights& w) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  const std::string cfg = detail::config_block(w.config);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto tensors = w.tensors();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m->rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m->cols()));
    // Matrix is row-major, so the buffer is already in file order.
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m->size())));
  }
  if (!out) throw IoError("checkpoint write failed");
}

inline void save_checkpoint(const std::string& path, const EncoderWeights& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  save_checkpoint(out, w);
}

inline EncoderWeights load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError("not a checkpoint file");
  }
  const auto version = detail::get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto cfg_len = detail::get<std::uint32_t>(in);
  std::string cfg(cfg_len, '\0');
  if (!in.read(cfg.data(), cfg_len)) throw IoError("checkpoint truncated");
  EncoderWeights w = EncoderWeights::zeros(detail::parse_config_block(cfg));
  auto tensors = w.tensors();
  const auto n = detail::get<std::uint32_t>(in);
  if (n != tensors.size()) throw IoError("checkpoint array count does not match its config");
  for (auto& t : tensors) {
    const auto name_len = detail::get<std::uint32_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError("checkpoint truncated");
    if (name != t.name) throw IoError("checkpoint array '" + name + "' where '" + t.name + "' expected");
    const auto rows = detail::get<std::uint64_t>(in);
    const auto cols = detail::get<std::uint64_t>(in);
    if (rows != static_cast<std::uint64_t>(t.tensor->rows()) ||
        cols != static_cast<std::uint64_t>(t.tensor->cols())) {
      throw IoError("checkpoint array '" + name + "' has the wrong shape");
    }
    if (!in.read(reinterpret_cast<char*>(t.tensor->data()),
                 static_cast<std::streamsize>(sizeof(double) * rows * cols))) {
      throw IoError("checkpoint truncated");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after checkpoint");
  return w;
}

inline EncoderWeights load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path);
  return load_checkpoint(in);
}

}  // namespace sublex
