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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sublex {

// Base class for every data/validation failure raised by the library. The CLI
// maps these to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const std::string& path)
      : Error("file not found: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Line numbers are 1-based.
class InvalidEncoding : public Error {
 public:
  explicit InvalidEncoding(std::size_t line)
      : Error("invalid UTF-8 at line " + std::to_string(line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TargetTooSmall : public Error {
 public:
  TargetTooSmall(std::size_t target, std::size_t required)
      : Error("target vocabulary size " + std::to_string(target) +
              " cannot hold the " + std::to_string(required) +
              " mandatory tokens"),
        target_(target),
        required_(required) {}
  std::size_t target() const { return target_; }
  std::size_t required() const { return required_; }

 private:
  std::size_t target_;
  std::size_t required_;
};

class UncoveredCharacter : public Error {
 public:
  UncoveredCharacter(std::string word, std::string ch)
      : Error("character '" + ch + "' of word '" + word +
              "' is not covered by the model"),
        word_(std::move(word)),
        ch_(std::move(ch)) {}
  const std::string& word() const { return word_; }
  const std::string& character() const { return ch_; }

 private:
  std::string word_;
  std::string ch_;
};

class IdOutOfRange : public Error {
 public:
  IdOutOfRange(std::size_t id, std::size_t size)
      : Error("token id " + std::to_string(id) + " out of range for vocabulary of size " +
              std::to_string(size)),
        id_(id) {}
  std::size_t id() const { return id_; }

 private:
  std::size_t id_;
};

class InsufficientDocuments : public Error {
 public:
  explicit InsufficientDocuments(std::size_t n)
      : Error("next-sentence pairs need at least 2 documents, got " + std::to_string(n)) {}
};

class EmptySegment : public Error {
 public:
  EmptySegment() : Error("segment is empty") {}
};

// Record indices are 0-based.
class CorruptRecord : public Error {
 public:
  CorruptRecord(std::size_t index, const std::string& why)
      : Error("corrupt record " + std::to_string(index) + ": " + why), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t data_len, std::size_t model_len)
      : Error("example length " + std::to_string(data_len) +
              " does not match model max_len " + std::to_string(model_len)) {}
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(std::size_t step)
      : Error("non-finite loss at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("dataset is empty") {}
};

class DatasetTooSmall : public Error {
 public:
  explicit DatasetTooSmall(std::size_t n)
      : Error("dataset of " + std::to_string(n) + " examples is too small to split") {}
};

}  // namespace sublex
