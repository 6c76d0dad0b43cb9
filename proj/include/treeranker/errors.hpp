// Copyright 2026 The TreeRanker Authors.
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

namespace treeranker {

// Root of every error the library throws. Callers that only care about
// "something in treeranker failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions (empty context, max_steps == 0...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UncoverableText : public Error {
 public:
  UncoverableText(std::string text, std::size_t position)
      : Error("no vocabulary token matches \"" + text + "\" at offset " +
              std::to_string(position)),
        text_(std::move(text)),
        position_(position) {}

  const std::string& text() const { return text_; }
  std::size_t position() const { return position_; }

 private:
  std::string text_;
  std::size_t position_;
};

class DuplicateCandidate : public Error {
 public:
  explicit DuplicateCandidate(const std::string& identifier)
      : Error("duplicate candidate: " + identifier) {}
};

class EmptyCandidateList : public Error {
 public:
  EmptyCandidateList() : Error("candidate list is empty") {}
};

class NotASharedPrefix : public Error {
 public:
  using Error::Error;
};

class EmptyMask : public Error {
 public:
  using Error::Error;
};

class MissingChildProbability : public Error {
 public:
  using Error::Error;
};

class MalformedSpec : public Error {
 public:
  using Error::Error;
};

class MalformedVocabulary : public Error {
 public:
  using Error::Error;
};

// Everything a model backend can raise. The CLI maps this family to exit 3.
class BackendError : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

class ContextTooLong : public BackendError {
 public:
  ContextTooLong(std::size_t length, std::size_t limit)
      : BackendError("context of " + std::to_string(length) +
                     " tokens exceeds backend window of " +
                     std::to_string(limit)) {}
  explicit ContextTooLong(const std::string& what) : BackendError(what) {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what = "input is empty")
      : Error(what) {}
};

class ZeroGenerated : public Error {
 public:
  ZeroGenerated() : Error("token efficiency needs at least one generated step") {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& detail)
      : Error("field '" + field + "': " + detail), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace treeranker
