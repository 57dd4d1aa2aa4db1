// Copyright 2026 The TEA Toolkit Authors
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

namespace tea {

/// Error families raised by the library. Each maps to a stable CLI exit code
/// (see `exit_code`).
enum class ErrorKind {
  kShape,
  kInvalidMode,
  kInvalidArgument,
  kInvalidRank,
  kDecomposition,
  kNumerical,
  kParse,
  kData,
  kConfig,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};

class InvalidMode : public Error {
 public:
  explicit InvalidMode(const std::string& what)
      : Error(ErrorKind::kInvalidMode, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

class InvalidRank : public Error {
 public:
  explicit InvalidRank(const std::string& what)
      : Error(ErrorKind::kInvalidRank, what) {}
};

class DecompositionError : public Error {
 public:
  explicit DecompositionError(const std::string& what)
      : Error(ErrorKind::kDecomposition, what) {}
};

/// Raised when a loss or activation turns non-finite. `step` names the stage
/// that produced the first bad value.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& step, const std::string& what)
      : Error(ErrorKind::kNumerical, step + ": " + what), step_(step) {}

  const std::string& step() const noexcept { return step_; }

 private:
  std::string step_;
};

/// Malformed input text. `line` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(ErrorKind::kParse,
              line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

const char* error_kind_name(ErrorKind kind) noexcept;

/// Process exit code for an error family. 0 and 1 are reserved for success
/// and unexpected failures.
int exit_code(ErrorKind kind) noexcept;

}  // namespace tea
