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

#include "tea/errors.hpp"

namespace tea {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kShape: return "ShapeError";
    case ErrorKind::kInvalidMode: return "InvalidMode";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kInvalidRank: return "InvalidRank";
    case ErrorKind::kDecomposition: return "DecompositionError";
    case ErrorKind::kNumerical: return "NumericalError";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kData: return "DataError";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidRank: return 2;
    case ErrorKind::kParse: return 3;
    case ErrorKind::kData: return 4;
    case ErrorKind::kConfig: return 5;
    case ErrorKind::kNumerical: return 6;
    case ErrorKind::kShape: return 7;
    case ErrorKind::kInvalidArgument: return 8;
    case ErrorKind::kInvalidMode: return 9;
    case ErrorKind::kDecomposition: return 10;
    case ErrorKind::kIo: return 11;
  }
  return 1;
}

}  // namespace tea
