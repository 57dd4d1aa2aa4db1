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
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tea::cli {

/// Exit status of gradcheck and bench when a check fails. Error families use
/// tea::exit_code; anything unexpected exits with 1.
inline constexpr int kCheckFailed = 12;
inline constexpr int kUnexpected = 1;

struct DecomposeArgs {
  std::string input;
  std::string kind = "tucker";  // tucker | cp | tt
  std::string ranks;            // comma-separated; a single value for cp
  std::string algorithm = "hosvd";
  std::optional<double> eps;    // tt only
  std::string output;           // defaults to <input stem>.<kind>.teaf
  bool report = false;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string checkpoint;
  std::string split = "test";
  bool with_control = false;
  bool with_baseline = false;
  std::string config;  // overrides the config stored in the checkpoint
};

struct MakeTensorArgs {
  std::string kind = "cp";  // cp | tucker | random
  std::string shape = "8,8,8";
  std::string rank = "3";
  std::uint64_t seed = 1;
  std::string output;
};

int cmd_decompose(const DecomposeArgs& args, std::ostream& out);
int cmd_train(const std::string& config, bool with_control, std::ostream& out, std::ostream& log);
int cmd_eval(const EvalArgs& args, std::ostream& out);
int cmd_gradcheck(const std::string& config, std::ostream& out);
int cmd_bench(const std::string& config, std::ostream& out);
int cmd_synth(std::size_t rows, std::uint64_t seed, const std::string& output, std::ostream& out);
int cmd_pack(const std::string& csv, const std::string& output, std::ostream& out);
int cmd_make_tensor(const MakeTensorArgs& args, std::ostream& out);

/// Parses argv and dispatches. Errors become one JSON line on `err`:
/// {"error": <family>, "exit_code": <n>, "message": <text>}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tea::cli
