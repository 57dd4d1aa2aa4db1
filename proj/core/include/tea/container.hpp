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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tea/decomp.hpp"
#include "tea/tensor.hpp"

namespace tea::io {

/// Flat binary container. All integers and floats little-endian:
///
///   char[4]  magic "TEAF"
///   u32      version (1)
///   u32      kind (ContainerKind)
///   u32      order, then u64 × order   extents of the described tensor
///   u32      n_ranks, then u64 × n_ranks
///   u32      manifest length, then UTF-8 "key=value\n" lines
///   u32      n_blocks, then per block:
///              u32 name length, name bytes,
///              u32 block order, u64 × order extents,
///              f64 × ∏extents values in row-major order
enum class ContainerKind : std::uint32_t {
  kTensor = 0,
  kTucker = 1,
  kCp = 2,
  kTt = 3,
  kAttention = 4,
  kModel = 5,
  kWindows = 6,
};

inline constexpr std::uint32_t kContainerVersion = 1;

struct Block {
  std::string name;
  Tensor value;
};

struct Container {
  ContainerKind kind = ContainerKind::kTensor;
  Shape dims;
  std::vector<std::size_t> ranks;
  std::map<std::string, std::string> manifest;
  std::vector<Block> blocks;

  const Tensor& block(const std::string& name) const;
  bool has_block(const std::string& name) const;
};

const char* kind_name(ContainerKind kind);

void write(std::ostream& os, const Container& c);
Container read(std::istream& is);
void write_file(const std::filesystem::path& path, const Container& c);
Container read_file(const std::filesystem::path& path);

Container from_tensor(const Tensor& t);
Tensor to_tensor(const Container& c);

Container from_tucker(const decomp::TuckerFactors& f);
Container from_cp(const decomp::CpFactors& f);
Container from_tt(const decomp::TtFactors& f);
decomp::TuckerFactors to_tucker(const Container& c);
decomp::CpFactors to_cp(const Container& c);
decomp::TtFactors to_tt(const Container& c);

}  // namespace tea::io
