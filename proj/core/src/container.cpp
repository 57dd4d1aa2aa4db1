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

#include "tea/container.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tea/errors.hpp"

namespace tea::io {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'E', 'A', 'F'};
// Guards against absurd allocations when reading corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_shape(std::ostream& os, const std::vector<std::size_t>& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  for (auto d : s) put_u64(os, d);
}

std::uint64_t get_bytes(std::istream& is, int n) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), n)) throw ParseError("container: unexpected end of input");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_bytes(is, 4)); }
std::uint64_t get_u64(std::istream& is) { return get_bytes(is, 8); }

std::string get_string(std::istream& is) {
  const auto n = get_u32(is);
  if (n > (1u << 24)) throw ParseError("container: string length out of range");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw ParseError("container: unexpected end of input");
  return s;
}

std::vector<std::size_t> get_shape(std::istream& is) {
  const auto n = get_u32(is);
  if (n > 64) throw ParseError("container: order out of range");
  std::vector<std::size_t> s(n);
  for (auto& d : s) d = static_cast<std::size_t>(get_u64(is));
  return s;
}

std::string encode_manifest(const std::map<std::string, std::string>& m) {
  std::string out;
  for (const auto& [k, v] : m) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw InvalidArgument("container: manifest entries must be single-line key=value");
    }
    out += k + "=" + v + "\n";
  }
  return out;
}

std::map<std::string, std::string> decode_manifest(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("container: malformed manifest line");
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

void require_kind(const Container& c, ContainerKind kind) {
  if (c.kind != kind) {
    throw ParseError(std::string("container holds ") + kind_name(c.kind) + ", expected " +
                     kind_name(kind));
  }
}

Matrix as_matrix(const Tensor& t, const std::string& name) {
  if (t.order() != 2) throw ParseError("container: block " + name + " is not a matrix");
  return Matrix::from_tensor(t);
}

}  // namespace

const Tensor& Container::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.value;
  }
  throw ParseError("container: missing block '" + name + "'");
}

bool Container::has_block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

const char* kind_name(ContainerKind kind) {
  switch (kind) {
    case ContainerKind::kTensor: return "tensor";
    case ContainerKind::kTucker: return "tucker";
    case ContainerKind::kCp: return "cp";
    case ContainerKind::kTt: return "tt";
    case ContainerKind::kAttention: return "attn";
    case ContainerKind::kModel: return "model";
    case ContainerKind::kWindows: return "windows";
  }
  return "unknown";
}

void write(std::ostream& os, const Container& c) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kContainerVersion);
  put_u32(os, static_cast<std::uint32_t>(c.kind));
  put_shape(os, c.dims);
  put_shape(os, c.ranks);
  put_string(os, encode_manifest(c.manifest));
  put_u32(os, static_cast<std::uint32_t>(c.blocks.size()));
  for (const auto& b : c.blocks) {
    put_string(os, b.name);
    put_shape(os, b.value.shape());
    for (double v : b.value.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw IoError("container: write failed");
}

Container read(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ParseError("container: bad magic");
  }
  const auto version = get_u32(is);
  if (version != kContainerVersion) {
    throw ParseError("container: unsupported version " + std::to_string(version));
  }
  Container c;
  const auto kind = get_u32(is);
  if (kind > static_cast<std::uint32_t>(ContainerKind::kWindows)) {
    throw ParseError("container: unknown kind " + std::to_string(kind));
  }
  c.kind = static_cast<ContainerKind>(kind);
  c.dims = get_shape(is);
  c.ranks = get_shape(is);
  c.manifest = decode_manifest(get_string(is));
  const auto n_blocks = get_u32(is);
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    Block b;
    b.name = get_string(is);
    Shape shape = get_shape(is);
    std::uint64_t count = 1;
    for (auto d : shape) {
      if (d == 0) throw ParseError("container: zero extent in block " + b.name);
      count *= d;
      if (count > kMaxElements) throw ParseError("container: block " + b.name + " too large");
    }
    std::vector<double> data(count);
    for (auto& v : data) v = std::bit_cast<double>(get_u64(is));
    b.value = Tensor(std::move(shape), std::move(data));
    c.blocks.push_back(std::move(b));
  }
  return c;
}

void write_file(const std::filesystem::path& path, const Container& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write(os, c);
}

Container read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read(is);
}

Container from_tensor(const Tensor& t) {
  Container c;
  c.kind = ContainerKind::kTensor;
  c.dims = t.shape();
  c.blocks.push_back({"data", t});
  return c;
}

Tensor to_tensor(const Container& c) {
  require_kind(c, ContainerKind::kTensor);
  return c.block("data");
}

Container from_tucker(const decomp::TuckerFactors& f) {
  Container c;
  c.kind = ContainerKind::kTucker;
  for (const auto& u : f.loadings) c.dims.push_back(u.rows());
  c.ranks = f.ranks();
  c.blocks.push_back({"core", f.core});
  for (std::size_t m = 0; m < f.loadings.size(); ++m) {
    c.blocks.push_back({"U" + std::to_string(m), f.loadings[m].as_tensor()});
  }
  return c;
}

Container from_cp(const decomp::CpFactors& f) {
  Container c;
  c.kind = ContainerKind::kCp;
  for (const auto& u : f.loadings) c.dims.push_back(u.rows());
  c.ranks = {f.rank()};
  c.blocks.push_back({"weights", Tensor({f.rank()}, f.weights)});
  for (std::size_t m = 0; m < f.loadings.size(); ++m) {
    c.blocks.push_back({"U" + std::to_string(m), f.loadings[m].as_tensor()});
  }
  return c;
}

Container from_tt(const decomp::TtFactors& f) {
  Container c;
  c.kind = ContainerKind::kTt;
  c.dims = f.shape();
  c.ranks = f.ranks();
  for (std::size_t k = 0; k < f.cores.size(); ++k) {
    c.blocks.push_back({"C" + std::to_string(k), f.cores[k]});
  }
  c.blocks.push_back({"terminal", f.terminal});
  return c;
}

decomp::TuckerFactors to_tucker(const Container& c) {
  require_kind(c, ContainerKind::kTucker);
  decomp::TuckerFactors f;
  f.core = c.block("core");
  for (std::size_t m = 0; m < c.dims.size(); ++m) {
    const std::string name = "U" + std::to_string(m);
    f.loadings.push_back(as_matrix(c.block(name), name));
  }
  return f;
}

decomp::CpFactors to_cp(const Container& c) {
  require_kind(c, ContainerKind::kCp);
  decomp::CpFactors f;
  f.weights = c.block("weights").values();
  for (std::size_t m = 0; m < c.dims.size(); ++m) {
    const std::string name = "U" + std::to_string(m);
    f.loadings.push_back(as_matrix(c.block(name), name));
  }
  return f;
}

decomp::TtFactors to_tt(const Container& c) {
  require_kind(c, ContainerKind::kTt);
  decomp::TtFactors f;
  for (std::size_t k = 0; k < c.dims.size(); ++k) {
    f.cores.push_back(c.block("C" + std::to_string(k)));
  }
  f.terminal = c.block("terminal");
  return f;
}

}  // namespace tea::io
