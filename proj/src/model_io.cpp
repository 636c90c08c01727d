// Copyright 2026 nacanon authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nacanon/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "nacanon/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "model containers assume a little-endian host");

namespace nacanon {

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated model container: " + path);
  return v;
}

}  // namespace

void save_container(const std::string& path, const char magic[4],
                    const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(magic, 4);
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint32_t>(out, d);
    if (t.values.size() != t.size())
      throw DataError("tensor '" + name + "' size does not match dims");
    for (double v : t.values) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw IoError("short write: " + path);
}

TensorMap load_container(const std::string& path, const char magic[4]) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model container: " + path);
  char got[4];
  in.read(got, 4);
  if (!in || std::memcmp(got, magic, 4) != 0)
    throw FormatError("bad magic in " + path + " (expected " +
                      std::string(magic, 4) + ")");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kContainerVersion)
    throw FormatError("unsupported container version in " + path);
  const auto count = get<std::uint32_t>(in, path);
  TensorMap tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("truncated model container: " + path);
    const auto ndim = get<std::uint32_t>(in, path);
    NamedTensor t;
    t.dims.resize(ndim);
    for (auto& d : t.dims) d = get<std::uint32_t>(in, path);
    t.values.resize(t.size());
    for (auto& v : t.values) v = get<float>(in, path);
    tensors.emplace(std::move(name), std::move(t));
  }
  return tensors;
}

}  // namespace nacanon
