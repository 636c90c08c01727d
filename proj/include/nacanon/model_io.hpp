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

#ifndef NACANON_MODEL_IO_HPP
#define NACANON_MODEL_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nacanon {

// Shared binary model container: 4-byte magic, u32 format version, then a
// named-tensor index with little-endian f32 payloads. All model files
// ("NACQ", "SEMQ", "CLMQ", "FLMQ", "POOL") use this layout.
struct NamedTensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;  // serialized as f32

  std::size_t size() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

inline constexpr std::uint32_t kContainerVersion = 1;

using TensorMap = std::map<std::string, NamedTensor>;

void save_container(const std::string& path, const char magic[4],
                    const TensorMap& tensors);

// Throws FormatError on bad magic/version/layout, IoError on missing file.
TensorMap load_container(const std::string& path, const char magic[4]);

}  // namespace nacanon

#endif  // NACANON_MODEL_IO_HPP
