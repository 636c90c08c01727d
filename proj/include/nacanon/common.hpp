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

#ifndef NACANON_COMMON_HPP
#define NACANON_COMMON_HPP

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nacanon {

// Error categories. The C API maps each subclass to a distinct status code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Bad inputs to an otherwise healthy component (too-short audio,
// out-of-range tokens, insufficient training data, dimension mismatch).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, int step)
      : std::runtime_error(what), step(step) {}
  int step;
};

// Deterministic RNG used everywhere. We draw from mt19937_64 directly
// instead of <random> distributions so streams are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(splitmix(seed)), s2_(splitmix(s_)) {}

  std::uint64_t next_u64() {
    // xorshift128+; small state, good enough for sampling and k-means++.
    std::uint64_t x = s_;
    const std::uint64_t y = s2_;
    s_ = y;
    x ^= x << 23;
    s2_ = x ^ y ^ (x >> 17) ^ (y >> 26);
    return s2_ + y;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Modulo bias is negligible for the small n used here.
    return next_u64() % n;
  }

  double normal();  // Box-Muller, cached pair.

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }
  std::uint64_t s_, s2_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// 64-bit FNV-1a over the UTF-8 of the arguments joined with unit
// separators (0x1f). Used for prompt selection and derived seeds so that
// runs are reproducible from one master seed.
std::uint64_t stable_hash(std::initializer_list<std::string_view> parts);

inline std::uint64_t stable_hash(std::uint64_t seed, std::string_view a) {
  return stable_hash({std::to_string(seed), a});
}
inline std::uint64_t stable_hash(std::uint64_t seed, std::string_view a,
                                 std::string_view b) {
  return stable_hash({std::to_string(seed), a, b});
}

}  // namespace nacanon

#endif  // NACANON_COMMON_HPP
