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

#ifndef NACANON_KMEANS_HPP
#define NACANON_KMEANS_HPP

#include <cstdint>

#include "nacanon/matrix.hpp"

namespace nacanon {

struct KMeansOptions {
  int max_iterations = 50;
  double shift_tolerance = 1e-6;  // relative centroid shift
};

// k-means++ seeding followed by Lloyd iterations. Empty clusters are
// re-seeded to the point farthest from its assigned centroid.
// Throws DataError when data has fewer rows than k.
Matrix kmeans(const Matrix& data, std::size_t k, std::uint64_t seed,
              const KMeansOptions& opts = {});

// Index of the nearest centroid (ties break to the lowest index).
std::size_t nearest_centroid(std::span<const double> v, const Matrix& centroids);

}  // namespace nacanon

#endif  // NACANON_KMEANS_HPP
