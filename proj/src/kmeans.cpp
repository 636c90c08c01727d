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

#include "nacanon/kmeans.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "nacanon/common.hpp"

namespace nacanon {

std::size_t nearest_centroid(std::span<const double> v,
                             const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(v, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Matrix kmeans(const Matrix& data, std::size_t k, std::uint64_t seed,
              const KMeansOptions& opts) {
  const std::size_t n = data.rows();
  const std::size_t dim = data.cols();
  if (n < k) throw DataError("kmeans: fewer data points than clusters");

  Rng rng(seed);
  Matrix centroids(k, dim);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  {
    const std::size_t first = rng.uniform_int(n);
    for (std::size_t j = 0; j < dim; ++j) centroids[0][j] = data[first][j];
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = squared_distance(data.row(i), centroids.row(c - 1));
      if (d < d2[i]) d2[i] = d;
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = data[pick][j];
  }

  std::vector<std::size_t> assign(n, 0);
  std::vector<std::size_t> counts(k, 0);
  Matrix sums(k, dim);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(sums.data().begin(), sums.data().end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest_centroid(data.row(i), centroids);
      assign[i] = c;
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += data[i][j];
    }
    // Re-seed empty clusters to the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;
        const double d =
            squared_distance(data.row(i), centroids.row(assign[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[assign[far]];
      for (std::size_t j = 0; j < dim; ++j) sums[assign[far]][j] -= data[far][j];
      assign[far] = c;
      counts[c] = 1;
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] = data[far][j];
    }
    double shift = 0.0, norm = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double nc = sums[c][j] / static_cast<double>(counts[c]);
        const double dv = nc - centroids[c][j];
        shift += dv * dv;
        norm += nc * nc;
        centroids[c][j] = nc;
      }
    }
    if (norm > 0.0 && std::sqrt(shift / norm) < opts.shift_tolerance) break;
    if (norm == 0.0) break;
  }
  return centroids;
}

}  // namespace nacanon
