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

#include <cmath>

#include "doctest.h"
#include "nacanon/common.hpp"
#include "nacanon/kmeans.hpp"

using namespace nacanon;

TEST_CASE("k = 1 yields the data mean") {
  Matrix data;
  data.append_row(std::vector<double>{1.0, 2.0});
  data.append_row(std::vector<double>{3.0, 6.0});
  data.append_row(std::vector<double>{5.0, 4.0});
  const Matrix c = kmeans(data, 1, 42);
  REQUIRE(c.rows() == 1);
  CHECK(c[0][0] == doctest::Approx(3.0));
  CHECK(c[0][1] == doctest::Approx(4.0));
}

TEST_CASE("k distinct support points reach zero error") {
  // Four distinct vectors, each repeated; Lloyd must land exactly on them.
  Matrix data;
  const std::vector<std::vector<double>> pts = {
      {0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}, {10.0, 10.0}};
  for (int rep = 0; rep < 5; ++rep)
    for (const auto& p : pts) data.append_row(p);
  const Matrix c = kmeans(data, 4, 1);
  double err = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const std::size_t j = nearest_centroid(data.row(i), c);
    err += squared_distance(data.row(i), c.row(j));
  }
  CHECK(err == doctest::Approx(0.0));
}

TEST_CASE("nearest centroid ties break to the lowest index") {
  Matrix c;
  c.append_row(std::vector<double>{0.0});
  c.append_row(std::vector<double>{0.0});
  c.append_row(std::vector<double>{2.0});
  const std::vector<double> v = {1.0};  // equidistant to all three
  CHECK(nearest_centroid(v, c) == 0);
}

TEST_CASE("kmeans is deterministic given the seed") {
  Rng rng(5);
  Matrix data;
  for (int i = 0; i < 200; ++i)
    data.append_row(std::vector<double>{rng.normal(), rng.normal()});
  const Matrix a = kmeans(data, 8, 99);
  const Matrix b = kmeans(data, 8, 99);
  REQUIRE(a.rows() == b.rows());
  CHECK(a.data() == b.data());
}

TEST_CASE("fewer points than clusters is a data error") {
  Matrix data;
  data.append_row(std::vector<double>{1.0});
  CHECK_THROWS_AS(kmeans(data, 2, 0), DataError);
}
