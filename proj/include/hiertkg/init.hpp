// Copyright 2026 The HierTKG Authors.
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

#ifndef HIERTKG_INIT_HPP_
#define HIERTKG_INIT_HPP_

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace hiertkg::init {

// Entries drawn from U(-bound, bound).
inline Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols,
                               double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

// U(-1/sqrt(in), 1/sqrt(in)) for an [in x out] weight.
inline Eigen::MatrixXd fan_in(Eigen::Index in, Eigen::Index out,
                              std::mt19937_64& rng) {
  return uniform(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

}  // namespace hiertkg::init

#endif  // HIERTKG_INIT_HPP_
