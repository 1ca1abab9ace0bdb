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


// Shared helpers for the unit and acceptance tests.

#ifndef HIERTKG_TESTS_TEST_UTIL_HPP_
#define HIERTKG_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hiertkg/autograd.hpp"

namespace hiertkg::testing {

using ad::Matrix;

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  }
  return m;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
};

// Central differences (step h) against Tape::backward for every parameter.
// `loss` builds a fresh tape and returns the 1x1 loss Var; it is called with
// a tape it should record on. Error per parameter is
// ||g - fd|| / max(||g||, ||fd||, floor).
inline GradCheck check_gradients(
    const std::vector<ad::Parameter*>& params,
    const std::function<ad::Var(ad::Tape&)>& loss, double h = 1e-5,
    double floor = 1e-7) {
  for (ad::Parameter* p : params) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&]() {
    ad::Tape tape(false);
    return loss(tape).item();
  };
  GradCheck out;
  for (ad::Parameter* p : params) {
    Matrix fd(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double x = p->value.data()[i];
      p->value.data()[i] = x + h;
      const double up = eval();
      p->value.data()[i] = x - h;
      const double down = eval();
      p->value.data()[i] = x;
      fd.data()[i] = (up - down) / (2.0 * h);
    }
    const double denom =
        std::max({p->grad.norm(), fd.norm(), floor});
    const double err = (p->grad - fd).norm() / denom;
    if (err > out.max_rel_error) {
      out.max_rel_error = err;
      out.worst = p->name;
    }
  }
  return out;
}

}  // namespace hiertkg::testing

#endif  // HIERTKG_TESTS_TEST_UTIL_HPP_
