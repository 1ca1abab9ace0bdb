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


// First-order optimizers over a fixed parameter list.

#ifndef HIERTKG_OPTIM_HPP_
#define HIERTKG_OPTIM_HPP_

#include <cstdint>
#include <vector>

#include "hiertkg/autograd.hpp"

namespace hiertkg::optim {

class Optimizer {
 public:
  explicit Optimizer(std::vector<ad::Parameter*> params)
      : params_(std::move(params)) {}
  virtual ~Optimizer() = default;

  // Applies one update from the accumulated gradients.
  virtual void step() = 0;
  void zero_grad();
  const std::vector<ad::Parameter*>& params() const { return params_; }

 protected:
  std::vector<ad::Parameter*> params_;
};

class Sgd : public Optimizer {
 public:
  Sgd(std::vector<ad::Parameter*> params, double lr)
      : Optimizer(std::move(params)), lr_(lr) {}
  void step() override;

 private:
  double lr_;
};

class Adam : public Optimizer {
 public:
  Adam(std::vector<ad::Parameter*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step() override;
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<ad::Matrix> m_, v_;
};

}  // namespace hiertkg::optim

#endif  // HIERTKG_OPTIM_HPP_
