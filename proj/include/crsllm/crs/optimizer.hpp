/*
 * Copyright 2026 The crsllm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <vector>

#include "crsllm/crs/backend.hpp"

namespace crsllm::crs {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
};

// Adam over flat parameter blocks. Moment buffers are keyed by the block's
// storage address, so blocks must not be reallocated between steps.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Returns the gradient norm before clipping.
  double step(const std::vector<ParameterBlock>& blocks);
  long steps() const { return t_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig config_;
  long t_ = 0;
  std::map<const double*, Moments> state_;
};

}  // namespace crsllm::crs
