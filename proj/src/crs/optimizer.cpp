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

#include "crsllm/crs/optimizer.hpp"

#include <cmath>

#include "crsllm/simd/kernels.hpp"

namespace crsllm::crs {

double Adam::step(const std::vector<ParameterBlock>& blocks) {
  const auto& k = simd::active();
  double sq = 0.0;
  for (const auto& b : blocks) sq += k.dot(b.grad.data(), b.grad.data(), b.grad.size());
  const double norm = std::sqrt(sq);
  if (config_.clip_norm > 0.0 && norm > config_.clip_norm) {
    const double s = config_.clip_norm / norm;
    for (const auto& b : blocks) {
      for (double& g : b.grad) g *= s;
    }
  }
  ++t_;
  simd::AdamCoefficients c;
  c.learning_rate = config_.learning_rate;
  c.beta1 = config_.beta1;
  c.beta2 = config_.beta2;
  c.epsilon = config_.epsilon;
  c.bias_correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  c.bias_correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (const auto& b : blocks) {
    Moments& st = state_[b.value.data()];
    if (st.m.size() != b.value.size()) {
      st.m.assign(b.value.size(), 0.0);
      st.v.assign(b.value.size(), 0.0);
    }
    k.adam(b.value.data(), b.grad.data(), st.m.data(), st.v.data(), b.value.size(), c);
  }
  return norm;
}

}  // namespace crsllm::crs
