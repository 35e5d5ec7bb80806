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

#include <cstdint>
#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "crsllm/tasks/task.hpp"

namespace crsllm::crs {

// Parameters of a noisy test double: it answers correctly with probability
// `accuracy`, decided per request key from `seed`.
struct NoiseSpec {
  double accuracy = 1.0;
  std::uint64_t seed = 0;
  corpus::Category schema;                 // source of wrong attributes/values
  std::vector<std::string> response_pool;  // source of wrong responses
};

// Deterministic Bernoulli(accuracy) draw keyed by (seed, key).
bool noise_keeps_gold(double accuracy, std::uint64_t seed, const std::string& key);

// A well-formed output that differs from `gold` in every item:
//   understanding  each value replaced by another value of its attribute
//                  (empty-valued frames move to an attribute outside gold)
//   elicitation    the same number of attributes drawn from outside gold
//   generation     another response from the pool
// Throws PreconditionError for recommendation.
std::string wrong_output(tasks::TaskKind kind, const std::string& gold, const NoiseSpec& noise,
                         const std::string& key);

// A candidate letter other than `gold` among the first `n_candidates`.
char wrong_letter(char gold, std::size_t n_candidates, std::uint64_t seed, const std::string& key);

}  // namespace crsllm::crs
