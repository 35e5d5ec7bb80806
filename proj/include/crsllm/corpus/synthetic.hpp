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
#include "crsllm/corpus/validate.hpp"

namespace crsllm::corpus {

struct SyntheticCategorySpec {
  std::string id;
  std::string name;
  int attributes = 5;
  int values_per_attribute = 4;
};

struct SyntheticSpec {
  std::vector<SyntheticCategorySpec> categories;
  int products_per_category = 50;
  int dialogues_per_category = 200;
  // A round is one user turn followed by one system turn.
  int min_rounds = 2;
  int max_rounds = 5;
  std::uint64_t seed = 7;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  // Probability that an eliciting system turn carries an (attribute, "") frame.
  double system_frame_rate = 0.5;
  // Probability of recommending at an intermediate system turn once at least
  // one need is known. The final system turn always recommends.
  double recommend_rate = 0.35;
};

// Default category list: Beauty, Phones, Fashion, Shoes, Electronics (first n).
std::vector<SyntheticCategorySpec> default_categories(int n, int attributes,
                                                      int values_per_attribute);

// Largest attribute count / vocabulary size the built-in lexicon supports.
int max_synthetic_attributes();
int max_synthetic_values();

// Deterministic in `spec`. Throws PreconditionError when a category has fewer
// than 2 attributes or values, or when products_per_category < 21.
Corpus generate_synthetic_corpus(const SyntheticSpec& spec);

// Generator-level consistency: every recommendation matches the user frames
// accumulated before it, and the dialogue has at least one user frame, one
// elicitation label and one recommendation.
std::vector<Violation> consistency_violations(const Dialogue& dialogue,
                                              const Catalog& catalog);

}  // namespace crsllm::corpus
