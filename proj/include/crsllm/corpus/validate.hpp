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

#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"

namespace crsllm::corpus {

struct Violation {
  // Stable machine-readable tag, e.g. "orphan-product", "role".
  std::string code;
  std::string message;
};

// Empty iff every Dialogue/Turn/Utterance/Frame invariant holds and every
// referenced product exists in `catalog`.
std::vector<Violation> validate_dialogue(const Dialogue& dialogue,
                                         const Catalog& catalog);

// Category schema and product invariants.
std::vector<Violation> validate_catalog(const Catalog& catalog);

// Dialogue ids must be disjoint across train/valid/test.
std::vector<Violation> validate_split(const DatasetSplit& split);

std::string describe(const std::vector<Violation>& violations);

}  // namespace crsllm::corpus
