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

#include "crsllm/crs/noise.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "crsllm/crs/structured.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"

namespace crsllm::crs {

using tasks::TaskKind;

bool noise_keeps_gold(double accuracy, std::uint64_t seed, const std::string& key) {
  if (accuracy < 0.0 || accuracy > 1.0) throw PreconditionError("accuracy must lie in [0, 1]");
  const std::uint64_t h = derive_seed(seed, {"keep", key});
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < accuracy;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& options, std::mt19937_64& rng) {
  return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
}

}  // namespace

std::string wrong_output(TaskKind kind, const std::string& gold, const NoiseSpec& noise, const std::string& key) {
  std::mt19937_64 rng(derive_seed(noise.seed, {"wrong", key}));
  switch (kind) {
    case TaskKind::kUnderstanding: {
      auto frames = parse_structured_output(gold, kind).frames;
      std::set<std::string> gold_attrs;
      for (const auto& f : frames) gold_attrs.insert(f.attribute);
      std::vector<std::string> free_attrs;
      for (const auto& a : noise.schema.attribute_schema) {
        if (!gold_attrs.count(a.name)) free_attrs.push_back(a.name);
      }
      std::shuffle(free_attrs.begin(), free_attrs.end(), rng);
      for (auto& f : frames) {
        if (f.value.empty()) {
          if (free_attrs.empty()) {
            f.attribute += " (other)";
          } else {
            f.attribute = free_attrs.back();
            free_attrs.pop_back();
          }
          continue;
        }
        std::vector<std::string> others;
        if (const auto* spec = noise.schema.find_attribute(f.attribute)) {
          for (const auto& v : spec->values) {
            if (v != f.value) others.push_back(v);
          }
        }
        f.value = others.empty() ? f.value + " (other)" : pick(others, rng);
      }
      return render_frames(frames);
    }
    case TaskKind::kElicitation: {
      const auto attrs = parse_structured_output(gold, kind).attributes;
      std::vector<std::string> free_attrs;
      for (const auto& a : noise.schema.attribute_schema) {
        if (std::find(attrs.begin(), attrs.end(), a.name) == attrs.end()) free_attrs.push_back(a.name);
      }
      std::shuffle(free_attrs.begin(), free_attrs.end(), rng);
      const std::size_t n = std::max<std::size_t>(1, attrs.size());
      if (free_attrs.empty()) return "none";
      free_attrs.resize(std::min(n, free_attrs.size()));
      return render_attributes(free_attrs);
    }
    case TaskKind::kGeneration: {
      std::vector<std::string> others;
      for (const auto& r : noise.response_pool) {
        if (r != gold) others.push_back(r);
      }
      return others.empty() ? std::string("sorry, could you say that again?") : pick(others, rng);
    }
    case TaskKind::kRecommendation: break;
  }
  throw PreconditionError("recommendation noise is expressed through letters or scores");
}

char wrong_letter(char gold, std::size_t n_candidates, std::uint64_t seed, const std::string& key) {
  if (n_candidates < 2) throw PreconditionError("no wrong letter exists among fewer than two candidates");
  const auto pos = tasks::letter_position(gold);
  std::mt19937_64 rng(derive_seed(seed, {"letter", key}));
  std::size_t k = std::uniform_int_distribution<std::size_t>(0, n_candidates - 2)(rng);
  if (pos && k >= *pos) ++k;
  return tasks::candidate_letter(k);
}

}  // namespace crsllm::crs
