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

#include <filesystem>
#include <map>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "crsllm/corpus/synthetic.hpp"
#include "crsllm/crs/prompt.hpp"
#include "crsllm/crs/training.hpp"
#include "crsllm/llm/instruction.hpp"
#include "crsllm/tasks/task.hpp"

namespace crsllm::testing_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("crsllm-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// The 5-attribute / 50-product / 200-dialogue single-category corpus.
inline corpus::SyntheticSpec toy_spec(std::uint64_t seed = 7) {
  corpus::SyntheticSpec spec;
  spec.categories = corpus::default_categories(1, 5, 4);
  spec.seed = seed;
  return spec;
}

inline const corpus::Corpus& toy_corpus() {
  static const corpus::Corpus c = corpus::generate_synthetic_corpus(toy_spec());
  return c;
}

inline const corpus::CategoryCorpus& toy_category() { return toy_corpus().begin()->second; }

// Every instance of every task over all dialogues of `dialogues`;
// recommendation instances get candidates.
inline std::vector<tasks::TaskInstance> instances_of(const std::vector<corpus::Dialogue>& dialogues,
                                                     const corpus::Catalog& catalog, std::uint64_t seed = 3) {
  std::vector<tasks::TaskInstance> out;
  for (const auto& d : dialogues) {
    for (auto k : tasks::kAllTasks) {
      for (auto& inst : tasks::extract_task_instances(d, k)) {
        out.push_back(k == tasks::TaskKind::kRecommendation ? tasks::sample_candidates(inst, catalog, seed) : inst);
      }
    }
  }
  return out;
}

inline std::vector<corpus::Dialogue> all_dialogues(const corpus::CategoryCorpus& c) {
  std::vector<corpus::Dialogue> out = c.split.train;
  out.insert(out.end(), c.split.valid.begin(), c.split.valid.end());
  out.insert(out.end(), c.split.test.begin(), c.split.test.end());
  return out;
}

// Keys of instances whose CRS prompt or LLM input is shared with another
// instance carrying a different label. No system can get both right.
inline std::set<std::string> ambiguous_keys(const std::vector<tasks::TaskInstance>& instances,
                                            const corpus::Category& category) {
  auto label = [](const tasks::TaskInstance& inst) {
    return inst.kind == tasks::TaskKind::kRecommendation ? *inst.gold_product : crs::seq2seq_target(inst);
  };
  std::map<std::string, std::set<std::string>> by_prompt, by_input;
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& inst : instances) {
    const auto seq = crs::serialize_context(inst);
    const auto s = llm::build_instruction_sample(inst, category);
    keys.emplace_back(seq.text + "|" + seq.task_prompt, s.instruction + "|" + s.input);
    by_prompt[keys.back().first].insert(label(inst));
    by_input[keys.back().second].insert(label(inst));
  }
  std::set<std::string> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (by_prompt[keys[i].first].size() > 1 || by_input[keys[i].second].size() > 1) out.insert(instances[i].key());
  }
  return out;
}

}  // namespace crsllm::testing_support
