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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crsllm/corpus/types.hpp"
#include "crsllm/crs/noise.hpp"
#include "crsllm/crs/tiny_seq2seq.hpp"
#include "crsllm/crs/unified.hpp"
#include "crsllm/tasks/task.hpp"

namespace crsllm::crs {

// Gold answers keyed by the unaugmented prompt. Identical prompts with
// different labels keep the label added last.
struct CrsGoldTable {
  std::map<std::string, std::string> outputs;  // (text, task prompt) -> gold text
  std::map<std::string, tasks::TaskKind> kinds;
  std::map<std::string, std::string> products;  // X_R text -> gold product

  static std::string key(const std::string& text, const std::string& task_prompt);
  void add(const tasks::TaskInstance& instance);
};

CrsGoldTable build_crs_gold_table(const std::vector<tasks::TaskInstance>& instances);

// Scale of the oracle context vector; e^-30 makes non-gold mass negligible.
inline constexpr double kOracleMargin = 30.0;

// Gold-echo CRS: one-hot embeddings, W_context = I and Enc(X_R) =
// 30 * e_gold. With `noise` set, a wrong answer is returned for a keyed
// fraction of requests (Enc = 30 e_wrong - 30 e_gold for recommendation).
// Unknown prompts decode to "" and encode to the zero vector. Frozen.
std::unique_ptr<UnifiedCrs> make_oracle_crs(const std::string& id, const corpus::Catalog& catalog,
                                            CrsGoldTable gold, std::optional<NoiseSpec> noise = std::nullopt);

// Emits the [LLM] segment verbatim and ranks by the assist vector alone
// (W_context = 0, W_assist = 30 I). Frozen.
std::unique_ptr<UnifiedCrs> make_copy_assist_crs(const std::string& id, const corpus::Catalog& catalog);

struct TinyCrsConfig {
  TinySeq2SeqConfig backend;
  std::size_t item_dim = 32;
  bool attribute_init = true;  // item vectors from catalog attributes; random otherwise
  std::uint64_t seed = 23;
};

std::unique_ptr<UnifiedCrs> make_tiny_crs(const std::string& id, const corpus::Catalog& catalog,
                                          const TinyCrsConfig& config = {});

}  // namespace crsllm::crs
