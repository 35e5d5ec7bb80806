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

// Line-delimited JSON corpus layout ("U-NEED format"):
//
//   <root>/schema.jsonl              optional; {"id","name","attributes":[{"name","values"}]}
//   <root>/catalog/<category>.jsonl  {"product_id","category","attributes":{attr: value}}
//   <root>/{train,valid,test}/<category>.jsonl
//        {"dialogue_id","category",
//         "turns":[{"role","text","frames":[{"attribute","value"}],"elicit":[],"recommend":[]}],
//         "behaviors":[]}
//
// Without schema.jsonl the attribute schema is inferred from the catalog in
// first-seen order.

#include <filesystem>
#include <map>
#include <string>

#include "crsllm/corpus/types.hpp"
#include "json.hpp"

namespace crsllm::corpus {

struct LoadResult {
  Corpus corpus;
  std::map<std::string, std::size_t> dialogue_counts;  // per category, all splits
  std::size_t total_dialogues = 0;
};

// Throws FormatError on malformed records (file, line, violated invariant)
// and when dialogues reference products missing from the catalog (the
// message lists the orphan product_ids).
LoadResult load_uneed_format(const std::filesystem::path& root);

void write_uneed_format(const std::filesystem::path& root, const Corpus& corpus);

nlohmann::json to_json(const DialogueTurn& t);
nlohmann::json to_json(const Dialogue& d);
nlohmann::json to_json(const Product& p);
nlohmann::json to_json(const Category& c);
// Parsers throw std::invalid_argument describing the violated invariant.
DialogueTurn turn_from_json(const nlohmann::json& j, int index);
Dialogue dialogue_from_json(const nlohmann::json& j);
Product product_from_json(const nlohmann::json& j);
Category category_from_json(const nlohmann::json& j);

}  // namespace crsllm::corpus
