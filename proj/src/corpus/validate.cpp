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

#include "crsllm/corpus/validate.hpp"

#include <set>

namespace crsllm::corpus {

std::vector<Violation> validate_dialogue(const Dialogue& d, const Catalog& catalog) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string msg) {
    out.push_back({std::move(code), d.dialogue_id + ": " + std::move(msg)});
  };

  if (d.dialogue_id.empty()) add("dialogue-id", "empty dialogue_id");
  if (d.category != catalog.category().id) {
    add("category", "category '" + d.category + "' does not match catalog '" +
                        catalog.category().id + "'");
  }

  bool has_user = false;
  int last_index = -1;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const DialogueTurn& t = d.turns[i];
    const std::string where = "turn " + std::to_string(i);
    if (t.role() == Role::kUser) has_user = true;
    if (t.utterance.text.empty()) add("empty-text", where + " has empty text");
    if (t.utterance.turn_index <= last_index) {
      add("turn-order", where + " turn_index " + std::to_string(t.utterance.turn_index) +
                            " not strictly increasing");
    }
    last_index = t.utterance.turn_index;
    if (t.role() == Role::kUser && !t.elicit_attributes.empty()) {
      add("role", where + " is a user turn carrying elicit_attributes");
    }
    if (t.role() == Role::kUser && !t.recommended_products.empty()) {
      add("role", where + " is a user turn carrying recommended_products");
    }
    for (const SemanticFrame& f : t.frames) {
      if (f.attribute.empty()) add("frame", where + " has a frame with empty attribute");
      if (t.role() == Role::kUser && f.value.empty()) {
        add("frame", where + " user frame '" + f.attribute + "' has empty value");
      }
    }
    for (const std::string& a : t.elicit_attributes) {
      if (a.empty()) add("frame", where + " has an empty elicit attribute");
    }
    for (const std::string& p : t.recommended_products) {
      if (!catalog.contains(p)) add("orphan-product", where + " recommends unknown product '" + p + "'");
    }
  }
  if (!has_user) add("no-user-turn", "dialogue has no user turn");
  for (const std::string& p : d.user_behaviors) {
    if (!catalog.contains(p)) add("orphan-product", "behavior references unknown product '" + p + "'");
  }
  return out;
}

std::vector<Violation> validate_catalog(const Catalog& catalog) {
  std::vector<Violation> out;
  const Category& cat = catalog.category();
  std::set<std::string> names;
  for (const AttributeSpec& a : cat.attribute_schema) {
    if (!names.insert(a.name).second) {
      out.push_back({"schema", cat.id + ": duplicate attribute '" + a.name + "'"});
    }
    if (a.values.empty()) {
      out.push_back({"schema", cat.id + ": attribute '" + a.name + "' has no values"});
    }
  }
  for (const Product& p : catalog.products()) {
    if (p.category != cat.id) {
      out.push_back({"product", p.product_id + ": category '" + p.category + "' != '" + cat.id + "'"});
    }
    for (const auto& [attr, value] : p.attributes) {
      const AttributeSpec* spec = cat.find_attribute(attr);
      if (spec == nullptr) {
        out.push_back({"product", p.product_id + ": attribute '" + attr + "' not in schema"});
        continue;
      }
      bool found = false;
      for (const auto& v : spec->values) found = found || v == value;
      if (!found) {
        out.push_back({"product", p.product_id + ": value '" + value + "' not in vocabulary of '" + attr + "'"});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_split(const DatasetSplit& split) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto* part : {&split.train, &split.valid, &split.test}) {
    for (const Dialogue& d : *part) {
      if (!seen.insert(d.dialogue_id).second) {
        out.push_back({"split", "dialogue_id '" + d.dialogue_id + "' appears more than once"});
      }
    }
  }
  return out;
}

std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += "[" + v.code + "] " + v.message;
  }
  return out;
}

}  // namespace crsllm::corpus
