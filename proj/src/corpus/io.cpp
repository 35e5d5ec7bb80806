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

#include "crsllm/corpus/io.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "crsllm/corpus/validate.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/jsonl.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::corpus {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr const char* kSplitNames[] = {"train", "valid", "test"};

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw std::invalid_argument(std::string("missing key '") + key + "'");
  }
  return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw std::invalid_argument(std::string("key '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const char* key, bool optional) {
  if (!j.contains(key)) {
    if (optional) return {};
    throw std::invalid_argument(std::string("missing key '") + key + "'");
  }
  const Json& v = j.at(key);
  if (!v.is_array()) throw std::invalid_argument(std::string("key '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw std::invalid_argument(std::string("key '") + key + "' must hold strings");
    out.push_back(text::trim(text::normalize_punctuation(item.get<std::string>())));
  }
  return out;
}

std::string clean(const std::string& s) { return text::trim(text::normalize_punctuation(s)); }

std::vector<std::string> category_files(const fs::path& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) return ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Category infer_category(const std::string& id, const std::vector<Product>& products) {
  Category cat{id, id, {}};
  for (const Product& p : products) {
    for (const auto& [attr, value] : p.attributes) {
      AttributeSpec* spec = nullptr;
      for (auto& a : cat.attribute_schema) {
        if (a.name == attr) spec = &a;
      }
      if (spec == nullptr) {
        cat.attribute_schema.push_back({attr, {}});
        spec = &cat.attribute_schema.back();
      }
      if (std::find(spec->values.begin(), spec->values.end(), value) == spec->values.end()) {
        spec->values.push_back(value);
      }
    }
  }
  return cat;
}

}  // namespace

Json to_json(const DialogueTurn& t) {
  Json frames = Json::array();
  for (const auto& f : t.frames) frames.push_back({{"attribute", f.attribute}, {"value", f.value}});
  return {{"role", role_name(t.role())},
          {"text", t.utterance.text},
          {"frames", frames},
          {"elicit", t.elicit_attributes},
          {"recommend", t.recommended_products}};
}

Json to_json(const Dialogue& d) {
  Json turns = Json::array();
  for (const DialogueTurn& t : d.turns) turns.push_back(to_json(t));
  return {{"dialogue_id", d.dialogue_id},
          {"category", d.category},
          {"turns", turns},
          {"behaviors", d.user_behaviors}};
}

Json to_json(const Product& p) {
  Json attrs = Json::object();
  for (const auto& [k, v] : p.attributes) attrs[k] = v;
  return {{"product_id", p.product_id}, {"category", p.category}, {"attributes", attrs}};
}

Json to_json(const Category& c) {
  Json attrs = Json::array();
  for (const auto& a : c.attribute_schema) attrs.push_back({{"name", a.name}, {"values", a.values}});
  return {{"id", c.id}, {"name", c.name}, {"attributes", attrs}};
}

DialogueTurn turn_from_json(const Json& tj, int index) {
  DialogueTurn t;
  const std::string role = require_string(tj, "role");
  auto parsed = parse_role(role);
  if (!parsed) throw std::invalid_argument("turn " + std::to_string(index) + ": unknown role '" + role + "'");
  t.utterance.role = *parsed;
  t.utterance.text = clean(require_string(tj, "text"));
  t.utterance.turn_index = index;
  if (t.utterance.text.empty()) {
    throw std::invalid_argument("turn " + std::to_string(index) + ": utterance text must be non-empty");
  }
  if (tj.contains("frames")) {
    if (!tj.at("frames").is_array()) throw std::invalid_argument("key 'frames' must be an array");
    for (const Json& fj : tj.at("frames")) {
      SemanticFrame f{clean(require_string(fj, "attribute")),
                      fj.contains("value") && fj.at("value").is_string()
                          ? clean(fj.at("value").get<std::string>())
                          : std::string()};
      if (f.attribute.empty()) {
        throw std::invalid_argument("turn " + std::to_string(index) + ": frame attribute must be non-empty");
      }
      if (t.role() == Role::kUser && f.value.empty()) {
        throw std::invalid_argument("turn " + std::to_string(index) +
                                    ": user frame value must be non-empty ('" + f.attribute + "')");
      }
      t.frames.push_back(std::move(f));
    }
  }
  t.elicit_attributes = string_list(tj, "elicit", true);
  t.recommended_products = string_list(tj, "recommend", true);
  if (t.role() == Role::kUser && (!t.elicit_attributes.empty() || !t.recommended_products.empty())) {
    throw std::invalid_argument("turn " + std::to_string(index) +
                                ": user turns carry no elicit attributes or recommended products");
  }
  return t;
}

Dialogue dialogue_from_json(const Json& j) {
  Dialogue d;
  d.dialogue_id = require_string(j, "dialogue_id");
  d.category = require_string(j, "category");
  const Json& turns = require(j, "turns");
  if (!turns.is_array()) throw std::invalid_argument("key 'turns' must be an array");
  int index = 0;
  for (const Json& tj : turns) {
    d.turns.push_back(turn_from_json(tj, index));
    ++index;
  }
  if (std::none_of(d.turns.begin(), d.turns.end(),
                   [](const DialogueTurn& t) { return t.role() == Role::kUser; })) {
    throw std::invalid_argument("dialogue must contain at least one user turn");
  }
  d.user_behaviors = string_list(j, "behaviors", true);
  return d;
}

Product product_from_json(const Json& j) {
  Product p;
  p.product_id = require_string(j, "product_id");
  p.category = require_string(j, "category");
  if (j.contains("attributes")) {
    const Json& attrs = j.at("attributes");
    if (!attrs.is_object()) throw std::invalid_argument("key 'attributes' must be an object");
    for (const auto& [k, v] : attrs.items()) {
      if (!v.is_string()) throw std::invalid_argument("attribute '" + k + "' must be a string");
      p.attributes[clean(k)] = clean(v.get<std::string>());
    }
  }
  return p;
}

Category category_from_json(const Json& j) {
  Category c;
  c.id = require_string(j, "id");
  c.name = j.contains("name") ? j.at("name").get<std::string>() : c.id;
  const Json& attrs = require(j, "attributes");
  if (!attrs.is_array()) throw std::invalid_argument("key 'attributes' must be an array");
  for (const Json& a : attrs) {
    c.attribute_schema.push_back({clean(require_string(a, "name")), string_list(a, "values", false)});
  }
  return c;
}

LoadResult load_uneed_format(const fs::path& root) {
  std::set<std::string> ids;
  for (const auto& id : category_files(root / "catalog")) ids.insert(id);
  for (const char* split : kSplitNames) {
    for (const auto& id : category_files(root / split)) ids.insert(id);
  }
  if (ids.empty()) throw FormatError(root.string(), 0, "no category files found");

  std::map<std::string, Category> schemas;
  const fs::path schema_path = root / "schema.jsonl";
  if (fs::exists(schema_path)) {
    jsonl::for_each(schema_path, [&](const Json& row, int line) {
      try {
        Category c = category_from_json(row);
        schemas[c.id] = std::move(c);
      } catch (const std::exception& e) {
        throw FormatError(schema_path.string(), line, e.what());
      }
    });
  }

  LoadResult result;
  for (const std::string& id : ids) {
    const fs::path catalog_path = root / "catalog" / (id + ".jsonl");
    if (!fs::exists(catalog_path)) {
      throw FormatError(catalog_path.string(), 0, "missing catalog file for category '" + id + "'");
    }
    std::vector<Product> products;
    jsonl::for_each(catalog_path, [&](const Json& row, int line) {
      try {
        products.push_back(product_from_json(row));
      } catch (const std::exception& e) {
        throw FormatError(catalog_path.string(), line, e.what());
      }
    });
    Category category = schemas.count(id) ? schemas.at(id) : infer_category(id, products);
    Catalog catalog;
    try {
      catalog = Catalog(category, std::move(products));
    } catch (const PreconditionError& e) {
      throw FormatError(catalog_path.string(), 0, e.what());
    }
    if (auto v = validate_catalog(catalog); !v.empty()) {
      throw FormatError(catalog_path.string(), 0, describe(v));
    }

    CategoryCorpus cc{catalog, {}};
    std::set<std::string> orphans;
    fs::path orphan_file;
    for (const char* split : kSplitNames) {
      const fs::path path = root / split / (id + ".jsonl");
      if (!fs::exists(path)) continue;
      std::vector<Dialogue>& target = std::string(split) == "train"   ? cc.split.train
                                      : std::string(split) == "valid" ? cc.split.valid
                                                                      : cc.split.test;
      jsonl::for_each(path, [&](const Json& row, int line) {
        Dialogue d;
        try {
          d = dialogue_from_json(row);
        } catch (const std::exception& e) {
          throw FormatError(path.string(), line, e.what());
        }
        if (d.category != id) {
          throw FormatError(path.string(), line,
                            "dialogue category '" + d.category + "' does not match file category '" + id + "'");
        }
        for (const Violation& v : validate_dialogue(d, catalog)) {
          if (v.code != "orphan-product") throw FormatError(path.string(), line, v.message);
        }
        auto collect = [&](const std::string& p) {
          if (!catalog.contains(p)) {
            orphans.insert(p);
            orphan_file = path;
          }
        };
        for (const auto& t : d.turns) std::for_each(t.recommended_products.begin(), t.recommended_products.end(), collect);
        std::for_each(d.user_behaviors.begin(), d.user_behaviors.end(), collect);
        target.push_back(std::move(d));
      });
    }
    if (!orphans.empty()) {
      throw FormatError(orphan_file.string(), 0,
                        "missing catalog entries; orphan product_ids: " +
                            text::join(std::vector<std::string>(orphans.begin(), orphans.end()), ", "));
    }
    if (auto v = validate_split(cc.split); !v.empty()) {
      throw FormatError((root / id).string(), 0, describe(v));
    }
    result.dialogue_counts[id] = cc.split.size();
    result.total_dialogues += cc.split.size();
    result.corpus.emplace(id, std::move(cc));
  }
  return result;
}

void write_uneed_format(const fs::path& root, const Corpus& corpus) {
  std::vector<Json> schema_rows;
  for (const auto& [id, cc] : corpus) {
    schema_rows.push_back(to_json(cc.catalog.category()));
    std::vector<Json> products;
    for (const auto& p : cc.catalog.products()) products.push_back(to_json(p));
    jsonl::write_all(root / "catalog" / (id + ".jsonl"), products);
    const std::vector<Dialogue>* parts[] = {&cc.split.train, &cc.split.valid, &cc.split.test};
    for (int s = 0; s < 3; ++s) {
      std::vector<Json> rows;
      for (const auto& d : *parts[s]) rows.push_back(to_json(d));
      jsonl::write_all(root / kSplitNames[s] / (id + ".jsonl"), rows);
    }
  }
  jsonl::write_all(root / "schema.jsonl", schema_rows);
}

}  // namespace crsllm::corpus
