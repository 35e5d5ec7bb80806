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
#include <optional>
#include <string>
#include <vector>

namespace crsllm::corpus {

struct AttributeSpec {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const AttributeSpec&) const = default;
};

struct Category {
  std::string id;
  std::string name;
  std::vector<AttributeSpec> attribute_schema;

  const AttributeSpec* find_attribute(const std::string& attribute) const;

  bool operator==(const Category&) const = default;
};

struct Product {
  std::string product_id;
  std::string category;
  // Attribute -> value; keys are a subset of the category schema.
  std::map<std::string, std::string> attributes;

  bool operator==(const Product&) const = default;
};

enum class Role { kUser, kSystem };

const char* role_name(Role role);
std::optional<Role> parse_role(const std::string& name);

struct Utterance {
  Role role = Role::kUser;
  std::string text;
  int turn_index = 0;

  bool operator==(const Utterance&) const = default;
};

struct SemanticFrame {
  std::string attribute;
  std::string value;  // may be empty on system turns

  bool operator==(const SemanticFrame&) const = default;
  auto operator<=>(const SemanticFrame&) const = default;
};

struct DialogueTurn {
  Utterance utterance;
  std::vector<SemanticFrame> frames;
  std::vector<std::string> elicit_attributes;     // system turns only
  std::vector<std::string> recommended_products;  // system turns only

  Role role() const { return utterance.role; }

  bool operator==(const DialogueTurn&) const = default;
};

struct Dialogue {
  std::string dialogue_id;
  std::string category;
  std::vector<DialogueTurn> turns;
  std::vector<std::string> user_behaviors;

  bool operator==(const Dialogue&) const = default;
};

class Catalog {
 public:
  Catalog() = default;
  // Throws PreconditionError on duplicate product ids.
  Catalog(Category category, std::vector<Product> products);

  const Category& category() const { return category_; }
  const std::vector<Product>& products() const { return products_; }
  std::size_t size() const { return products_.size(); }

  const Product* find(const std::string& product_id) const;
  bool contains(const std::string& product_id) const { return find(product_id) != nullptr; }
  // Position of the product in products(); throws on unknown ids.
  std::size_t index_of(const std::string& product_id) const;

  bool operator==(const Catalog& other) const {
    return category_ == other.category_ && products_ == other.products_;
  }

 private:
  Category category_;
  std::vector<Product> products_;
  std::map<std::string, std::size_t> index_;
};

struct DatasetSplit {
  std::vector<Dialogue> train;
  std::vector<Dialogue> valid;
  std::vector<Dialogue> test;

  std::size_t size() const { return train.size() + valid.size() + test.size(); }
  bool operator==(const DatasetSplit&) const = default;
};

// One category's worth of data.
struct CategoryCorpus {
  Catalog catalog;
  DatasetSplit split;

  bool operator==(const CategoryCorpus&) const = default;
};

// Category id -> data, ordered by id.
using Corpus = std::map<std::string, CategoryCorpus>;

}  // namespace crsllm::corpus
