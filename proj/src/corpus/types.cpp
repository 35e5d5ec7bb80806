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

#include "crsllm/corpus/types.hpp"

#include "crsllm/util/error.hpp"

namespace crsllm::corpus {

const AttributeSpec* Category::find_attribute(const std::string& attribute) const {
  for (const auto& spec : attribute_schema) {
    if (spec.name == attribute) return &spec;
  }
  return nullptr;
}

const char* role_name(Role role) { return role == Role::kUser ? "user" : "system"; }

std::optional<Role> parse_role(const std::string& name) {
  if (name == "user") return Role::kUser;
  if (name == "system") return Role::kSystem;
  return std::nullopt;
}

Catalog::Catalog(Category category, std::vector<Product> products)
    : category_(std::move(category)), products_(std::move(products)) {
  for (std::size_t i = 0; i < products_.size(); ++i) {
    if (!index_.emplace(products_[i].product_id, i).second) {
      throw PreconditionError("duplicate product_id '" + products_[i].product_id +
                              "' in catalog " + category_.id);
    }
  }
}

const Product* Catalog::find(const std::string& product_id) const {
  auto it = index_.find(product_id);
  return it == index_.end() ? nullptr : &products_[it->second];
}

std::size_t Catalog::index_of(const std::string& product_id) const {
  auto it = index_.find(product_id);
  if (it == index_.end()) throw PreconditionError("unknown product_id '" + product_id + "'");
  return it->second;
}

}  // namespace crsllm::corpus
