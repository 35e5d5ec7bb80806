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
#include <string>
#include <vector>

#include "json.hpp"

namespace crsllm::crs {

// Whitespace tokenizer that keeps special tokens whole and splits the
// punctuation marks : ; , ? . ! into tokens of their own.
std::vector<std::string> tokenize(const std::string& text);

// Inverse of tokenize for the structured output grammar: no space before
// punctuation, none after ';'.
std::string detokenize(const std::vector<std::string>& tokens);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();

  // Adds every token of every text; ids are assigned in first-seen order.
  void fit(const std::vector<std::string>& texts);
  int add(const std::string& token);

  int id(const std::string& token) const;  // kUnk when unknown
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  nlohmann::json save() const;
  static Vocabulary load(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

}  // namespace crsllm::crs
