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

#include "crsllm/crs/tokenizer.hpp"

#include <algorithm>
#include <sstream>

#include "crsllm/crs/prompt.hpp"
#include "crsllm/util/error.hpp"

namespace crsllm::crs {

namespace {

bool is_punct(char ch) {
  return ch == ':' || ch == ';' || ch == ',' || ch == '?' || ch == '.' || ch == '!';
}

bool is_special(const std::string& word) {
  const auto& list = special_token_list();
  return word == "[SEP]" || std::find(list.begin(), list.end(), word) != list.end();
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    if (is_special(word)) {
      out.push_back(word);
      continue;
    }
    // "[SEP]" glued to neighbouring words still separates them.
    for (std::size_t sep = word.find("[SEP]"); sep != std::string::npos; sep = word.find("[SEP]")) {
      if (sep > 0) {
        std::vector<std::string> head = tokenize(word.substr(0, sep));
        out.insert(out.end(), head.begin(), head.end());
      }
      out.emplace_back("[SEP]");
      word = word.substr(sep + 5);
    }
    std::string cur;
    for (char ch : word) {
      if (is_punct(ch)) {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
        out.emplace_back(1, ch);
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool glue = true;  // no space before the next token
  for (const std::string& t : tokens) {
    const bool punct = t.size() == 1 && is_punct(t[0]);
    if (!glue && !punct) out += ' ';
    out += t;
    glue = t == ";";
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

void Vocabulary::fit(const std::vector<std::string>& texts) {
  for (const auto& t : texts) {
    for (const auto& tok : tokenize(t)) add(tok);
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw PreconditionError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

nlohmann::json Vocabulary::save() const { return tokens_; }

Vocabulary Vocabulary::load(const nlohmann::json& j) {
  Vocabulary v;
  const auto tokens = j.get<std::vector<std::string>>();
  if (tokens.size() < 4 || tokens[0] != "<pad>" || tokens[1] != "<bos>" || tokens[2] != "<eos>" ||
      tokens[3] != "<unk>") {
    throw FormatError("", 0, "vocabulary does not start with the reserved tokens");
  }
  for (const auto& t : tokens) v.add(t);
  return v;
}

}  // namespace crsllm::crs
