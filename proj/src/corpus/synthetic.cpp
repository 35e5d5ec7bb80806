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

#include "crsllm/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"
#include "crsllm/util/text.hpp"

namespace crsllm::corpus {
namespace {

struct LexiconEntry {
  const char* attribute;
  std::array<const char*, 8> values;
};

// Values are single tokens and unique across the whole lexicon.
constexpr std::array<LexiconEntry, 8> kLexicon{{
    {"color", {"red", "blue", "black", "white", "green", "pink", "grey", "purple"}},
    {"size", {"small", "medium", "large", "compact", "slim", "oversized", "petite", "standard"}},
    {"price", {"cheap", "affordable", "midrange", "premium", "luxury", "budget", "bargain", "deluxe"}},
    {"material", {"cotton", "silk", "leather", "wool", "linen", "denim", "velvet", "nylon"}},
    {"style", {"casual", "formal", "sporty", "classic", "vintage", "modern", "minimalist", "elegant"}},
    {"season", {"spring", "summer", "autumn", "winter", "allseason", "rainy", "tropical", "alpine"}},
    {"brand", {"acme", "nova", "zenith", "orbit", "apex", "lumen", "vertex", "halo"}},
    {"function", {"waterproof", "breathable", "lightweight", "durable", "warm", "soft", "portable", "foldable"}},
}};

constexpr std::array<const char*, 5> kDefaultCategories{"Beauty", "Phones", "Fashion", "Shoes", "Electronics"};

constexpr std::array<const char*, 4> kUserOne{
    "i am looking for something {v}", "do you have any {v} {c}?", "i would like {v} please",
    "preferably {v}"};
constexpr std::array<const char*, 3> kUserTwo{
    "i want {v1} and {v2}", "something {v1} with {v2} would be great", "do you have {v1} {v2} ones?"};
constexpr std::array<const char*, 2> kUserOpen{"hello, can you recommend a {c}?",
                                               "hi, i need a new {c}"};
constexpr std::array<const char*, 2> kUserMore{"anything else you would suggest?",
                                               "what other options are there?"};
constexpr std::array<const char*, 4> kSystemAsk{"which {a} do you prefer?", "what {a} would you like?",
                                                "any preference on {a}?", "do you have a {a} in mind?"};
constexpr std::array<const char*, 3> kSystemRecommend{"how about {p}? it matches {vals}",
                                                      "you may like {p} which is {vals}",
                                                      "i recommend {p} for {vals} needs"};

std::string prefix_for(const std::string& id) {
  std::string p;
  for (char ch : id) {
    if (std::isalnum(static_cast<unsigned char>(ch))) p += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (p.size() == 3) break;
  }
  return p.empty() ? "CAT" : p;
}

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string numbered(const std::string& prefix, char tag, int n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, n);
  return prefix + "-" + tag + buf;
}

class DialogueBuilder {
 public:
  DialogueBuilder(const Catalog& catalog, const SyntheticSpec& spec, std::mt19937_64& rng)
      : catalog_(catalog), spec_(spec), rng_(rng) {}

  Dialogue build(const std::string& dialogue_id) {
    const Category& cat = catalog_.category();
    Dialogue d;
    d.dialogue_id = dialogue_id;
    d.category = cat.id;
    const auto& products = catalog_.products();
    const Product& target = products[uniform(products.size())];

    std::vector<std::string> known;  // attributes stated by the user
    std::set<std::string> recommended;
    std::string pending;
    const int rounds = spec_.min_rounds + static_cast<int>(uniform(spec_.max_rounds - spec_.min_rounds + 1));
    const std::string cat_word = lower(cat.name);

    for (int r = 0; r < rounds; ++r) {
      // User turn.
      DialogueTurn user;
      user.utterance.role = Role::kUser;
      std::vector<std::string> to_state;
      auto unknown = unknown_attributes(known);
      if (!pending.empty()) {
        to_state.push_back(pending);
        std::erase(unknown, pending);
        if (!unknown.empty() && chance(0.3)) to_state.push_back(unknown[uniform(unknown.size())]);
      } else if (r == 0 && chance(0.3)) {
        // greeting without needs
      } else if (!unknown.empty()) {
        // Leave at least one attribute unknown after the first round so the
        // system always has something to elicit.
        const std::size_t limit = r == 0 ? unknown.size() - 1 : unknown.size();
        const std::size_t n = (limit >= 2 && chance(0.3)) ? 2 : std::min<std::size_t>(1, limit);
        std::shuffle(unknown.begin(), unknown.end(), rng_);
        for (std::size_t i = 0; i < n; ++i) to_state.push_back(unknown[i]);
      }
      std::sort(to_state.begin(), to_state.end(), [&](const std::string& a, const std::string& b) {
        return schema_position(a) < schema_position(b);
      });
      if (to_state.empty()) {
        user.utterance.text = text::substitute(
            r == 0 ? pick(kUserOpen) : pick(kUserMore), "c", cat_word);
      } else if (to_state.size() == 1) {
        user.utterance.text = text::substitute(
            text::substitute(pick(kUserOne), "v", target.attributes.at(to_state[0])), "c", cat_word);
      } else {
        user.utterance.text = text::substitute(
            text::substitute(pick(kUserTwo), "v1", target.attributes.at(to_state[0])), "v2",
            target.attributes.at(to_state[1]));
      }
      for (const auto& a : to_state) {
        user.frames.push_back({a, target.attributes.at(a)});
        known.push_back(a);
      }
      pending.clear();
      push(d, std::move(user));

      // System turn.
      DialogueTurn sys;
      sys.utterance.role = Role::kSystem;
      unknown = unknown_attributes(known);
      const bool last = r == rounds - 1;
      const bool recommend = !known.empty() &&
                             (last || unknown.empty() || (r > 0 && chance(spec_.recommend_rate)));
      if (recommend) {
        const std::string pid = choose_recommendation(target, known, recommended);
        recommended.insert(pid);
        sys.recommended_products.push_back(pid);
        std::vector<std::string> vals;
        for (const auto& a : known) vals.push_back(target.attributes.at(a));
        sys.utterance.text = text::substitute(text::substitute(pick(kSystemRecommend), "p", pid),
                                              "vals", text::join(vals, " "));
      } else {
        const std::string attr = chance(0.7) ? unknown.front() : unknown[uniform(unknown.size())];
        sys.elicit_attributes.push_back(attr);
        if (chance(spec_.system_frame_rate)) sys.frames.push_back({attr, ""});
        sys.utterance.text = text::substitute(pick(kSystemAsk), "a", attr);
        pending = attr;
      }
      push(d, std::move(sys));
    }

    // Implicit needs: browsing history.
    const std::size_t n_behaviors = uniform(4);
    std::set<std::string> seen;
    if (n_behaviors > 0 && chance(0.5)) seen.insert(target.product_id);
    while (seen.size() < n_behaviors) seen.insert(products[uniform(products.size())].product_id);
    d.user_behaviors.assign(seen.begin(), seen.end());
    std::shuffle(d.user_behaviors.begin(), d.user_behaviors.end(), rng_);
    return d;
  }

 private:
  std::size_t uniform(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
  template <std::size_t N>
  const char* pick(const std::array<const char*, N>& options) {
    return options[uniform(N)];
  }

  std::size_t schema_position(const std::string& attribute) const {
    const auto& schema = catalog_.category().attribute_schema;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (schema[i].name == attribute) return i;
    }
    return schema.size();
  }

  std::vector<std::string> unknown_attributes(const std::vector<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& spec : catalog_.category().attribute_schema) {
      if (std::find(known.begin(), known.end(), spec.name) == known.end()) out.push_back(spec.name);
    }
    return out;
  }

  std::string choose_recommendation(const Product& target, const std::vector<std::string>& known,
                                    const std::set<std::string>& recommended) {
    std::vector<std::string> matching;
    for (const Product& p : catalog_.products()) {
      bool ok = !recommended.count(p.product_id);
      for (const auto& a : known) ok = ok && p.attributes.at(a) == target.attributes.at(a);
      if (ok) matching.push_back(p.product_id);
    }
    if (matching.empty()) return target.product_id;
    return matching[uniform(matching.size())];
  }

  static void push(Dialogue& d, DialogueTurn turn) {
    turn.utterance.turn_index = static_cast<int>(d.turns.size());
    d.turns.push_back(std::move(turn));
  }

  const Catalog& catalog_;
  const SyntheticSpec& spec_;
  std::mt19937_64& rng_;
};

}  // namespace

int max_synthetic_attributes() { return static_cast<int>(kLexicon.size()); }
int max_synthetic_values() { return static_cast<int>(kLexicon[0].values.size()); }

std::vector<SyntheticCategorySpec> default_categories(int n, int attributes, int values_per_attribute) {
  std::vector<SyntheticCategorySpec> out;
  for (int i = 0; i < n; ++i) {
    std::string name = i < static_cast<int>(kDefaultCategories.size())
                           ? kDefaultCategories[i]
                           : "Category" + std::to_string(i + 1);
    out.push_back({name, name, attributes, values_per_attribute});
  }
  return out;
}

Corpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.products_per_category < 21) {
    throw PreconditionError("products_per_category must be >= 21 (got " +
                            std::to_string(spec.products_per_category) + ")");
  }
  if (spec.min_rounds < 2 || spec.max_rounds < spec.min_rounds) {
    throw PreconditionError("round range must satisfy 2 <= min_rounds <= max_rounds");
  }
  if (spec.dialogues_per_category < 1) throw PreconditionError("dialogues_per_category must be >= 1");
  if (spec.categories.empty()) throw PreconditionError("at least one category is required");

  Corpus corpus;
  for (std::size_t ci = 0; ci < spec.categories.size(); ++ci) {
    const SyntheticCategorySpec& cs = spec.categories[ci];
    if (cs.attributes < 2 || cs.values_per_attribute < 2) {
      throw PreconditionError("category '" + cs.id + "' needs >= 2 attributes and >= 2 values per attribute");
    }
    if (cs.attributes > max_synthetic_attributes() || cs.values_per_attribute > max_synthetic_values()) {
      throw PreconditionError("category '" + cs.id + "' exceeds the built-in lexicon (" +
                              std::to_string(max_synthetic_attributes()) + " attributes x " +
                              std::to_string(max_synthetic_values()) + " values)");
    }
    std::mt19937_64 rng(derive_seed(spec.seed, {cs.id}));

    Category cat{cs.id, cs.name, {}};
    for (int a = 0; a < cs.attributes; ++a) {
      const LexiconEntry& e = kLexicon[(a + ci) % kLexicon.size()];
      AttributeSpec as{e.attribute, {}};
      for (int v = 0; v < cs.values_per_attribute; ++v) as.values.emplace_back(e.values[v]);
      cat.attribute_schema.push_back(std::move(as));
    }

    const std::string prefix = prefix_for(cs.id);
    std::vector<Product> products;
    for (int p = 0; p < spec.products_per_category; ++p) {
      Product prod{numbered(prefix, 'P', p + 1, 3), cs.id, {}};
      for (const auto& as : cat.attribute_schema) {
        prod.attributes[as.name] =
            as.values[std::uniform_int_distribution<std::size_t>(0, as.values.size() - 1)(rng)];
      }
      products.push_back(std::move(prod));
    }
    Catalog catalog(cat, std::move(products));

    std::vector<Dialogue> dialogues;
    DialogueBuilder builder(catalog, spec, rng);
    for (int i = 0; i < spec.dialogues_per_category; ++i) {
      dialogues.push_back(builder.build(numbered(prefix, 'D', i + 1, 5)));
    }

    const auto n = dialogues.size();
    const auto n_test = static_cast<std::size_t>(spec.test_fraction * static_cast<double>(n) + 0.5);
    const auto n_valid = static_cast<std::size_t>(spec.valid_fraction * static_cast<double>(n) + 0.5);
    const std::size_t n_train = n - std::min(n, n_test + n_valid);
    DatasetSplit split;
    split.train.assign(dialogues.begin(), dialogues.begin() + n_train);
    split.valid.assign(dialogues.begin() + n_train, dialogues.begin() + std::min(n, n_train + n_valid));
    split.test.assign(dialogues.begin() + std::min(n, n_train + n_valid), dialogues.end());
    corpus.emplace(cs.id, CategoryCorpus{std::move(catalog), std::move(split)});
  }
  return corpus;
}

std::vector<Violation> consistency_violations(const Dialogue& d, const Catalog& catalog) {
  std::vector<Violation> out;
  std::map<std::string, std::string> needs;
  bool has_frame = false, has_elicit = false, has_recommend = false;
  for (const DialogueTurn& t : d.turns) {
    if (t.role() == Role::kUser) {
      for (const auto& f : t.frames) {
        needs[f.attribute] = f.value;
        has_frame = true;
      }
      continue;
    }
    has_elicit = has_elicit || !t.elicit_attributes.empty();
    for (const auto& pid : t.recommended_products) {
      has_recommend = true;
      const Product* p = catalog.find(pid);
      if (p == nullptr) {
        out.push_back({"orphan-product", d.dialogue_id + ": unknown product '" + pid + "'"});
        continue;
      }
      for (const auto& [attr, value] : needs) {
        auto it = p->attributes.find(attr);
        if (it == p->attributes.end() || it->second != value) {
          out.push_back({"inconsistent-recommendation",
                         d.dialogue_id + ": " + pid + " does not match need " + attr + "=" + value});
        }
      }
    }
  }
  if (!has_frame) out.push_back({"no-frame", d.dialogue_id + ": no user frame"});
  if (!has_elicit) out.push_back({"no-elicitation", d.dialogue_id + ": no elicitation label"});
  if (!has_recommend) out.push_back({"no-recommendation", d.dialogue_id + ": no recommendation"});
  return out;
}

}  // namespace crsllm::corpus
