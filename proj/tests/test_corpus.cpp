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

#include <gtest/gtest.h>

#include <fstream>

#include "crsllm/corpus/io.hpp"
#include "crsllm/corpus/synthetic.hpp"
#include "crsllm/corpus/validate.hpp"
#include "crsllm/util/error.hpp"
#include "support.hpp"

using namespace crsllm;
using namespace crsllm::corpus;
using crsllm::testing_support::TempDir;

namespace {

Catalog tiny_catalog() {
  Category c{"shoes", "Shoes", {{"color", {"red", "black"}}, {"size", {"small", "large"}}}};
  return Catalog(c, {{"S1", "shoes", {{"color", "red"}, {"size", "small"}}},
                     {"S2", "shoes", {{"color", "black"}}}});
}

Dialogue tiny_dialogue() {
  Dialogue d;
  d.dialogue_id = "d1";
  d.category = "shoes";
  d.turns.push_back({{Role::kUser, "red shoes please", 0}, {{"color", "red"}}, {}, {}});
  d.turns.push_back({{Role::kSystem, "which size?", 1}, {{"size", ""}}, {"size"}, {}});
  d.turns.push_back({{Role::kUser, "small", 2}, {{"size", "small"}}, {}, {}});
  d.turns.push_back({{Role::kSystem, "try this one", 3}, {}, {}, {"S1"}});
  return d;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  for (const auto& x : v) {
    if (x.code == code) return true;
  }
  return false;
}

}  // namespace

TEST(Validate, WellFormedDialogueHasNoViolations) {
  EXPECT_TRUE(validate_dialogue(tiny_dialogue(), tiny_catalog()).empty());
}

TEST(Validate, UnknownProductIsNamed) {
  Dialogue d = tiny_dialogue();
  d.turns[3].recommended_products = {"X9"};
  const auto v = validate_dialogue(d, tiny_catalog());
  ASSERT_TRUE(has_code(v, "orphan-product"));
  EXPECT_NE(describe(v).find("X9"), std::string::npos);
}

TEST(Validate, UserTurnMayNotRecommendOrElicit) {
  Dialogue d = tiny_dialogue();
  d.turns[0].recommended_products = {"S1"};
  EXPECT_TRUE(has_code(validate_dialogue(d, tiny_catalog()), "role"));
  d = tiny_dialogue();
  d.turns[2].elicit_attributes = {"color"};
  EXPECT_TRUE(has_code(validate_dialogue(d, tiny_catalog()), "role"));
}

TEST(Validate, SplitsMustBeDisjoint) {
  DatasetSplit s;
  s.train = {tiny_dialogue()};
  s.test = {tiny_dialogue()};
  EXPECT_TRUE(has_code(validate_split(s), "split"));
}

TEST(Synthetic, SameSeedGivesIdenticalCorpus) {
  const auto a = generate_synthetic_corpus(testing_support::toy_spec(7));
  const auto b = generate_synthetic_corpus(testing_support::toy_spec(7));
  EXPECT_EQ(a, b);
  TempDir da("syn-a"), db("syn-b");
  write_uneed_format(da.path(), a);
  write_uneed_format(db.path(), b);
  for (const char* f : {"catalog/Beauty.jsonl", "train/Beauty.jsonl", "test/Beauty.jsonl"}) {
    std::ifstream fa(da.path() / f), fb(db.path() / f);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, sb) << f;
  }
}

TEST(Synthetic, ToyCorpusShapeAndConsistency) {
  const auto& cc = testing_support::toy_category();
  EXPECT_EQ(cc.catalog.size(), 50u);
  EXPECT_EQ(cc.catalog.category().attribute_schema.size(), 5u);
  EXPECT_EQ(cc.split.size(), 200u);
  EXPECT_TRUE(validate_catalog(cc.catalog).empty());
  EXPECT_TRUE(validate_split(cc.split).empty());
  for (const auto& d : testing_support::all_dialogues(cc)) {
    EXPECT_TRUE(validate_dialogue(d, cc.catalog).empty()) << d.dialogue_id;
    EXPECT_TRUE(consistency_violations(d, cc.catalog).empty()) << d.dialogue_id;
  }
}

TEST(Synthetic, ValidAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto spec = testing_support::toy_spec(seed);
    spec.dialogues_per_category = 30;
    spec.categories = default_categories(2, 4, 3);
    for (const auto& [id, cc] : generate_synthetic_corpus(spec)) {
      EXPECT_TRUE(validate_split(cc.split).empty());
      for (const auto& d : testing_support::all_dialogues(cc)) {
        ASSERT_TRUE(validate_dialogue(d, cc.catalog).empty()) << "seed " << seed << " " << d.dialogue_id;
        ASSERT_TRUE(consistency_violations(d, cc.catalog).empty()) << "seed " << seed << " " << d.dialogue_id;
      }
    }
  }
}

TEST(Synthetic, TwentyProductsIsTooFew) {
  auto spec = testing_support::toy_spec();
  spec.products_per_category = 20;
  EXPECT_THROW(generate_synthetic_corpus(spec), PreconditionError);
}

TEST(Loader, RoundTripThroughFiles) {
  TempDir dir("roundtrip");
  auto spec = testing_support::toy_spec(3);
  spec.categories = default_categories(3, 5, 4);
  spec.dialogues_per_category = 40;
  const Corpus c = generate_synthetic_corpus(spec);
  write_uneed_format(dir.path(), c);
  const LoadResult r = load_uneed_format(dir.path());
  EXPECT_EQ(r.corpus, c);
  EXPECT_EQ(r.total_dialogues, 120u);
  for (const auto& [id, n] : r.dialogue_counts) EXPECT_EQ(n, 40u) << id;
}

TEST(Loader, EmptyDirectoryIsAnError) {
  TempDir dir("empty");
  try {
    load_uneed_format(dir.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("no category files found"), std::string::npos);
  }
}

TEST(Loader, MalformedRecordNamesFileAndLine) {
  TempDir dir("malformed");
  write_file(dir.path() / "catalog" / "shoes.jsonl",
             R"({"product_id":"S1","category":"shoes","attributes":{"color":"red"}})"
             "\n");
  write_file(dir.path() / "train" / "shoes.jsonl",
             R"({"dialogue_id":"d1","category":"shoes","turns":[{"role":"user","text":"hi","frames":[],"elicit":[],"recommend":[]}],"behaviors":[]})"
             "\n"
             R"({"dialogue_id":"d2","category":"shoes","turns":[{"role":"user","text":"hi","frames":[],"elicit":["color"],"recommend":[]}],"behaviors":[]})"
             "\n");
  try {
    load_uneed_format(dir.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(e.file().find("train"), std::string::npos);
  }
}

TEST(Loader, OrphanProductsAreListed) {
  TempDir dir("orphans");
  write_file(dir.path() / "catalog" / "shoes.jsonl",
             R"({"product_id":"S1","category":"shoes","attributes":{"color":"red"}})"
             "\n");
  write_file(dir.path() / "test" / "shoes.jsonl",
             R"({"dialogue_id":"d1","category":"shoes","turns":[{"role":"user","text":"hi","frames":[],"elicit":[],"recommend":[]},{"role":"system","text":"this","frames":[],"elicit":[],"recommend":["X9","X7"]}],"behaviors":[]})"
             "\n");
  try {
    load_uneed_format(dir.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("X7"), std::string::npos);
    EXPECT_NE(what.find("X9"), std::string::npos);
  }
}

TEST(Loader, FullWidthPunctuationIsNormalized) {
  TempDir dir("fullwidth");
  write_file(dir.path() / "catalog" / "shoes.jsonl",
             R"({"product_id":"S1","category":"shoes","attributes":{"color":"red"}})"
             "\n");
  write_file(dir.path() / "train" / "shoes.jsonl",
             "{\"dialogue_id\":\"d1\",\"category\":\"shoes\",\"turns\":[{\"role\":\"user\",\"text\":\"red\xEF\xBC\x9B please\","
             "\"frames\":[{\"attribute\":\"color\",\"value\":\"red\"}],\"elicit\":[],\"recommend\":[]}],\"behaviors\":[]}\n");
  const auto r = load_uneed_format(dir.path());
  const auto& turn = r.corpus.at("shoes").split.train.at(0).turns.at(0);
  EXPECT_EQ(turn.utterance.text.find("\xEF\xBC\x9B"), std::string::npos);
}
