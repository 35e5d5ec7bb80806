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

#include <cmath>
#include <random>

#include "crsllm/collab/collab.hpp"
#include "crsllm/crs/oracle.hpp"
#include "crsllm/llm/backend.hpp"
#include "crsllm/util/error.hpp"
#include "support.hpp"

using namespace crsllm;
using namespace crsllm::collab;
using tasks::TaskKind;

namespace {

struct Binding {
  std::string kind = "oracle";  // oracle | noisy | copy
  double accuracy = 1.0;
  std::uint64_t seed = 1;
};

class DoubleProvider final : public SystemProvider {
 public:
  DoubleProvider(const corpus::CategoryCorpus& cc, const std::vector<tasks::TaskInstance>& all,
                 std::map<std::string, Binding> bindings)
      : cc_(cc), bindings_(std::move(bindings)) {
    std::vector<llm::InstructionSample> samples;
    for (const auto& inst : all) samples.push_back(llm::build_instruction_sample(inst, cc.catalog.category()));
    crs_gold_ = crs::build_crs_gold_table(all);
    llm_gold_ = llm::build_llm_gold_table(samples);
  }

  const crs::UnifiedCrs& assister_crs(const std::string& role) override {
    auto& slot = crs_cache_[role];
    if (!slot) slot = fresh_crs(role);
    return *slot;
  }
  const llm::LlmBackend& assister_llm(const std::string& role) override {
    auto& slot = llm_cache_[role];
    if (!slot) slot = fresh_llm(role);
    return *slot;
  }
  std::unique_ptr<crs::UnifiedCrs> fresh_crs(const std::string& role) override {
    const Binding& b = bindings_.at(role);
    if (b.kind == "copy") return crs::make_copy_assist_crs(role, cc_.catalog);
    if (b.kind == "noisy") {
      return crs::make_oracle_crs(role, cc_.catalog, crs_gold_, crs::NoiseSpec{b.accuracy, b.seed, cc_.catalog.category(), {}});
    }
    return crs::make_oracle_crs(role, cc_.catalog, crs_gold_);
  }
  std::unique_ptr<llm::LlmBackend> fresh_llm(const std::string& role) override {
    const Binding& b = bindings_.at(role);
    if (b.kind == "copy") return llm::make_copy_assist_llm();
    if (b.kind == "noisy") return llm::make_noisy_llm(llm_gold_, crs::NoiseSpec{b.accuracy, b.seed, cc_.catalog.category(), {}});
    return llm::make_oracle_llm(llm_gold_);
  }

 private:
  const corpus::CategoryCorpus& cc_;
  std::map<std::string, Binding> bindings_;
  crs::CrsGoldTable crs_gold_;
  llm::LlmGoldTable llm_gold_;
  std::map<std::string, std::unique_ptr<crs::UnifiedCrs>> crs_cache_;
  std::map<std::string, std::unique_ptr<llm::LlmBackend>> llm_cache_;
};

struct Fixture {
  const corpus::CategoryCorpus& cc = testing_support::toy_category();
  std::vector<tasks::TaskInstance> train = testing_support::instances_of(cc.split.train, cc.catalog);
  std::vector<tasks::TaskInstance> test_all = testing_support::instances_of(cc.split.test, cc.catalog);
  std::set<std::string> ambiguous = testing_support::ambiguous_keys(test_all, cc.catalog.category());

  std::vector<tasks::TaskInstance> all() const {
    auto out = train;
    out.insert(out.end(), test_all.begin(), test_all.end());
    return out;
  }
  CollabData data(TaskKind kind) const {
    CollabData d;
    d.category = cc.catalog.category();
    d.train = train;
    for (const auto& i : test_all) {
      if (i.kind == kind) d.test.push_back(i);
    }
    d.threads = 4;
    return d;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

bool matches_gold(const tasks::Prediction& p, const tasks::TaskInstance& inst) {
  const auto g = tasks::gold_prediction(inst);
  switch (inst.kind) {
    case TaskKind::kUnderstanding: return p.frames == g.frames;
    case TaskKind::kElicitation: return p.attributes == g.attributes;
    case TaskKind::kRecommendation: return p.product_id == g.product_id;
    case TaskKind::kGeneration: return p.response == g.response;
  }
  return false;
}

const tasks::TaskInstance& first_of(TaskKind kind) {
  for (const auto& i : fixture().test_all) {
    if (i.kind == kind) return i;
  }
  throw std::logic_error("no instance");
}

corpus::DialogueTurn user_turn(const std::string& text) { return {{corpus::Role::kUser, text, 0}, {}, {}, {}}; }

}  // namespace

// ---- variants -----------------------------------------------------------------

TEST(Variants, NamesRoundTrip) {
  ASSERT_EQ(collaboration_variants().size(), 8u);
  for (const auto& v : collaboration_variants()) {
    EXPECT_EQ(parse_variant_name(v.name()), v);
    EXPECT_NE(role_type(v.assister), role_type(v.assisted));
  }
  for (const auto& v : baseline_variants()) EXPECT_EQ(parse_variant_name(v.name()), v);
  EXPECT_EQ(parse_variant_name("CLLM-BCRS").direction, Direction::kLlmAssistsCrs);
  EXPECT_EQ(parse_variant_name("CCRS-ALLM").direction, Direction::kCrsAssistsLlm);
  for (const char* bad : {"CLLM-ALLM", "BCRS-CCRS", "XYZ", "CLLM-", "-BCRS"}) {
    EXPECT_THROW(parse_variant_name(bad), ConfigError) << bad;
  }
}

// ---- payloads and augmentation ------------------------------------------------

TEST(Payload, CrsRankingBecomesLetters) {
  auto inst = first_of(TaskKind::kRecommendation);
  tasks::Prediction p;
  p.kind = TaskKind::kRecommendation;
  for (char l : {'C', 'B', 'A'}) p.ranking.push_back({*tasks::resolve_letter(inst, l), 0.3});
  const auto payload = crs_payload(p, inst);
  EXPECT_EQ(payload.text_form, "C, B, A");
  EXPECT_EQ(payload.predicted_product, tasks::resolve_letter(inst, 'C'));
}

TEST(Payload, EmptyResultIsMarked) {
  const auto& inst = first_of(TaskKind::kUnderstanding);
  tasks::Prediction p;
  p.kind = TaskKind::kUnderstanding;
  const auto sample = llm::build_instruction_sample(inst, fixture().cc.catalog.category());
  const auto out = augment_instruction_with_crs(sample, crs_payload(p, inst));
  EXPECT_TRUE(out.input.ends_with("\n[CRS result] (no result)"));
}

TEST(Payload, AugmentationKeepsPrefixAndIsNotRepeated) {
  const auto& cat = fixture().cc.catalog.category();
  for (const auto& inst : fixture().test_all) {
    const auto sample = llm::build_instruction_sample(inst, cat);
    const auto payload = crs_payload(tasks::gold_prediction(inst), inst);
    const auto out = augment_instruction_with_crs(sample, payload);
    EXPECT_TRUE(out.instruction.starts_with(sample.instruction));
    EXPECT_TRUE(out.input.starts_with(sample.input));
    EXPECT_EQ(out.output, sample.output);
    EXPECT_TRUE(is_crs_augmented(out));
    EXPECT_FALSE(is_crs_augmented(sample));
    EXPECT_THROW(augment_instruction_with_crs(out, payload), PreconditionError);
    const auto [ins, in] = llm::strip_crs_assist(out.instruction, out.input);
    EXPECT_EQ(ins, sample.instruction);
    EXPECT_EQ(in, sample.input);
  }
}

TEST(Payload, LlmSegmentAppended) {
  tasks::TaskInstance inst;
  inst.kind = TaskKind::kUnderstanding;
  inst.dialogue_id = "d";
  inst.context = {user_turn("t1")};
  inst.cut_index = 1;
  inst.current = user_turn("t2");
  tasks::Prediction p;
  p.kind = TaskKind::kUnderstanding;
  p.frames = {{"color", "red"}};
  const auto payload = llm_payload(p, inst);
  const auto seq = crs::serialize_context(inst);
  const auto out = augment_prompt_with_llm(seq, payload);
  EXPECT_EQ(out.text, "[user] t1 [user] t2 [LLM] color: red");
  EXPECT_EQ(out.task_prompt, seq.task_prompt);
  EXPECT_THROW(augment_prompt_with_llm(out, payload), PreconditionError);
  EXPECT_EQ(crs::strip_llm_segment(out.text), seq.text);

  tasks::Prediction bad = p;
  bad.parse_ok = false;
  EXPECT_EQ(augment_prompt_with_llm(seq, llm_payload(bad, inst)).text, "[user] t1 [user] t2 [LLM]");
}

TEST(Payload, RecommendationPromptCannotBeAugmented) {
  const auto& inst = first_of(TaskKind::kRecommendation);
  const auto table = crs::ItemEmbeddingTable::one_hot(fixture().cc.catalog);
  const auto payload = llm_payload(tasks::gold_prediction(inst), inst, &table);
  EXPECT_THROW(augment_prompt_with_llm(crs::serialize_context(inst), payload), PreconditionError);
  EXPECT_THROW(llm_payload(tasks::gold_prediction(inst), inst), PreconditionError);
  const auto crs_side = crs_payload(tasks::gold_prediction(inst), inst);
  EXPECT_THROW(augment_prompt_with_llm(crs::serialize_context(first_of(TaskKind::kElicitation)), crs_side),
               PreconditionError);
}

TEST(Payload, JsonRoundTrip) {
  const auto table = crs::ItemEmbeddingTable::one_hot(fixture().cc.catalog);
  for (const auto& inst : fixture().test_all) {
    auto g = tasks::gold_prediction(inst);
    if (inst.kind == TaskKind::kRecommendation) g.ranking = {{*inst.gold_product, 0.9}};
    for (const auto& p : {crs_payload(g, inst), llm_payload(g, inst, &table)}) {
      EXPECT_EQ(payload_from_json(nlohmann::json::parse(to_json(p).dump())), p);
    }
  }
}

TEST(Payload, AssistVectorIsEmbeddingRowOrZero) {
  const auto& inst = first_of(TaskKind::kRecommendation);
  const auto table = crs::ItemEmbeddingTable::one_hot(fixture().cc.catalog);
  auto g = tasks::gold_prediction(inst);
  const auto ok = llm_payload(g, inst, &table);
  const auto row = table.row(*inst.gold_product);
  EXPECT_EQ(*ok.assist_embedding, std::vector<double>(row.begin(), row.end()));
  g.parse_ok = false;
  const auto bad = llm_payload(g, inst, &table);
  EXPECT_EQ(*bad.assist_embedding, std::vector<double>(table.dim(), 0.0));
}

// ---- enhanced scoring -----------------------------------------------------------

namespace {

class ConstEncoder final : public crs::Seq2SeqBackend {
 public:
  explicit ConstEncoder(std::vector<double> c) : c_(std::move(c)) {}
  std::string kind() const override { return "const"; }
  std::size_t context_dim() const override { return c_.size(); }
  std::vector<double> encode(const std::string&) const override { return c_; }
  std::string generate(const std::string&, const std::string&) const override { return ""; }
  std::vector<double> token_nll(const std::string&, const std::string&, const std::string&) const override { return {0.0}; }
  nlohmann::json save() const override { return {}; }
  void load(const nlohmann::json&) override {}

 private:
  std::vector<double> c_;
};

}  // namespace

TEST(Enhanced, ZeroAssistReducesToPlainScoring) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const auto& cc = fixture().cc;
  std::vector<std::string> cands;
  for (std::size_t i = 0; i < 20; ++i) cands.push_back(cc.catalog.products()[i].product_id);
  for (int trial = 0; trial < 40; ++trial) {
    const auto table = crs::ItemEmbeddingTable::from_attributes(cc.catalog, 6, rng());
    auto head = crs::RecommendationHead::random(6, 4, rng(), 0.8);
    for (auto& w : head.w_assist) w = nd(rng);
    for (auto& w : head.w_assist_outer) w = nd(rng);
    ConstEncoder enc({nd(rng), nd(rng), nd(rng), nd(rng)});
    const crs::PromptSequence x_r{crs::PromptVariant::kXR, "[user] x", ""};
    const auto plain = crs::score_candidates(head, table, enc, x_r, cands);
    AssistPayload none;
    none.source = Source::kLlm;
    none.kind = TaskKind::kRecommendation;
    none.assist_embedding = std::vector<double>(6, 0.0);
    const auto zero = enhanced_score_candidates(head, table, enc, x_r, cands, none);
    none.assist_embedding.reset();
    const auto absent = enhanced_score_candidates(head, table, enc, x_r, cands, none);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      EXPECT_NEAR(zero.probabilities[i], plain.probabilities[i], 1e-12);
      EXPECT_NEAR(absent.probabilities[i], plain.probabilities[i], 1e-12);
    }
    // With the assist weights at their zero initialisation any ê is ignored.
    auto fresh = head;
    std::fill(fresh.w_assist.begin(), fresh.w_assist.end(), 0.0);
    std::fill(fresh.w_assist_outer.begin(), fresh.w_assist_outer.end(), 0.0);
    AssistPayload some = none;
    const auto r = table.row(cands[trial % 20]);
    some.assist_embedding = std::vector<double>(r.begin(), r.end());
    const auto a = enhanced_score_candidates(fresh, table, enc, x_r, cands, some);
    const auto b = crs::score_candidates(fresh, table, enc, x_r, cands);
    for (std::size_t i = 0; i < cands.size(); ++i) EXPECT_NEAR(a.probabilities[i], b.probabilities[i], 1e-12);
  }
}

TEST(Enhanced, MatchesByHandSoftmax) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd;
  const auto& cc = fixture().cc;
  std::vector<std::string> cands;
  for (std::size_t i = 0; i < 20; ++i) cands.push_back(cc.catalog.products()[i + 5].product_id);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 5, k = 3;
    const auto table = crs::ItemEmbeddingTable::random(cc.catalog, d, rng());
    auto head = crs::RecommendationHead::random(d, k, rng(), 0.6);
    for (auto& w : head.w_assist) w = nd(rng);
    for (auto& w : head.w_assist_outer) w = nd(rng);
    head.bias[0] = nd(rng);
    const std::vector<double> c{nd(rng), nd(rng), nd(rng)};
    ConstEncoder enc(c);
    std::vector<double> a(d);
    for (auto& x : a) x = nd(rng);
    AssistPayload payload;
    payload.source = Source::kLlm;
    payload.kind = TaskKind::kRecommendation;
    payload.assist_embedding = a;
    const auto got = enhanced_score_candidates(head, table, enc, {crs::PromptVariant::kXR, "t", ""}, cands, payload);
    std::vector<double> s;
    for (const auto& id : cands) {
      const auto e = table.row(id);
      double v = head.bias[0];
      for (std::size_t i = 0; i < d; ++i) {
        v += head.w_item[i] * e[i] + head.w_assist[i] * a[i];
        for (std::size_t j = 0; j < k; ++j) v += e[i] * head.w_context_outer[i * k + j] * c[j];
        for (std::size_t j = 0; j < d; ++j) v += e[i] * head.w_assist_outer[i * d + j] * a[j];
      }
      for (std::size_t j = 0; j < k; ++j) v += head.w_context[j] * c[j];
      s.push_back(v);
    }
    double z = 0.0;
    for (double v : s) z += std::exp(v);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(got.probabilities[i], std::exp(s[i]) / z, 1e-12);
  }
  AssistPayload wrong;
  wrong.assist_embedding = std::vector<double>(2, 0.0);
  const auto table = crs::ItemEmbeddingTable::random(cc.catalog, 5, 1);
  EXPECT_THROW(enhanced_score_candidates(crs::RecommendationHead(5, 1), table, ConstEncoder({0.0}),
                                         {crs::PromptVariant::kXR, "t", ""}, cands, wrong),
               PreconditionError);
}

// ---- end to end with test doubles -----------------------------------------------

TEST(Collaboration, OracleVariantsReproduceGold) {
  const auto& f = fixture();
  std::map<std::string, Binding> all_oracle{{"CLLM", {}}, {"ALLM", {}}, {"BCRS", {}}, {"CCRS", {}}};
  DoubleProvider systems(f.cc, f.all(), all_oracle);
  std::vector<Variant> variants = collaboration_variants();
  for (const auto& b : baseline_variants()) variants.push_back(b);
  for (TaskKind kind : tasks::kAllTasks) {
    const auto data = f.data(kind);
    for (const auto& v : variants) {
      // An LLM ranking is a single letter; everything else is covered.
      const auto r = run_collaboration(v, kind, data, systems);
      ASSERT_EQ(r.predictions.size(), data.test.size());
      for (std::size_t i = 0; i < data.test.size(); ++i) {
        if (f.ambiguous.count(data.test[i].key())) continue;
        EXPECT_TRUE(matches_gold(r.predictions[i], data.test[i])) << v.name() << " " << data.test[i].key();
      }
      if (v.direction == Direction::kNone) {
        EXPECT_TRUE(r.test_payloads.empty());
      } else {
        EXPECT_EQ(r.test_payloads.size(), data.test.size());
      }
    }
  }
}

TEST(Collaboration, CopyAssistedSystemInheritsAssisterAccuracy) {
  const auto& f = fixture();
  for (double p : {0.3, 0.8}) {
    DoubleProvider systems(f.cc, f.all(),
                           {{"CLLM", {"noisy", p, 5}}, {"ALLM", {"copy"}}, {"BCRS", {"copy"}}, {"CCRS", {"noisy", p, 6}}});
    for (TaskKind kind : tasks::kAllTasks) {
      const auto data = f.data(kind);
      for (const char* name : {"CLLM-BCRS", "CCRS-ALLM"}) {
        const auto v = parse_variant_name(name);
        const auto assisted = run_collaboration(v, kind, data, systems);
        ASSERT_EQ(assisted.test_payloads.size(), data.test.size());
        std::size_t agree = 0, assister_right = 0, assisted_right = 0;
        for (std::size_t i = 0; i < data.test.size(); ++i) {
          const auto& pay = assisted.test_payloads[i];
          const auto& pred = assisted.predictions[i];
          if (kind == TaskKind::kRecommendation) {
            agree += pay.predicted_product == pred.product_id;
          } else {
            agree += pay.text_form == collab::llm_payload(pred, data.test[i]).text_form;
          }
          assisted_right += matches_gold(pred, data.test[i]);
          tasks::Prediction as_pred = pred;
          if (kind == TaskKind::kRecommendation) as_pred.product_id = pay.predicted_product;
          assister_right += matches_gold(as_pred, data.test[i]);
        }
        EXPECT_EQ(agree, data.test.size()) << name << " " << tasks::task_name(kind);
        EXPECT_EQ(assisted_right, assister_right);
      }
    }
  }
}

TEST(Collaboration, GoldAssistGivesGoldPayloads) {
  const auto& f = fixture();
  DoubleProvider systems(f.cc, f.all(), {{"CLLM", {"noisy", 0.0, 5}}, {"BCRS", {"copy"}}});
  auto data = f.data(TaskKind::kElicitation);
  data.gold_assist = true;
  const auto r = run_collaboration(parse_variant_name("CLLM-BCRS"), TaskKind::kElicitation, data, systems);
  for (std::size_t i = 0; i < data.test.size(); ++i) EXPECT_TRUE(matches_gold(r.predictions[i], data.test[i]));
}

TEST(Collaboration, MixedKindsAreRejected) {
  const auto& f = fixture();
  DoubleProvider systems(f.cc, f.all(), {{"BCRS", {}}});
  auto data = f.data(TaskKind::kElicitation);
  data.test.push_back(first_of(TaskKind::kUnderstanding));
  EXPECT_THROW(run_collaboration(parse_variant_name("BCRS"), TaskKind::kElicitation, data, systems), PreconditionError);
}
