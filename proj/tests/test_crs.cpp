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
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "crsllm/crs/noise.hpp"
#include "crsllm/crs/optimizer.hpp"
#include "crsllm/crs/oracle.hpp"
#include "crsllm/crs/prompt.hpp"
#include "crsllm/crs/recommender.hpp"
#include "crsllm/crs/structured.hpp"
#include "crsllm/crs/tiny_seq2seq.hpp"
#include "crsllm/crs/tokenizer.hpp"
#include "crsllm/crs/training.hpp"
#include "crsllm/crs/unified.hpp"
#include "crsllm/util/error.hpp"
#include "support.hpp"

using namespace crsllm;
using namespace crsllm::crs;
using tasks::TaskKind;

namespace {

corpus::DialogueTurn turn(corpus::Role role, const std::string& text, std::vector<corpus::SemanticFrame> frames = {},
                          std::vector<std::string> elicit = {}, std::vector<std::string> rec = {}) {
  return {{role, text, 0}, std::move(frames), std::move(elicit), std::move(rec)};
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Direct evaluation of the CLS linear layer on the explicit concatenation
// [e, c, a, e (x) c, e (x) a].
double cls_by_hand(const RecommendationHead& h, const std::vector<double>& e, const std::vector<double>& c,
                   const std::vector<double>& a) {
  const std::size_t d = e.size(), k = c.size();
  std::vector<double> features, weights;
  for (std::size_t i = 0; i < d; ++i) features.push_back(e[i]), weights.push_back(h.w_item[i]);
  for (std::size_t j = 0; j < k; ++j) features.push_back(c[j]), weights.push_back(h.w_context[j]);
  for (std::size_t j = 0; j < d; ++j) features.push_back(a.empty() ? 0.0 : a[j]), weights.push_back(h.w_assist[j]);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < k; ++j) features.push_back(e[i] * c[j]), weights.push_back(h.w_context_outer[i * k + j]);
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      features.push_back(e[i] * (a.empty() ? 0.0 : a[j]));
      weights.push_back(h.w_assist_outer[i * d + j]);
    }
  }
  double s = h.bias[0];
  for (std::size_t i = 0; i < features.size(); ++i) s += features[i] * weights[i];
  return s;
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("P" + std::to_string(i));
  return out;
}

// Context encoder with a fixed output; the head is the only thing under test.
class FixedEncoder final : public Seq2SeqBackend {
 public:
  explicit FixedEncoder(std::vector<double> c) : c_(std::move(c)) {}
  std::string kind() const override { return "fixed"; }
  std::size_t context_dim() const override { return c_.size(); }
  std::vector<double> encode(const std::string&) const override { return c_; }
  std::string generate(const std::string&, const std::string&) const override { return ""; }
  std::vector<double> token_nll(const std::string&, const std::string&, const std::string& t) const override {
    return std::vector<double>(tokenize(t).size() + 1, 1.0);
  }
  nlohmann::json save() const override { return {}; }
  void load(const nlohmann::json&) override {}

 private:
  std::vector<double> c_;
};

TinyCrsConfig small_tiny() {
  TinyCrsConfig cfg;
  cfg.backend.embed_dim = 12;
  cfg.backend.context_dim = 16;
  cfg.backend.decoder_dim = 20;
  cfg.backend.max_output_tokens = 16;
  cfg.item_dim = 8;
  return cfg;
}

std::vector<tasks::TaskInstance> toy_instances(std::size_t dialogues) {
  const auto& cc = testing_support::toy_category();
  std::vector<corpus::Dialogue> ds(cc.split.train.begin(),
                                   cc.split.train.begin() + static_cast<std::ptrdiff_t>(dialogues));
  return testing_support::instances_of(ds, cc.catalog);
}

}  // namespace

// ---- structured grammar ---------------------------------------------------

TEST(Structured, ParsesFrames) {
  const auto p = parse_structured_output("a: 1;b: 2", TaskKind::kUnderstanding);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.frames, (std::vector<corpus::SemanticFrame>{{"a", "1"}, {"b", "2"}}));
}

TEST(Structured, EmptyTextIsEmptyAndOk) {
  const auto p = parse_structured_output("", TaskKind::kUnderstanding);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_TRUE(p.frames.empty());
}

TEST(Structured, MalformedSegmentIsDroppedWithOneDiagnostic) {
  const auto p = parse_structured_output("a: 1;;b", TaskKind::kUnderstanding);
  EXPECT_EQ(p.frames, (std::vector<corpus::SemanticFrame>{{"a", "1"}}));
  EXPECT_EQ(p.diagnostics.size(), 1u);
  EXPECT_FALSE(p.parse_ok);
}

TEST(Structured, AttributesAndEmptyValues) {
  EXPECT_EQ(parse_structured_output("color;size", TaskKind::kElicitation).attributes,
            (std::vector<std::string>{"color", "size"}));
  EXPECT_EQ(render_frames({{"color", "red"}, {"size", ""}}), "color: red;size:");
  EXPECT_EQ(parse_structured_output("color: red;size:", TaskKind::kUnderstanding).frames,
            (std::vector<corpus::SemanticFrame>{{"color", "red"}, {"size", ""}}));
  EXPECT_THROW(parse_structured_output("x", TaskKind::kRecommendation), PreconditionError);
}

TEST(Structured, RenderParseRoundTrip) {
  std::mt19937_64 rng(8);
  const std::vector<std::string> words{"color", "size", "skin type", "price", "red", "dry", "large", "cheap"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<corpus::SemanticFrame> frames;
    const int n = static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      frames.push_back({words[rng() % 4], rng() % 4 == 0 ? "" : words[4 + rng() % 4]});
    }
    const auto back = parse_structured_output(render_frames(frames), TaskKind::kUnderstanding);
    ASSERT_TRUE(back.parse_ok);
    EXPECT_EQ(back.frames, frames);
  }
}

// ---- prompt serialization -------------------------------------------------

TEST(Prompt, UnderstandingExample) {
  tasks::TaskInstance inst;
  inst.kind = TaskKind::kUnderstanding;
  inst.dialogue_id = "d";
  inst.cut_index = 2;
  inst.context = {turn(corpus::Role::kUser, "t1", {{"color", "red"}}), turn(corpus::Role::kSystem, "s1")};
  inst.current = turn(corpus::Role::kUser, "t2", {{"size", "small"}});
  const auto seq = serialize_context(inst);
  EXPECT_EQ(seq.variant, PromptVariant::kXU);
  EXPECT_EQ(seq.text, "[user] t1 [understand] color: red [system] s1 [user] t2");
  EXPECT_EQ(seq.task_prompt, "Identify attributes and values:");
}

TEST(Prompt, ContextRendering) {
  const std::vector<corpus::DialogueTurn> ctx{turn(corpus::Role::kUser, "t1", {{"color", "red"}}),
                                              turn(corpus::Role::kSystem, "which size?", {}, {"size"}, {"P1", "P2"})};
  EXPECT_EQ(render_turns({ctx[0]}, PromptVariant::kXU), "[user] t1 [understand] color: red");
  EXPECT_EQ(render_turns(ctx, PromptVariant::kXA), "[user] t1 [understand] color: red [elicit] size [system] which size?");
  EXPECT_EQ(render_turns(ctx, PromptVariant::kXR),
            "[user] t1 [understand] color: red [recommend] P1;P2 [system] which size?");
  EXPECT_EQ(render_turns(ctx, PromptVariant::kXG), "[user] t1 [understand] color: red [system] which size?");
}

TEST(Prompt, TaskPromptsVerbatim) {
  EXPECT_EQ(make_task_prompt(TaskKind::kUnderstanding), "Identify attributes and values:");
  EXPECT_EQ(make_task_prompt(TaskKind::kElicitation), "Select an attribute to ask:");
  EXPECT_EQ(make_task_prompt(TaskKind::kGeneration), "Generate a response:");
  EXPECT_THROW(make_task_prompt(TaskKind::kRecommendation), PreconditionError);
}

TEST(Prompt, SpecialTokens) {
  EXPECT_EQ(special_token_list(),
            (std::vector<std::string>{"[user]", "[system]", "[understand]", "[elicit]", "[recommend]", "[LLM]"}));
  EXPECT_EQ(tokenize("[user] hi, there [understand] a: b;c: d"),
            (std::vector<std::string>{"[user]", "hi", ",", "there", "[understand]", "a", ":", "b", ";", "c", ":", "d"}));
  EXPECT_EQ(detokenize(tokenize("a: b;c: d")), "a: b;c: d");
}

TEST(Prompt, VariantMismatchThrows) {
  const auto& cc = testing_support::toy_category();
  const auto insts = testing_support::instances_of({cc.split.test.front()}, cc.catalog);
  for (const auto& inst : insts) {
    if (inst.kind == TaskKind::kRecommendation) {
      EXPECT_THROW(serialize_context(inst, PromptVariant::kXA), PreconditionError);
      EXPECT_TRUE(serialize_context(inst).task_prompt.empty());
    }
    if (inst.kind == TaskKind::kElicitation) EXPECT_THROW(serialize_context(inst, PromptVariant::kXR), PreconditionError);
  }
}

TEST(Prompt, ParseInvertsSerializer) {
  const auto& cc = testing_support::toy_category();
  for (const auto& inst : testing_support::instances_of(testing_support::all_dialogues(cc), cc.catalog)) {
    const auto seq = serialize_context(inst);
    const ParsedPrompt parsed = parse_prompt(seq.text);
    std::size_t expected_turns = inst.context.size() + (inst.kind == TaskKind::kUnderstanding ? 1 : 0);
    ASSERT_EQ(parsed.turns.size(), expected_turns) << seq.text;
    for (std::size_t i = 0; i < inst.context.size(); ++i) {
      EXPECT_EQ(parsed.turns[i].role, inst.context[i].role());
      EXPECT_EQ(parsed.turns[i].text, inst.context[i].utterance.text);
      EXPECT_EQ(parsed.turns[i].frames, inst.context[i].frames);
    }
    EXPECT_FALSE(parsed.llm_segment.has_value());
    if (inst.kind == TaskKind::kGeneration) {
      EXPECT_EQ(parsed.tail_elicit, inst.given_attributes);
      EXPECT_EQ(parsed.tail_recommend, inst.given_products);
    }
  }
}

TEST(Prompt, LlmSegment) {
  const auto parsed = parse_prompt("[user] t2 [LLM] color: red");
  ASSERT_TRUE(parsed.llm_segment);
  EXPECT_EQ(*parsed.llm_segment, "color: red");
  EXPECT_EQ(strip_llm_segment("[user] t2 [LLM] color: red"), "[user] t2");
  EXPECT_EQ(strip_llm_segment("[user] t2"), "[user] t2");
  EXPECT_THROW(parse_prompt("no role marker"), FormatError);
}

// ---- recommendation head ----------------------------------------------------

TEST(Head, LogitsMatchExplicitConcatenation) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng() % 6, k = 1 + rng() % 5, n = 1 + rng() % 7;
    RecommendationHead h = RecommendationHead::random(d, k, rng(), 0.7);
    h.w_assist = random_vector(rng, d);
    h.w_assist_outer = random_vector(rng, d * d);
    h.bias[0] = random_vector(rng, 1)[0];
    std::vector<std::vector<double>> items;
    for (std::size_t i = 0; i < n; ++i) items.push_back(random_vector(rng, d));
    const auto c = random_vector(rng, k);
    const auto a = trial % 3 == 0 ? std::vector<double>{} : random_vector(rng, d);
    std::vector<std::span<const double>> spans(items.begin(), items.end());
    const auto logits = h.logits(spans, c, a);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(logits[i], cls_by_hand(h, items[i], c, a), 1e-9);
  }
}

TEST(Head, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const std::size_t d = 4, k = 3, n = 5;
  RecommendationHead h = RecommendationHead::random(d, k, 3, 0.5);
  h.w_assist = random_vector(rng, d);
  h.w_assist_outer = random_vector(rng, d * d);
  std::vector<std::vector<double>> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back(random_vector(rng, d));
  auto c = random_vector(rng, k);
  const auto a = random_vector(rng, d);
  const auto g = random_vector(rng, n);  // L = g . logits
  auto loss = [&](const RecommendationHead& hh, const std::vector<std::vector<double>>& it, const std::vector<double>& cc) {
    std::vector<std::span<const double>> spans(it.begin(), it.end());
    const auto l = hh.logits(spans, cc, a);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += g[i] * l[i];
    return s;
  };
  std::vector<std::vector<double>> item_grads(n, std::vector<double>(d, 0.0));
  std::vector<std::span<double>> grad_spans(item_grads.begin(), item_grads.end());
  std::vector<std::span<const double>> spans(items.begin(), items.end());
  h.zero_grad();
  const auto dc = h.backward(spans, c, a, g, grad_spans);
  const double eps = 1e-6;
  for (std::size_t j = 0; j < k; ++j) {
    auto cp = c, cm = c;
    cp[j] += eps, cm[j] -= eps;
    EXPECT_NEAR(dc[j], (loss(h, items, cp) - loss(h, items, cm)) / (2 * eps), 1e-6);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      auto ip = items, im = items;
      ip[i][j] += eps, im[i][j] -= eps;
      EXPECT_NEAR(item_grads[i][j], (loss(h, ip, c) - loss(h, im, c)) / (2 * eps), 1e-6);
    }
  }
  for (auto& block : h.parameter_blocks()) {
    for (std::size_t p = 0; p < block.value.size(); ++p) {
      const double keep = block.value[p];
      block.value[p] = keep + eps;
      const double up = loss(h, items, c);
      block.value[p] = keep - eps;
      const double down = loss(h, items, c);
      block.value[p] = keep;
      EXPECT_NEAR(block.grad[p], (up - down) / (2 * eps), 1e-6) << block.name << "[" << p << "]";
    }
  }
}

TEST(Head, ZeroHeadIsUniformWithLossLog20) {
  ItemEmbeddingTable table(ids(20), 3);
  RecommendationHead h(3, 2);
  FixedEncoder enc({0.3, -0.2});
  const auto s = score_candidates(h, table, enc, {PromptVariant::kXR, "[user] x", ""}, ids(20));
  for (double p : s.probabilities) EXPECT_NEAR(p, 1.0 / 20.0, 1e-12);
  EXPECT_NEAR(recommendation_loss(s, "P4"), std::log(20.0), 1e-12);
}

TEST(Head, SingleCandidateHasProbabilityOne) {
  ItemEmbeddingTable table(ids(1), 2);
  RecommendationHead h = RecommendationHead::random(2, 2, 9);
  FixedEncoder enc({1.0, 2.0});
  const auto s = score_candidates(h, table, enc, {PromptVariant::kXR, "[user] x", ""}, ids(1));
  EXPECT_DOUBLE_EQ(s.probabilities[0], 1.0);
  EXPECT_NEAR(recommendation_loss(s, "P0"), 0.0, 1e-15);
}

TEST(Head, VanishingProbabilityIsFloored) {
  corpus::Category cat{"c", "C", {}};
  std::vector<corpus::Product> products;
  for (const auto& id : ids(3)) products.push_back({id, "c", {}});
  const auto table = ItemEmbeddingTable::one_hot(corpus::Catalog(cat, products));
  RecommendationHead h(3, 1);
  h.w_item = {-2000.0, 0.0, 0.0};
  const auto s = score_with_context(h, table, std::vector<double>{0.0}, ids(3));
  EXPECT_NEAR(recommendation_loss(s, "P0"), -std::log(1e-12), 1e-9);
  EXPECT_THROW(s.probability_of("nope"), PreconditionError);
}

TEST(Head, SoftmaxIsStableAndNormalized) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = random_vector(rng, 1 + rng() % 30);
    for (auto& x : v) x *= 300.0;
    const auto p = softmax(v);
    double sum = 0.0;
    for (double x : p) {
      ASSERT_TRUE(std::isfinite(x));
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Head, UnknownCandidateThrows) {
  ItemEmbeddingTable table(ids(3), 2);
  RecommendationHead h(2, 1);
  FixedEncoder enc({0.0});
  EXPECT_THROW(score_candidates(h, table, enc, {PromptVariant::kXR, "x", ""}, {"P0", "ZZ"}), PreconditionError);
}

// ---- optimizer --------------------------------------------------------------

TEST(AdamOptimizer, MinimizesQuadratic) {
  std::vector<double> x{3.0, -2.0, 0.5}, g(3, 0.0);
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  Adam adam(cfg);
  for (int i = 0; i < 2000; ++i) {
    for (std::size_t j = 0; j < 3; ++j) g[j] = 2.0 * (x[j] - 1.0);
    adam.step({{"x", x, g}});
  }
  for (double v : x) EXPECT_NEAR(v, 1.0, 1e-3);
  EXPECT_EQ(adam.steps(), 2000);
}

// ---- training -----------------------------------------------------------------

TEST(Training, TinyGradientsMatchFiniteDifferences) {
  TinySeq2SeqConfig cfg;
  cfg.embed_dim = 4;
  cfg.context_dim = 5;
  cfg.decoder_dim = 6;
  TinySeq2Seq m(cfg);
  const std::string text = "[user] red shoes [understand] color: red";
  const std::string prompt = "Identify attributes and values:";
  const std::string target = "color: red";
  m.fit_vocabulary({text, prompt, target, "size small"});
  auto mean_nll = [&] {
    const auto v = m.token_nll(text, prompt, target);
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  m.zero_grad();
  const double base = m.accumulate_seq2seq_gradient(text, prompt, target, 1.0);
  EXPECT_NEAR(base, mean_nll(), 1e-10);
  std::mt19937_64 rng(1);
  const double eps = 1e-6;
  for (auto& block : m.parameter_blocks()) {
    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t p = rng() % block.value.size();
      const double keep = block.value[p];
      block.value[p] = keep + eps;
      const double up = mean_nll();
      block.value[p] = keep - eps;
      const double down = mean_nll();
      block.value[p] = keep;
      EXPECT_NEAR(block.grad[p], (up - down) / (2 * eps), 1e-5) << block.name << "[" << p << "]";
    }
  }
}

TEST(Training, WarmupOnlyUsesRecommendationLoss) {
  auto crs = make_tiny_crs("t", testing_support::toy_category().catalog, small_tiny());
  const auto data = build_training_data(toy_instances(12));
  Schedule s;
  s.warmup_epochs = 2;
  s.joint_epochs = 2;
  s.batch_size = 8;
  const auto report = train_two_stage(*crs, data, s);
  ASSERT_EQ(report.curve.size(), 5u);
  EXPECT_EQ(report.curve[0].epoch, 0);
  std::size_t joint_rec = 0, joint_seq = 0;
  for (const auto& b : report.batches) {
    EXPECT_DOUBLE_EQ(b.total, b.l_r + b.l_theta);
    if (b.stage == Stage::kWarmup) {
      EXPECT_EQ(b.seq2seq_terms, 0u);
      EXPECT_EQ(b.l_theta, 0.0);
    } else if (b.epoch == 1) {
      joint_rec += b.rec_terms;
      joint_seq += b.seq2seq_terms;
    }
  }
  EXPECT_EQ(joint_rec, data.recommendation.size());
  EXPECT_EQ(joint_seq, data.seq2seq.size());
  for (const auto& p : report.curve) EXPECT_EQ(p.l_theta.has_value(), p.stage == Stage::kJoint);
}

TEST(Training, ZeroEpochsLeavesParametersUnchanged) {
  const auto& catalog = testing_support::toy_category().catalog;
  auto crs = make_tiny_crs("t", catalog, small_tiny());
  const auto data = build_training_data(toy_instances(6));
  const auto emb = crs->embeddings();
  const auto head = crs->head();
  Schedule s;
  s.warmup_epochs = 0;
  s.joint_epochs = 0;
  const auto report = train_two_stage(*crs, data, s);
  EXPECT_TRUE(report.batches.empty());
  EXPECT_EQ(report.curve.size(), 1u);
  EXPECT_EQ(crs->embeddings(), emb);
  EXPECT_EQ(crs->head(), head);
}

TEST(Training, FrozenSystemIsUntouched) {
  const auto& catalog = testing_support::toy_category().catalog;
  auto crs = make_tiny_crs("t", catalog, small_tiny());
  crs->set_frozen(true);
  const auto head = crs->head();
  const auto report = train_two_stage(*crs, build_training_data(toy_instances(6)), Schedule{});
  EXPECT_TRUE(report.curve.empty());
  EXPECT_EQ(crs->head(), head);
  EXPECT_THROW(train_two_stage(*crs, TrainingData{}, Schedule{}), PreconditionError);
}

TEST(Training, RecommendationLossDecreases) {
  const auto& catalog = testing_support::toy_category().catalog;
  auto crs = make_tiny_crs("t", catalog, small_tiny());
  Schedule s;
  s.warmup_epochs = 4;
  s.joint_epochs = 0;
  s.batch_size = 8;
  const auto report = train_two_stage(*crs, build_training_data(toy_instances(40)), s);
  EXPECT_LT(report.curve.back().l_r, report.curve.front().l_r);
}

TEST(Training, CheckpointRoundTrip) {
  const auto& catalog = testing_support::toy_category().catalog;
  auto a = make_tiny_crs("t", catalog, small_tiny());
  Schedule s;
  s.warmup_epochs = 1;
  s.joint_epochs = 1;
  const auto insts = toy_instances(6);
  train_two_stage(*a, build_training_data(insts), s);
  testing_support::TempDir dir("ckpt");
  const auto path = dir.path() / "crs.json";
  a->save_checkpoint(path);

  TinyCrsConfig other = small_tiny();
  other.seed = 99;
  other.backend.seed = 98;
  auto b = make_tiny_crs("t", catalog, other);
  b->load_checkpoint(path);
  EXPECT_EQ(b->embeddings(), a->embeddings());
  EXPECT_EQ(b->head(), a->head());
  for (const auto& inst : insts) EXPECT_EQ(crs_predict(*b, inst), crs_predict(*a, inst)) << inst.key();
}

TEST(Training, CheckpointWithOtherTokensIsRejected) {
  const auto& catalog = testing_support::toy_category().catalog;
  auto a = make_tiny_crs("t", catalog, small_tiny());
  train_two_stage(*a, build_training_data(toy_instances(4)), Schedule{0, 0, 16, {}, 1});
  testing_support::TempDir dir("ckpt-bad");
  const auto path = dir.path() / "crs.json";
  a->save_checkpoint(path);
  nlohmann::json j;
  std::ifstream(path) >> j;
  j["special_tokens"].push_back("[extra]");
  std::ofstream(path) << j.dump();
  EXPECT_THROW(a->load_checkpoint(path), FormatError);
}

// ---- test doubles -----------------------------------------------------------

TEST(Oracle, ReproducesGold) {
  const auto& cc = testing_support::toy_category();
  const auto insts = testing_support::instances_of(testing_support::all_dialogues(cc), cc.catalog);
  auto crs = make_oracle_crs("oracle", cc.catalog, build_crs_gold_table(insts));
  // Prompts shared by instances with different labels cannot be told apart.
  std::map<std::string, std::set<std::string>> labels;
  auto key_of = [](const tasks::TaskInstance& inst) {
    const auto seq = serialize_context(inst);
    return seq.text + "|" + seq.task_prompt;
  };
  auto label_of = [](const tasks::TaskInstance& inst) {
    return inst.kind == TaskKind::kRecommendation ? *inst.gold_product : seq2seq_target(inst);
  };
  for (const auto& inst : insts) labels[key_of(inst)].insert(label_of(inst));
  std::size_t checked = 0;
  for (const auto& inst : insts) {
    if (labels[key_of(inst)].size() > 1) continue;
    ++checked;
    const auto p = crs_predict(*crs, inst);
    const auto g = tasks::gold_prediction(inst);
    switch (inst.kind) {
      case TaskKind::kUnderstanding: EXPECT_EQ(p.frames, g.frames); break;
      case TaskKind::kElicitation: EXPECT_EQ(p.attributes, g.attributes); break;
      case TaskKind::kRecommendation:
        EXPECT_EQ(p.product_id, g.product_id);
        EXPECT_GT(p.ranking.front().probability, 0.999);
        break;
      case TaskKind::kGeneration: EXPECT_EQ(p.response, g.response); break;
    }
  }
  EXPECT_GT(checked, insts.size() * 9 / 10);
}

TEST(Oracle, NoiseRateIsHonoured) {
  int kept = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) kept += noise_keeps_gold(0.7, 5, "k" + std::to_string(i));
  EXPECT_NEAR(static_cast<double>(kept) / n, 0.7, 0.03);
  EXPECT_FALSE(noise_keeps_gold(0.0, 1, "x"));
  EXPECT_TRUE(noise_keeps_gold(1.0, 1, "x"));
  EXPECT_THROW(noise_keeps_gold(1.5, 1, "x"), PreconditionError);
}

TEST(Oracle, WrongOutputsDifferEverywhere) {
  const auto& cc = testing_support::toy_category();
  NoiseSpec noise{0.0, 3, cc.catalog.category(), {"one", "two"}};
  const std::string gold = render_frames({{"color", cc.catalog.category().attribute_schema[0].values[0]}});
  for (int i = 0; i < 50; ++i) {
    const auto wrong = parse_structured_output(wrong_output(TaskKind::kUnderstanding, gold, noise, std::to_string(i)),
                                               TaskKind::kUnderstanding);
    ASSERT_EQ(wrong.frames.size(), 1u);
    EXPECT_NE(render_frames(wrong.frames), gold);
    const char letter = wrong_letter('C', 20, 3, std::to_string(i));
    EXPECT_NE(letter, 'C');
    EXPECT_TRUE(tasks::letter_position(letter).has_value());
  }
  EXPECT_EQ(wrong_output(TaskKind::kGeneration, "one", noise, "k"), "two");
  EXPECT_THROW(wrong_output(TaskKind::kRecommendation, "A", noise, "k"), PreconditionError);
}

TEST(Oracle, CopyAssistEchoesLlmSegment) {
  const auto& cc = testing_support::toy_category();
  auto crs = make_copy_assist_crs("copy", cc.catalog);
  EXPECT_EQ(crs->backend().generate("[user] t2 [LLM] color: red", "x"), "color: red");
  EXPECT_EQ(crs->backend().generate("[user] t2", "x"), "");
  const auto& ids_in = cc.catalog.products();
  std::vector<std::string> cands;
  for (std::size_t i = 0; i < 20; ++i) cands.push_back(ids_in[i].product_id);
  const auto assist = crs->embeddings().row(cands[7]);
  const auto s = crs->score({PromptVariant::kXR, "[user] x", ""}, cands, assist);
  EXPECT_EQ(s.ranked().front().product_id, cands[7]);
}
