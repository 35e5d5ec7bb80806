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

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "crsllm/crs/structured.hpp"
#include "crsllm/llm/backend.hpp"
#include "crsllm/llm/instruction.hpp"
#include "crsllm/llm/templates.hpp"
#include "crsllm/util/error.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace crsllm;
using namespace crsllm::llm;
using tasks::TaskKind;

namespace {

const std::vector<std::string> kFive{"P0", "P1", "P2", "P3", "P4"};

std::vector<tasks::TaskInstance> toy_instances() {
  const auto& cc = testing_support::toy_category();
  return testing_support::instances_of(testing_support::all_dialogues(cc), cc.catalog);
}

std::vector<InstructionSample> toy_samples(Language lang = Language::kEn) {
  std::vector<InstructionSample> out;
  const auto& cat = testing_support::toy_category().catalog.category();
  for (const auto& inst : toy_instances()) out.push_back(build_instruction_sample(inst, cat, lang));
  return out;
}

// Local chat-completions stand-in.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

ExternalConfig external_config(const std::string& endpoint) {
  ExternalConfig c;
  c.endpoint = endpoint;
  c.model = "stub";
  c.initial_backoff = std::chrono::milliseconds(200);
  c.timeout = std::chrono::seconds(5);
  return c;
}

}  // namespace

// ---- output parsing ---------------------------------------------------------

TEST(ParseOutput, ElicitationSingleAttribute) {
  const auto p = parse_llm_output("Efficacy", TaskKind::kElicitation);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.attributes, std::vector<std::string>{"Efficacy"});
}

TEST(ParseOutput, UnderstandingFrames) {
  const auto p = parse_llm_output("color: red", TaskKind::kUnderstanding);
  EXPECT_EQ(p.frames, (std::vector<corpus::SemanticFrame>{{"color", "red"}}));
}

TEST(ParseOutput, BareLetter) {
  const auto p = parse_llm_output("A", TaskKind::kRecommendation, kFive);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.letter, 'A');
  EXPECT_EQ(p.product_id, "P0");
}

TEST(ParseOutput, LetterInsideSentence) {
  const auto p = parse_llm_output("I recommend option C because it fits.", TaskKind::kRecommendation, kFive);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.letter, 'C');
  EXPECT_EQ(p.product_id, "P2");
}

TEST(ParseOutput, NoLetterFails) {
  EXPECT_FALSE(parse_llm_output("none of these", TaskKind::kRecommendation, kFive).parse_ok);
  // E is a label but falls outside five candidates only from F on.
  EXPECT_FALSE(parse_llm_output("F", TaskKind::kRecommendation, kFive).parse_ok);
  EXPECT_EQ(parse_llm_output("E", TaskKind::kRecommendation, kFive).product_id, "P4");
}

TEST(ParseOutput, Generation) {
  EXPECT_EQ(parse_llm_output("  hello there  ", TaskKind::kGeneration).response, "hello there");
  EXPECT_FALSE(parse_llm_output("   ", TaskKind::kGeneration).parse_ok);
}

// ---- instruction samples ----------------------------------------------------

TEST(Instruction, SamplesCarryCategoryAndGold) {
  const auto& cat = testing_support::toy_category().catalog.category();
  for (const auto& inst : toy_instances()) {
    const auto s = build_instruction_sample(inst, cat);
    EXPECT_EQ(s.key(), inst.key());
    EXPECT_NE(s.instruction.find(cat.name), std::string::npos);
    EXPECT_EQ(s.template_version, "crsllm-templates/1");
    switch (inst.kind) {
      case TaskKind::kUnderstanding:
        EXPECT_EQ(s.output, crs::render_frames(inst.gold_frames));
        EXPECT_NE(s.input.find(" Current input: "), std::string::npos);
        break;
      case TaskKind::kElicitation: EXPECT_EQ(s.output, crs::render_attributes(inst.gold_attributes)); break;
      case TaskKind::kRecommendation: {
        ASSERT_EQ(s.candidates.size(), 20u);
        EXPECT_EQ(s.output, std::string(1, *tasks::letter_of(inst, *inst.gold_product)));
        EXPECT_EQ(s.candidates[*tasks::letter_position(s.output[0])], *inst.gold_product);
        // Candidate lines appear in letter order.
        std::size_t last = 0;
        for (std::size_t i = 0; i < 20; ++i) {
          const auto at = s.input.find(std::string(1, tasks::candidate_letter(i)) + "'s ");
          ASSERT_NE(at, std::string::npos);
          EXPECT_GE(at, last);
          last = at;
        }
        break;
      }
      case TaskKind::kGeneration: EXPECT_EQ(s.output, *inst.gold_response); break;
    }
  }
}

TEST(Instruction, Deterministic) {
  EXPECT_EQ(toy_samples(), toy_samples());
  const auto zh = toy_samples(Language::kZh);
  EXPECT_NE(zh.front().instruction, toy_samples().front().instruction);
}

TEST(Instruction, CandidateRendering) {
  const corpus::Category cat{"c", "C", {{"color", {"red"}}, {"size", {"small"}}}};
  const corpus::Product p{"X", "c", {{"size", "small"}, {"color", "red"}}};
  EXPECT_EQ(render_candidate('A', p, cat, builtin_templates(Language::kEn)), "A's color is red, size is small");
}

TEST(Instruction, TooManyCandidatesThrows) {
  auto inst = toy_instances();
  auto it = std::find_if(inst.begin(), inst.end(), [](const auto& i) { return i.kind == TaskKind::kRecommendation; });
  ASSERT_NE(it, inst.end());
  auto big = *it;
  big.candidates.push_back(big.candidates.front());
  EXPECT_THROW(build_instruction_sample(big, testing_support::toy_category().catalog.category()), PreconditionError);
}

TEST(Instruction, FileHasExactlyThreeKeys) {
  testing_support::TempDir dir("instr");
  const auto samples = toy_samples();
  const auto path = dir.path() / "u.jsonl";
  write_instruction_file(path, samples);
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ASSERT_EQ(j.size(), 3u);
    EXPECT_TRUE(j.contains("instruction") && j.contains("input") && j.contains("output"));
    ++rows;
  }
  EXPECT_EQ(rows, samples.size());
  const auto back = read_instruction_file(path);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].instruction, samples[i].instruction);
    EXPECT_EQ(back[i].input, samples[i].input);
    EXPECT_EQ(back[i].output, samples[i].output);
  }
}

TEST(Instruction, ExtraKeyIsRejectedWithLine) {
  testing_support::TempDir dir("instr-bad");
  const auto path = dir.path() / "bad.jsonl";
  std::ofstream(path) << R"({"instruction":"a","input":"b","output":"c"})" "\n"
                      << R"({"instruction":"a","input":"b","output":"c","extra":1})" "\n";
  try {
    read_instruction_file(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Instruction, FullJsonRoundTrip) {
  for (const auto& s : toy_samples()) EXPECT_EQ(sample_from_json(nlohmann::json::parse(to_json(s).dump())), s);
}

TEST(Templates, MissingKeyIsFormatError) {
  auto j = builtin_template_resource();
  j["languages"]["en"]["sections"].erase("dialogue");
  EXPECT_THROW(parse_templates(j, Language::kEn), FormatError);
  EXPECT_EQ(builtin_templates(Language::kZh).category_label("Beauty"), "美妆");
  EXPECT_EQ(builtin_templates(Language::kEn).category_label("Beauty"), "Beauty");
}

// ---- test doubles -------------------------------------------------------------

TEST(Doubles, OracleEchoesGold) {
  const auto samples = toy_samples();
  const auto table = build_llm_gold_table(samples);
  auto oracle = make_oracle_llm(table);
  for (const auto& s : samples) EXPECT_EQ(oracle->complete(s.instruction, s.input), table.lookup(s.instruction, s.input).output);
  EXPECT_THROW(oracle->complete("unknown", "input"), PreconditionError);
}

TEST(Doubles, NoisyAccuracyWithinTolerance) {
  const auto samples = toy_samples();
  ASSERT_GE(samples.size(), 2000u);
  const auto table = build_llm_gold_table(samples);
  const auto& cat = testing_support::toy_category().catalog.category();
  for (double acc : {0.0, 0.7, 1.0}) {
    auto noisy = make_noisy_llm(table, crs::NoiseSpec{acc, 11, cat, {}});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < 2000; ++i) {
      const auto& s = samples[i];
      correct += noisy->complete(s.instruction, s.input) == table.lookup(s.instruction, s.input).output;
    }
    const double rate = static_cast<double>(correct) / 2000.0;
    if (acc == 0.0 || acc == 1.0) {
      EXPECT_EQ(rate, acc);
    } else {
      EXPECT_NEAR(rate, acc, 0.03);
    }
  }
}

TEST(Doubles, NoisyIsRepeatable) {
  const auto samples = toy_samples();
  const auto table = build_llm_gold_table(samples);
  const auto& cat = testing_support::toy_category().catalog.category();
  auto a = make_noisy_llm(table, crs::NoiseSpec{0.5, 4, cat, {}});
  auto b = make_noisy_llm(table, crs::NoiseSpec{0.5, 4, cat, {}});
  for (std::size_t i = 0; i < 300; ++i) {
    EXPECT_EQ(a->complete(samples[i].instruction, samples[i].input), b->complete(samples[i].instruction, samples[i].input));
  }
}

TEST(Doubles, CopyAssistRepeatsCrsSection) {
  auto copy = make_copy_assist_llm();
  const auto& s = builtin_templates(Language::kEn).crs_assist;
  EXPECT_EQ(copy->complete("x", "dialogue" + s.result + "color: red"), "color: red");
  EXPECT_EQ(copy->complete("x", "dialogue" + s.ranking + "C, B, A"), "C");
  EXPECT_EQ(copy->complete("x", "dialogue" + s.result + s.no_result), "");
  EXPECT_EQ(copy->complete("x", "dialogue"), "");
}

TEST(Doubles, StripCrsAssist) {
  const auto& s = builtin_templates(Language::kEn).crs_assist;
  const auto [ins, in] = strip_crs_assist("Do it. " + s.advisory, "dialogue" + s.ranking + "C, B");
  EXPECT_EQ(ins, "Do it.");
  EXPECT_EQ(in, "dialogue");
}

TEST(Doubles, TinyLlmTrainsAndIsDeterministic) {
  auto samples = toy_samples();
  samples.resize(60);
  TinyLlmConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.context_dim = 8;
  cfg.model.decoder_dim = 12;
  cfg.model.max_output_tokens = 8;
  cfg.epochs = 2;
  auto a = make_tiny_llm(cfg);
  auto b = make_tiny_llm(cfg);
  const auto sa = a->fine_tune(samples);
  b->fine_tune(samples);
  EXPECT_EQ(sa.state.at("loss").size(), 2u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a->complete(samples[i].instruction, samples[i].input), b->complete(samples[i].instruction, samples[i].input));
  }
  EXPECT_THROW(make_tiny_llm(cfg)->fine_tune({}), PreconditionError);
}

// ---- external backend -----------------------------------------------------------

TEST(External, SendsRenderedPromptAndReadsReply) {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(reply("echo:" + body["messages"][0]["content"].get<std::string>()), "application/json");
  });
  ExternalBackend ext(external_config(server.endpoint()));
  EXPECT_EQ(ext.complete("INS", "IN"), "echo:INS\n\nIN");
  EXPECT_FALSE(ext.trainable());
  EXPECT_TRUE(ext.deterministic());
  EXPECT_THROW(ext.fine_tune({}), PreconditionError);
}

TEST(External, RetriesServerErrorsWithBackoff) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  std::vector<long> sleeps;
  ExternalBackend ext(external_config(server.endpoint()), {},
                      [&](std::chrono::milliseconds d) { sleeps.push_back(static_cast<long>(d.count())); });
  try {
    ext.complete("a", "b");
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(sleeps, (std::vector<long>{200, 400}));
}

TEST(External, RecoversAfterTransientFailure) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 429;
      return;
    }
    res.set_content(reply("B"), "application/json");
  });
  ExternalBackend ext(external_config(server.endpoint()), {}, [](std::chrono::milliseconds) {});
  EXPECT_EQ(ext.complete("a", "b"), "B");
  EXPECT_EQ(calls.load(), 3);
}

TEST(External, ClientErrorIsNotRetried) {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  ExternalBackend ext(external_config(server.endpoint()), {}, [](std::chrono::milliseconds) {});
  EXPECT_THROW(ext.complete("a", "b"), TransportError);
  EXPECT_EQ(calls.load(), 1);
}

TEST(External, UnreachableHostGivesStatusZero) {
  // Grab a free port, then close it again.
  int port = 0;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  auto cfg = external_config("http://127.0.0.1:" + std::to_string(port) + "/v1/chat");
  cfg.timeout = std::chrono::seconds(1);
  ExternalBackend ext(cfg, {}, [](std::chrono::milliseconds) {});
  try {
    ext.complete("a", "b");
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 0);
  }
}

TEST(External, ConcurrencyIsCapped) {
  std::atomic<int> in_flight{0}, peak{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(60));
    --in_flight;
    res.set_content(reply("A"), "application/json");
  });
  auto cfg = external_config(server.endpoint());
  cfg.max_concurrency = 2;
  ExternalBackend ext(cfg);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&] { EXPECT_EQ(ext.complete("a", "b"), "A"); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(peak.load(), 2);
}

TEST(External, PerMinuteBudget) {
  StubServer server([](const httplib::Request&, httplib::Response& res) { res.set_content(reply("A"), "application/json"); });
  auto now = std::chrono::steady_clock::time_point{} + std::chrono::hours(1);
  auto cfg = external_config(server.endpoint());
  cfg.requests_per_minute = 3;
  ExternalBackend ext(cfg, [&] { return now; });
  for (int i = 0; i < 3; ++i) EXPECT_EQ(ext.complete("a", "b"), "A");
  EXPECT_THROW(ext.complete("a", "b"), ThrottlingError);
  now += std::chrono::seconds(61);
  EXPECT_EQ(ext.complete("a", "b"), "A");
}

TEST(External, BadConfigIsRejected) {
  EXPECT_THROW(ExternalBackend(external_config("not a url")), ConfigError);
  auto cfg = external_config("http://127.0.0.1:1/x");
  cfg.max_concurrency = 0;
  EXPECT_THROW((ExternalBackend(cfg)), ConfigError);
  cfg = external_config("http://127.0.0.1:1/x");
  cfg.max_attempts = 0;
  EXPECT_THROW((ExternalBackend(cfg)), ConfigError);
}
