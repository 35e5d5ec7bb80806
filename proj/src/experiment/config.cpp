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

#include "crsllm/experiment/config.hpp"

#include <fstream>

#include "crsllm/collab/collab.hpp"
#include "crsllm/corpus/io.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"

namespace crsllm::experiment {

using Json = nlohmann::json;

const char* backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::kOracle: return "oracle";
    case BackendKind::kNoisy: return "noisy";
    case BackendKind::kCopyAssist: return "copy_assist";
    case BackendKind::kTiny: return "tiny";
    case BackendKind::kExternal: return "external";
  }
  return "?";
}

std::optional<BackendKind> parse_backend_kind(const std::string& name) {
  for (auto k : {BackendKind::kOracle, BackendKind::kNoisy, BackendKind::kCopyAssist, BackendKind::kTiny,
                 BackendKind::kExternal}) {
    if (name == backend_kind_name(k)) return k;
  }
  return std::nullopt;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.corpus.synthetic.categories = corpus::default_categories(1, 5, 4);
  for (const auto& r : collab::llm_roles()) c.backends[r] = {};
  for (const auto& r : collab::crs_roles()) c.backends[r] = {};
  for (const auto& v : collab::collaboration_variants()) c.variants.push_back(v.name());
  c.tasks.assign(std::begin(tasks::kAllTasks), std::end(tasks::kAllTasks));
  return c;
}

namespace {

Json tiny_model_json(const crs::TinySeq2SeqConfig& m) {
  return {{"embed_dim", m.embed_dim},
          {"context_dim", m.context_dim},
          {"decoder_dim", m.decoder_dim},
          {"max_output_tokens", m.max_output_tokens},
          {"copy_last_utterance", m.copy_last_utterance},
          {"model_seed", m.seed}};
}

void read_tiny_model(const Json& j, crs::TinySeq2SeqConfig& m) {
  m.embed_dim = j.value("embed_dim", m.embed_dim);
  m.context_dim = j.value("context_dim", m.context_dim);
  m.decoder_dim = j.value("decoder_dim", m.decoder_dim);
  m.max_output_tokens = j.value("max_output_tokens", m.max_output_tokens);
  m.copy_last_utterance = j.value("copy_last_utterance", m.copy_last_utterance);
  m.seed = j.value("model_seed", m.seed);
}

Json binding_json(const std::string& role, const BackendBinding& b) {
  Json j = {{"kind", backend_kind_name(b.kind)}};
  const bool is_llm = collab::role_type(role) == collab::SystemType::kLlm;
  switch (b.kind) {
    case BackendKind::kNoisy:
      j["accuracy"] = b.accuracy;
      j["seed"] = b.seed;
      break;
    case BackendKind::kTiny:
      if (is_llm) {
        j.update(tiny_model_json(b.tiny_llm.model));
        j["epochs"] = b.tiny_llm.epochs;
        j["batch_size"] = b.tiny_llm.batch_size;
        j["learning_rate"] = b.tiny_llm.adam.learning_rate;
        j["seed"] = b.tiny_llm.seed;
      } else {
        j.update(tiny_model_json(b.tiny_crs.backend));
        j["item_dim"] = b.tiny_crs.item_dim;
        j["attribute_init"] = b.tiny_crs.attribute_init;
        j["seed"] = b.tiny_crs.seed;
      }
      break;
    case BackendKind::kExternal: {
      const auto& e = b.external;
      j["endpoint"] = e.endpoint;
      j["model"] = e.model;
      j["temperature"] = e.temperature;
      j["max_concurrency"] = e.max_concurrency;
      j["requests_per_minute"] = e.requests_per_minute;
      j["api_key_env"] = e.api_key_env;
      j["max_attempts"] = e.max_attempts;
      j["initial_backoff_ms"] = e.initial_backoff.count();
      j["timeout_s"] = e.timeout.count();
      j["prompt_template"] = e.prompt_template;
      break;
    }
    case BackendKind::kOracle:
    case BackendKind::kCopyAssist: break;
  }
  return j;
}

BackendBinding binding_from_json(const std::string& role, const Json& j) {
  BackendBinding b;
  const std::string kind = j.at("kind").get<std::string>();
  auto k = parse_backend_kind(kind);
  if (!k) throw ConfigError("role " + role + ": unknown backend kind '" + kind + "'");
  b.kind = *k;
  const bool is_llm = collab::role_type(role) == collab::SystemType::kLlm;
  b.accuracy = j.value("accuracy", b.accuracy);
  b.seed = j.value("seed", b.seed);
  if (b.kind == BackendKind::kTiny) {
    if (is_llm) {
      read_tiny_model(j, b.tiny_llm.model);
      b.tiny_llm.epochs = j.value("epochs", b.tiny_llm.epochs);
      b.tiny_llm.batch_size = j.value("batch_size", b.tiny_llm.batch_size);
      b.tiny_llm.adam.learning_rate = j.value("learning_rate", b.tiny_llm.adam.learning_rate);
      b.tiny_llm.seed = j.value("seed", b.tiny_llm.seed);
    } else {
      read_tiny_model(j, b.tiny_crs.backend);
      b.tiny_crs.item_dim = j.value("item_dim", b.tiny_crs.item_dim);
      b.tiny_crs.attribute_init = j.value("attribute_init", b.tiny_crs.attribute_init);
      b.tiny_crs.seed = j.value("seed", b.tiny_crs.seed);
    }
  }
  if (b.kind == BackendKind::kExternal) {
    auto& e = b.external;
    e.endpoint = j.value("endpoint", e.endpoint);
    e.model = j.value("model", e.model);
    e.temperature = j.value("temperature", e.temperature);
    e.max_concurrency = j.value("max_concurrency", e.max_concurrency);
    e.requests_per_minute = j.value("requests_per_minute", e.requests_per_minute);
    e.api_key_env = j.value("api_key_env", e.api_key_env);
    e.max_attempts = j.value("max_attempts", e.max_attempts);
    e.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", e.initial_backoff.count()));
    e.timeout = std::chrono::seconds(j.value("timeout_s", e.timeout.count()));
    e.prompt_template = j.value("prompt_template", e.prompt_template);
  }
  return b;
}

Json synthetic_json(const corpus::SyntheticSpec& s) {
  Json cats = Json::array();
  for (const auto& c : s.categories) {
    cats.push_back({{"id", c.id}, {"name", c.name}, {"attributes", c.attributes},
                    {"values_per_attribute", c.values_per_attribute}});
  }
  return {{"categories", cats},
          {"products_per_category", s.products_per_category},
          {"dialogues_per_category", s.dialogues_per_category},
          {"min_rounds", s.min_rounds},
          {"max_rounds", s.max_rounds},
          {"seed", s.seed},
          {"valid_fraction", s.valid_fraction},
          {"test_fraction", s.test_fraction},
          {"system_frame_rate", s.system_frame_rate},
          {"recommend_rate", s.recommend_rate}};
}

corpus::SyntheticSpec synthetic_from_json(const Json& j) {
  corpus::SyntheticSpec s;
  const int attrs = j.value("attributes", 5);
  const int values = j.value("values_per_attribute", 4);
  const Json cats = j.value("categories", Json(1));
  if (cats.is_number_integer()) {
    s.categories = corpus::default_categories(cats.get<int>(), attrs, values);
  } else {
    for (const auto& c : cats) {
      s.categories.push_back({c.at("id").get<std::string>(), c.value("name", c.at("id").get<std::string>()),
                              c.value("attributes", attrs), c.value("values_per_attribute", values)});
    }
  }
  s.products_per_category = j.value("products_per_category", s.products_per_category);
  s.dialogues_per_category = j.value("dialogues_per_category", s.dialogues_per_category);
  s.min_rounds = j.value("min_rounds", s.min_rounds);
  s.max_rounds = j.value("max_rounds", s.max_rounds);
  s.seed = j.value("seed", s.seed);
  s.valid_fraction = j.value("valid_fraction", s.valid_fraction);
  s.test_fraction = j.value("test_fraction", s.test_fraction);
  s.system_frame_rate = j.value("system_frame_rate", s.system_frame_rate);
  s.recommend_rate = j.value("recommend_rate", s.recommend_rate);
  return s;
}

Json result_fields(const ExperimentConfig& c) {
  Json backends = Json::object();
  for (const auto& [role, b] : c.backends) backends[role] = binding_json(role, b);
  Json task_names = Json::array();
  for (auto t : c.tasks) task_names.push_back(tasks::task_name(t));
  Json corpus = {{"kind", c.corpus.kind}};
  if (c.corpus.kind == "synthetic") {
    corpus["synthetic"] = synthetic_json(c.corpus.synthetic);
  } else {
    corpus["path"] = c.corpus.path.string();
  }
  return {{"corpus", corpus},
          {"backends", backends},
          {"variants", c.variants},
          {"baselines", c.baselines},
          {"tasks", task_names},
          {"categories", c.categories},
          {"schedule",
           {{"warmup_epochs", c.schedule.warmup_epochs},
            {"joint_epochs", c.schedule.joint_epochs},
            {"batch_size", c.schedule.batch_size},
            {"learning_rate", c.schedule.adam.learning_rate},
            {"seed", c.schedule.seed}}},
          {"candidate_seed", c.candidate_seed},
          {"aggregation", eval::aggregation_name(c.aggregation)},
          {"language", llm::language_name(c.language)},
          {"gold_assist", c.gold_assist},
          {"max_test_instances", c.max_test_instances},
          {"annotation", {{"sample_size", c.annotation_sample}, {"seed", c.annotation_seed}}}};
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  Json j = result_fields(c);
  j["workers"] = c.workers;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir.string();
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c = default_config();
  try {
    if (j.contains("corpus")) {
      const Json& cj = j.at("corpus");
      c.corpus.kind = cj.value("kind", c.corpus.kind);
      if (c.corpus.kind != "synthetic" && c.corpus.kind != "uneed") {
        throw ConfigError("corpus kind must be 'synthetic' or 'uneed'");
      }
      c.corpus.path = cj.value("path", std::string());
      if (cj.contains("synthetic")) c.corpus.synthetic = synthetic_from_json(cj.at("synthetic"));
    }
    if (j.contains("backends")) {
      c.backends.clear();
      for (const auto& [role, b] : j.at("backends").items()) {
        if (!collab::role_type(role)) throw ConfigError("unknown role '" + role + "'");
        c.backends[role] = binding_from_json(role, b);
      }
    }
    if (j.contains("variants")) c.variants = j.at("variants").get<std::vector<std::string>>();
    c.baselines = j.value("baselines", c.baselines);
    if (j.contains("tasks")) {
      c.tasks.clear();
      for (const auto& name : j.at("tasks")) {
        auto t = tasks::parse_task(name.get<std::string>());
        if (!t) throw ConfigError("unknown task '" + name.get<std::string>() + "'");
        c.tasks.push_back(*t);
      }
    }
    if (j.contains("categories")) c.categories = j.at("categories").get<std::vector<std::string>>();
    if (j.contains("schedule")) {
      const Json& s = j.at("schedule");
      c.schedule.warmup_epochs = s.value("warmup_epochs", c.schedule.warmup_epochs);
      c.schedule.joint_epochs = s.value("joint_epochs", c.schedule.joint_epochs);
      c.schedule.batch_size = s.value("batch_size", c.schedule.batch_size);
      c.schedule.adam.learning_rate = s.value("learning_rate", c.schedule.adam.learning_rate);
      c.schedule.seed = s.value("seed", c.schedule.seed);
    }
    c.candidate_seed = j.value("candidate_seed", c.candidate_seed);
    if (j.contains("aggregation")) {
      auto a = eval::parse_aggregation(j.at("aggregation").get<std::string>());
      if (!a) throw ConfigError("aggregation must be 'macro' or 'micro'");
      c.aggregation = *a;
    }
    if (j.contains("language")) {
      auto l = llm::parse_language(j.at("language").get<std::string>());
      if (!l) throw ConfigError("language must be 'en' or 'zh'");
      c.language = *l;
    }
    c.gold_assist = j.value("gold_assist", c.gold_assist);
    c.max_test_instances = j.value("max_test_instances", c.max_test_instances);
    c.workers = j.value("workers", c.workers);
    c.threads = j.value("threads", c.threads);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (j.contains("annotation")) {
      c.annotation_sample = j.at("annotation").value("sample_size", c.annotation_sample);
      c.annotation_seed = j.at("annotation").value("seed", c.annotation_seed);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(result_fields(config).dump()); }

void validate(const ExperimentConfig& config) {
  auto bound = [&](const std::string& role) {
    if (!config.backends.count(role)) throw ConfigError("no backend bound for role " + role);
  };
  for (const auto& name : config.variants) {
    const collab::Variant v = collab::parse_variant_name(name);
    if (v.direction == collab::Direction::kNone) {
      throw ConfigError("'" + name + "' is a baseline; list collaboration variants only");
    }
    bound(v.assister);
    bound(v.assisted);
  }
  for (const auto& [role, b] : config.backends) {
    const bool is_llm = collab::role_type(role) == collab::SystemType::kLlm;
    if (b.kind == BackendKind::kExternal && !is_llm) throw ConfigError(role + ": external backends serve LLM roles only");
    if (b.kind == BackendKind::kExternal && b.external.endpoint.empty()) {
      throw ConfigError(role + ": external backend needs an endpoint");
    }
    if (b.kind == BackendKind::kNoisy && (b.accuracy < 0.0 || b.accuracy > 1.0)) {
      throw ConfigError(role + ": noisy accuracy must lie in [0, 1]");
    }
  }
  if (config.tasks.empty()) throw ConfigError("no tasks selected");
  if (config.variants.empty() && !config.baselines) throw ConfigError("nothing to run");
  if (config.workers == 0 || config.threads == 0) throw ConfigError("workers and threads must be positive");
  if (config.corpus.kind == "uneed" && config.corpus.path.empty()) throw ConfigError("uneed corpus needs a path");
}

corpus::Corpus load_corpus(const CorpusSource& source) {
  if (source.kind == "uneed") return corpus::load_uneed_format(source.path).corpus;
  return corpus::generate_synthetic_corpus(source.synthetic);
}

}  // namespace crsllm::experiment
