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

#include "crsllm/experiment/annotation.hpp"

#include <algorithm>
#include <random>

#include "crsllm/experiment/runner.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/hash.hpp"
#include "crsllm/util/jsonl.hpp"
#include "crsllm/util/text.hpp"
#include "httplib.h"

namespace crsllm::experiment {

namespace fs = std::filesystem;
using Json = nlohmann::json;

GenerationDumps load_generation_dumps(const fs::path& run_dir) {
  GenerationDumps out;
  for (const auto& r : read_records(run_dir / "records.jsonl")) {
    if (r.task != tasks::TaskKind::kGeneration || r.status != "ok") continue;
    auto it = r.artifacts.find("predictions");
    if (it == r.artifacts.end()) continue;
    auto& list = out[r.variant];
    jsonl::for_each(run_dir / it->second, [&](const Json& j, int) {
      list.push_back({tasks::instance_from_json(j.at("instance")), tasks::prediction_from_json(j.at("prediction"))});
    });
  }
  return out;
}

std::vector<AnnotationItem> build_annotation_items(const GenerationDumps& dumps, std::size_t sample_size,
                                                   std::uint64_t seed) {
  if (dumps.empty()) throw PreconditionError("no generation outputs to annotate");
  // dialogue -> instance key -> method -> output
  std::map<std::string, std::map<std::string, std::map<std::string, const GenerationOutput*>>> index;
  for (const auto& [method, outputs] : dumps) {
    for (const auto& o : outputs) index[o.instance.dialogue_id][o.instance.key()][method] = &o;
  }
  std::vector<std::string> dialogues;
  for (const auto& [d, instances] : index) {
    for (const auto& [key, methods] : instances) {
      if (methods.size() == dumps.size()) {
        dialogues.push_back(d);
        break;
      }
    }
  }
  std::mt19937_64 rng(derive_seed(seed, {"annotation-sample"}));
  std::shuffle(dialogues.begin(), dialogues.end(), rng);
  if (dialogues.size() > sample_size) dialogues.resize(sample_size);
  std::sort(dialogues.begin(), dialogues.end());

  std::vector<AnnotationItem> items;
  for (const auto& d : dialogues) {
    std::vector<std::string> complete;
    for (const auto& [key, methods] : index.at(d)) {
      if (methods.size() == dumps.size()) complete.push_back(key);
    }
    const std::string& key = complete[derive_seed(seed, {"turn", d}) % complete.size()];
    for (const auto& [method, out] : index.at(d).at(key)) {
      AnnotationItem item;
      item.item_id = sha256_hex(std::to_string(seed) + "|" + method + "|" + key).substr(0, 20);
      item.method_id = method;
      item.dialogue_id = d;
      for (const auto& t : out->instance.context) {
        item.context.push_back({corpus::role_name(t.role()), t.utterance.text});
      }
      item.response = out->prediction.response;
      item.ground_truth = out->instance.gold_response.value_or("");
      items.push_back(std::move(item));
    }
  }
  return items;
}

// ---------------------------------------------------------------- store

AnnotationStore::AnnotationStore(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) return;
  jsonl::for_each(path_, [&](const Json& j, int line) {
    eval::AnnotationRecord r;
    try {
      r = eval::annotation_from_json(j);
    } catch (const std::exception& e) {
      throw FormatError(path_.string(), line, e.what());
    }
    if (keys_.insert(r.key()).second) records_.push_back(std::move(r));
  });
}

bool AnnotationStore::submit(const eval::AnnotationRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (keys_.count(record.key())) return false;
  fs::create_directories(path_.parent_path());
  jsonl::append(path_, eval::to_json(record));
  keys_.insert(record.key());
  records_.push_back(record);
  return true;
}

bool AnnotationStore::contains(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return keys_.count(key) > 0;
}

std::vector<eval::AnnotationRecord> AnnotationStore::records() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return records_;
}

// ---------------------------------------------------------------- service

AnnotationService::AnnotationService(std::vector<AnnotationItem> items, const fs::path& store_dir, std::uint64_t seed)
    : items_(std::move(items)),
      seed_(seed),
      store_(store_dir / "records.jsonl"),
      annotators_path_(store_dir / "annotators.jsonl") {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!by_id_.emplace(items_[i].item_id, i).second) {
      throw PreconditionError("duplicate annotation item id " + items_[i].item_id);
    }
  }
  if (fs::exists(annotators_path_)) {
    jsonl::for_each(annotators_path_, [&](const Json& j, int) { annotators_.insert(j.at("annotator_id").get<std::string>()); });
  }
}

void AnnotationService::register_annotator(const std::string& annotator_id) {
  if (text::trim(annotator_id).empty()) throw ValidationError("annotator_id must be non-empty");
  std::lock_guard<std::mutex> lock(mutex_);
  if (annotators_.insert(annotator_id).second) {
    fs::create_directories(annotators_path_.parent_path());
    jsonl::append(annotators_path_, {{"annotator_id", annotator_id}, {"registered_at", utc_timestamp()}});
  }
}

bool AnnotationService::is_registered(const std::string& annotator_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return annotators_.count(annotator_id) > 0;
}

std::vector<std::size_t> AnnotationService::queue(const std::string& annotator_id) const {
  if (!is_registered(annotator_id)) throw NotFoundError("unknown annotator '" + annotator_id + "'");
  std::vector<std::size_t> order(items_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(seed_, {"queue", annotator_id}));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::string AnnotationService::record_key(const std::string& annotator_id, const AnnotationItem& item) const {
  return annotator_id + "|" + item.method_id + "|" + item.dialogue_id;
}

std::optional<Json> AnnotationService::next(const std::string& annotator_id) const {
  for (std::size_t i : queue(annotator_id)) {
    const AnnotationItem& item = items_[i];
    if (store_.contains(record_key(annotator_id, item))) continue;
    Json context = Json::array();
    for (const auto& t : item.context) context.push_back({{"role", t.role}, {"text", t.text}});
    return Json{{"item_id", item.item_id},
                {"context", context},
                {"response", item.response},
                {"ground_truth", item.ground_truth}};
  }
  return std::nullopt;
}

bool AnnotationService::submit(const std::string& annotator_id, const std::string& item_id, int informativeness,
                               int relevance) {
  if (!is_registered(annotator_id)) throw NotFoundError("unknown annotator '" + annotator_id + "'");
  auto it = by_id_.find(item_id);
  if (it == by_id_.end()) throw NotFoundError("unknown item '" + item_id + "'");
  const AnnotationItem& item = items_[it->second];
  return store_.submit(eval::make_annotation_record(annotator_id, item.method_id, item.dialogue_id, item.response,
                                                    informativeness, relevance, utc_timestamp()));
}

Progress AnnotationService::progress(const std::string& annotator_id) const {
  if (!is_registered(annotator_id)) throw NotFoundError("unknown annotator '" + annotator_id + "'");
  Progress p;
  p.total = items_.size();
  for (const auto& item : items_) p.scored += store_.contains(record_key(annotator_id, item)) ? 1 : 0;
  return p;
}

std::vector<std::string> AnnotationService::methods() const {
  std::set<std::string> m;
  for (const auto& item : items_) m.insert(item.method_id);
  return {m.begin(), m.end()};
}

std::map<std::string, eval::HumanScores> AnnotationService::aggregate() const {
  const auto records = store_.records();
  std::map<std::string, eval::HumanScores> out;
  for (const auto& m : methods()) {
    const bool any = std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.method_id == m; });
    if (any) out.emplace(m, eval::aggregate_human(records, m));
  }
  return out;
}

void AnnotationService::assert_blinded(const std::string& payload) const {
  for (const auto& m : methods()) {
    if (payload.find(m) != std::string::npos) throw Error("blinding violated: payload names a method");
  }
}

// ---------------------------------------------------------------- HTTP

namespace {

Json progress_json(const Progress& p) { return {{"scored", p.scored}, {"total", p.total}}; }

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const ValidationError& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const Json::exception& e) {
      send(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, {{"error", e.what()}});
    }
  };
}

std::string query(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) throw ValidationError("missing query parameter '" + name + "'");
  return req.get_param_value(name);
}

}  // namespace

void mount_annotation_routes(httplib::Server& server, AnnotationService& service) {
  // Everything an annotator's client can see goes through this check.
  auto blinded = [&service](httplib::Response& res, const Json& body) {
    const std::string text = body.dump();
    service.assert_blinded(text);
    res.status = 200;
    res.set_content(text, "application/json");
  };

  server.Post("/api/register", guarded([&service, blinded](const httplib::Request& req, httplib::Response& res) {
                const Json body = Json::parse(req.body);
                const std::string id = body.at("annotator_id").get<std::string>();
                service.register_annotator(id);
                blinded(res, {{"annotator_id", id}, {"progress", progress_json(service.progress(id))}});
              }));
  server.Get("/api/next", guarded([&service, blinded](const httplib::Request& req, httplib::Response& res) {
               const std::string id = query(req, "annotator_id");
               const auto item = service.next(id);
               Json body = {{"done", !item.has_value()}, {"progress", progress_json(service.progress(id))}};
               if (item) body["item"] = *item;
               blinded(res, body);
             }));
  server.Post("/api/submit", guarded([&service, blinded](const httplib::Request& req, httplib::Response& res) {
                const Json body = Json::parse(req.body);
                const std::string id = body.at("annotator_id").get<std::string>();
                if (!body.at("informativeness").is_number_integer() || !body.at("relevance").is_number_integer()) {
                  throw ValidationError("scores must be integers");
                }
                const bool stored = service.submit(id, body.at("item_id").get<std::string>(),
                                                   body.at("informativeness").get<int>(), body.at("relevance").get<int>());
                blinded(res, {{"stored", stored}, {"progress", progress_json(service.progress(id))}});
              }));
  server.Get("/api/progress", guarded([&service, blinded](const httplib::Request& req, httplib::Response& res) {
               blinded(res, progress_json(service.progress(query(req, "annotator_id"))));
             }));
  // Administrative: these name methods and are not used by the annotator client.
  server.Get("/api/export", guarded([&service](const httplib::Request&, httplib::Response& res) {
               std::string out;
               for (const auto& r : service.export_records()) out += eval::to_json(r).dump() + "\n";
               res.status = 200;
               res.set_content(out, "application/x-ndjson");
             }));
  server.Get("/api/aggregate", guarded([&service](const httplib::Request&, httplib::Response& res) {
               Json out = Json::object();
               for (const auto& [m, h] : service.aggregate()) {
                 out[m] = {{"informativeness", h.informativeness}, {"relevance", h.relevance}, {"records", h.records}};
               }
               send(res, 200, out);
             }));
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace crsllm::experiment
