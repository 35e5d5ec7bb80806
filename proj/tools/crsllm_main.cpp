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

// Command-line front end: data generation, instruction building, training,
// the experiment matrix, reporting and the annotation service.

#include <csignal>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "crsllm/collab/collab.hpp"
#include "crsllm/corpus/io.hpp"
#include "crsllm/crs/training.hpp"
#include "crsllm/experiment/annotation.hpp"
#include "crsllm/experiment/config.hpp"
#include "crsllm/experiment/runner.hpp"
#include "crsllm/experiment/systems.hpp"
#include "crsllm/experiment/tables.hpp"
#include "crsllm/util/error.hpp"
#include "crsllm/util/jsonl.hpp"
#include "crsllm/util/text.hpp"
#include "httplib.h"

namespace fs = std::filesystem;
using namespace crsllm;
using experiment::ExperimentConfig;

namespace {

// Flags that mirror ExperimentConfig; only flags given on the command line
// override the config file.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> output_dir, aggregation, language, corpus_path;
  std::optional<std::size_t> workers, threads, max_test, batch_size;
  std::optional<int> warmup, joint, synthetic_categories, dialogues, products;
  std::optional<double> learning_rate;
  std::optional<std::uint64_t> candidate_seed, corpus_seed, schedule_seed;
  std::vector<std::string> categories, tasks, variants, backends;
  bool no_baselines = false;
  bool gold_assist = false;

  void add_to(CLI::App& app) {
    app.add_option("-c,--config", config_path, "Experiment config file (JSON)")->check(CLI::ExistingFile);
    app.add_option("--output-dir", output_dir, "Directory that receives runs/<hash>");
    app.add_option("--workers", workers, "Matrix cells run concurrently");
    app.add_option("--threads", threads, "Instance-level threads inside a cell");
    app.add_option("--categories", categories, "Category ids (default: all)")->delimiter(',');
    app.add_option("--tasks", tasks, "Tasks: understanding,elicitation,recommendation,generation")->delimiter(',');
    app.add_option("--variants", variants, "Collaboration variants, e.g. CLLM-BCRS")->delimiter(',');
    app.add_flag("--no-baselines", no_baselines, "Skip the single-system runs");
    app.add_option("--backend", backends, "ROLE=KIND[:ACCURACY[:SEED]], e.g. BCRS=tiny or CLLM=noisy:0.7:3");
    app.add_option("--warmup-epochs", warmup, "Recommendation-only warmup epochs");
    app.add_option("--joint-epochs", joint, "Joint training epochs");
    app.add_option("--batch-size", batch_size);
    app.add_option("--learning-rate", learning_rate);
    app.add_option("--schedule-seed", schedule_seed);
    app.add_option("--candidate-seed", candidate_seed, "Seed for the 20-candidate sampling");
    app.add_option("--aggregation", aggregation, "macro or micro");
    app.add_option("--language", language, "Instruction template language: en or zh");
    app.add_flag("--gold-assist", gold_assist, "Diagnostic: build payloads from gold labels");
    app.add_option("--max-test", max_test, "Keep the first N test instances per task (0 = all)");
    app.add_option("--corpus-path", corpus_path, "Load a corpus in the line-delimited layout instead of generating one");
    app.add_option("--corpus-seed", corpus_seed, "Synthetic corpus seed");
    app.add_option("--synthetic-categories", synthetic_categories, "Number of synthetic categories");
    app.add_option("--dialogues", dialogues, "Synthetic dialogues per category");
    app.add_option("--products", products, "Synthetic products per category");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config_path.empty() ? experiment::default_config() : experiment::load_config(config_path);
    if (output_dir) c.output_dir = *output_dir;
    if (workers) c.workers = *workers;
    if (threads) c.threads = *threads;
    if (!categories.empty()) c.categories = categories;
    if (!tasks.empty()) {
      c.tasks.clear();
      for (const auto& t : tasks) {
        auto k = tasks::parse_task(t);
        if (!k) throw ConfigError("unknown task '" + t + "'");
        c.tasks.push_back(*k);
      }
    }
    if (!variants.empty()) c.variants = variants;
    if (no_baselines) c.baselines = false;
    for (const auto& spec : backends) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw ConfigError("--backend expects ROLE=KIND, got '" + spec + "'");
      const std::string role = spec.substr(0, eq);
      if (!collab::role_type(role)) throw ConfigError("unknown role '" + role + "'");
      const auto parts = text::split(spec.substr(eq + 1), ":");
      auto kind = experiment::parse_backend_kind(parts.at(0));
      if (!kind) throw ConfigError("unknown backend kind '" + parts.at(0) + "'");
      experiment::BackendBinding b = c.backends.count(role) ? c.backends.at(role) : experiment::BackendBinding{};
      b.kind = *kind;
      if (parts.size() > 1) b.accuracy = std::stod(parts[1]);
      if (parts.size() > 2) b.seed = std::stoull(parts[2]);
      c.backends[role] = b;
    }
    if (warmup) c.schedule.warmup_epochs = *warmup;
    if (joint) c.schedule.joint_epochs = *joint;
    if (batch_size) c.schedule.batch_size = *batch_size;
    if (learning_rate) c.schedule.adam.learning_rate = *learning_rate;
    if (schedule_seed) c.schedule.seed = *schedule_seed;
    if (candidate_seed) c.candidate_seed = *candidate_seed;
    if (aggregation) {
      auto a = eval::parse_aggregation(*aggregation);
      if (!a) throw ConfigError("aggregation must be macro or micro");
      c.aggregation = *a;
    }
    if (language) {
      auto l = llm::parse_language(*language);
      if (!l) throw ConfigError("language must be en or zh");
      c.language = *l;
    }
    if (gold_assist) c.gold_assist = true;
    if (max_test) c.max_test_instances = *max_test;
    if (corpus_path) {
      c.corpus.kind = "uneed";
      c.corpus.path = *corpus_path;
    }
    if (corpus_seed) c.corpus.synthetic.seed = *corpus_seed;
    if (synthetic_categories) {
      c.corpus.synthetic.categories = corpus::default_categories(*synthetic_categories, 5, 4);
    }
    if (dialogues) c.corpus.synthetic.dialogues_per_category = *dialogues;
    if (products) c.corpus.synthetic.products_per_category = *products;
    return c;
  }
};

std::vector<std::string> selected_categories(const ExperimentConfig& c, const corpus::Corpus& corpus) {
  if (!c.categories.empty()) return c.categories;
  std::vector<std::string> out;
  for (const auto& [id, data] : corpus) out.push_back(id);
  return out;
}

void print_report(const eval::MetricReport& r) {
  std::cout << "  " << tasks::task_name(r.task) << " (" << r.support << " instances):";
  for (const auto& [m, v] : r.values) std::cout << " " << m << "=" << v;
  std::cout << "\n";
}

int cmd_gen_data(const ConfigFlags& flags, const fs::path& out) {
  const ExperimentConfig c = flags.resolve();
  const corpus::Corpus corpus = experiment::load_corpus(c.corpus);
  corpus::write_uneed_format(out, corpus);
  for (const auto& [id, data] : corpus) {
    std::cout << id << ": " << data.catalog.size() << " products, " << data.split.train.size() << "/"
              << data.split.valid.size() << "/" << data.split.test.size() << " dialogues (train/valid/test)\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_build_instructions(const ConfigFlags& flags, const fs::path& out) {
  const ExperimentConfig c = flags.resolve();
  const corpus::Corpus corpus = experiment::load_corpus(c.corpus);
  for (const auto& cat : selected_categories(c, corpus)) {
    const auto data = experiment::prepare_category(corpus.at(cat), c.candidate_seed, c.max_test_instances);
    for (tasks::TaskKind k : c.tasks) {
      std::vector<llm::InstructionSample> train, test;
      for (const auto& inst : data.train) {
        if (inst.kind == k) train.push_back(llm::build_instruction_sample(inst, data.category, c.language));
      }
      for (const auto& inst : data.test.at(k)) {
        test.push_back(llm::build_instruction_sample(inst, data.category, c.language));
      }
      const fs::path dir = out / cat;
      fs::create_directories(dir);
      llm::write_instruction_file(dir / (std::string(tasks::task_name(k)) + ".train.jsonl"), train);
      llm::write_instruction_file(dir / (std::string(tasks::task_name(k)) + ".test.jsonl"), test);
      std::cout << cat << "/" << tasks::task_name(k) << ": " << train.size() << " train, " << test.size()
                << " test samples\n";
    }
  }
  return 0;
}

int cmd_train_crs(const ConfigFlags& flags, const std::string& role, const fs::path& out) {
  ExperimentConfig c = flags.resolve();
  if (collab::role_type(role) != collab::SystemType::kCrs) throw ConfigError(role + " is not a CRS role");
  if (!c.backends.count(role) || c.backends.at(role).kind != experiment::BackendKind::kTiny) {
    std::cerr << "note: binding " << role << " to the tiny trainable CRS\n";
    c.backends[role].kind = experiment::BackendKind::kTiny;
  }
  const corpus::Corpus corpus = experiment::load_corpus(c.corpus);
  for (const auto& cat : selected_categories(c, corpus)) {
    const auto data = experiment::prepare_category(corpus.at(cat), c.candidate_seed, c.max_test_instances);
    experiment::ExperimentSystems systems(c, data, out);
    const crs::UnifiedCrs& model = systems.assister_crs(role);
    std::cout << cat << ": checkpoint " << (out / cat / ("assister-" + role + ".json")) << "\n";
    for (tasks::TaskKind k : c.tasks) {
      const auto& test = data.test.at(k);
      if (test.empty()) continue;
      std::vector<tasks::Prediction> preds;
      for (const auto& inst : test) preds.push_back(crs::crs_predict(model, inst));
      print_report(eval::evaluate(k, cat, test, preds));
    }
  }
  return 0;
}

int cmd_finetune_llm(const ConfigFlags& flags, const std::string& role, const fs::path& out) {
  ExperimentConfig c = flags.resolve();
  if (collab::role_type(role) != collab::SystemType::kLlm) throw ConfigError(role + " is not an LLM role");
  if (!c.backends.count(role)) c.backends[role].kind = experiment::BackendKind::kTiny;
  const corpus::Corpus corpus = experiment::load_corpus(c.corpus);
  for (const auto& cat : selected_categories(c, corpus)) {
    const auto data = experiment::prepare_category(corpus.at(cat), c.candidate_seed, c.max_test_instances);
    experiment::ExperimentSystems systems(c, data, out);
    const llm::LlmBackend& model = systems.assister_llm(role);
    std::cout << cat << ": " << model.kind() << " backend ready\n";
    for (tasks::TaskKind k : c.tasks) {
      const auto& test = data.test.at(k);
      if (test.empty()) continue;
      std::vector<tasks::Prediction> preds;
      for (const auto& inst : test) {
        preds.push_back(collab::llm_predict(model, llm::build_instruction_sample(inst, data.category, c.language), inst));
      }
      print_report(eval::evaluate(k, cat, test, preds));
    }
  }
  return 0;
}

void write_tables(const fs::path& run_dir, const std::vector<experiment::RunRecord>& records,
                  const std::map<std::string, eval::HumanScores>& human) {
  fs::create_directories(run_dir / "tables");
  for (const auto& t : experiment::emit_tables(records, human)) {
    std::cout << t.text << "\n";
    const std::string name = tasks::task_name(t.task);
    std::ofstream(run_dir / "tables" / (name + ".txt")) << t.text;
    std::ofstream(run_dir / "tables" / (name + ".csv")) << t.csv;
  }
}

int cmd_run(const ConfigFlags& flags) {
  const ExperimentConfig c = flags.resolve();
  experiment::RunOptions options;
  std::size_t done = 0;
  options.on_record = [&](const experiment::RunRecord& r) {
    ++done;
    std::cerr << "[" << done << "] " << r.category << " " << tasks::task_name(r.task) << " " << r.variant << ": "
              << r.status;
    if (r.status != "ok") std::cerr << " (" << r.error << ")";
    std::cerr << "\n";
  };
  const auto records = experiment::run_matrix(c, options);
  const fs::path dir = experiment::run_directory(c);
  for (const auto& t : experiment::emit_tables(records)) std::cout << t.text << "\n";
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.status == "ok" ? 0 : 1;
  std::cout << records.size() << " records (" << failed << " failed) in " << dir.string() << "\n";
  return failed == 0 ? 0 : 3;
}

std::map<std::string, eval::HumanScores> human_scores(const fs::path& run_dir) {
  std::map<std::string, eval::HumanScores> out;
  const fs::path store = run_dir / "annotations" / "records.jsonl";
  if (!fs::exists(store)) return out;
  std::vector<eval::AnnotationRecord> records;
  for (const auto& j : jsonl::read_all(store)) records.push_back(eval::annotation_from_json(j));
  std::set<std::string> methods;
  for (const auto& r : records) methods.insert(r.method_id);
  for (const auto& m : methods) out.emplace(m, eval::aggregate_human(records, m));
  return out;
}

int cmd_report(const fs::path& run_dir, bool with_human) {
  const auto records = experiment::read_records(run_dir / "records.jsonl");
  if (records.empty()) throw PreconditionError("no records in " + run_dir.string());
  write_tables(run_dir, records, with_human ? human_scores(run_dir) : std::map<std::string, eval::HumanScores>{});
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const fs::path& run_dir, const std::string& host, int port, std::size_t sample, std::uint64_t seed,
              const std::vector<std::string>& methods) {
  auto dumps = experiment::load_generation_dumps(run_dir);
  if (!methods.empty()) {
    experiment::GenerationDumps kept;
    for (const auto& m : methods) {
      auto it = dumps.find(m);
      if (it == dumps.end()) throw ConfigError("no generation predictions for method '" + m + "'");
      kept.emplace(m, std::move(it->second));
    }
    dumps = std::move(kept);
  }
  auto items = experiment::build_annotation_items(dumps, sample, seed);
  experiment::AnnotationService service(std::move(items), run_dir / "annotations", seed);
  httplib::Server server;
  experiment::mount_annotation_routes(server, service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "serving " << service.item_count() << " items over " << service.methods().size() << " methods on http://"
            << host << ":" << port << "\n";
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaboration experiments between a conversational recommender and an LLM"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, build_flags, crs_flags, llm_flags, run_flags;
  fs::path gen_out = "data", build_out = "instructions", crs_out = "checkpoints", llm_out = "adapters";
  std::string crs_role = "BCRS", llm_role = "CLLM";

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus (or re-export a loaded one)");
  gen_flags.add_to(*gen);
  gen->add_option("-o,--out", gen_out, "Output directory");

  auto* build = app.add_subcommand("build-instructions", "Write instruction/input/output files per task");
  build_flags.add_to(*build);
  build->add_option("-o,--out", build_out, "Output directory");

  auto* train = app.add_subcommand("train-crs", "Two-stage training of the tiny CRS for one role");
  crs_flags.add_to(*train);
  train->add_option("--role", crs_role, "BCRS or CCRS");
  train->add_option("-o,--out", crs_out, "Checkpoint directory");

  auto* tune = app.add_subcommand("finetune-llm", "Fine-tune the LLM backend bound to one role");
  llm_flags.add_to(*tune);
  tune->add_option("--role", llm_role, "CLLM or ALLM");
  tune->add_option("-o,--out", llm_out, "Adapter directory");

  auto* run = app.add_subcommand("run", "Run the baseline and collaboration matrix");
  run_flags.add_to(*run);

  fs::path report_dir;
  bool report_human = false;
  auto* report = app.add_subcommand("report", "Re-emit tables from a run directory");
  report->add_option("run_dir", report_dir, "runs/<hash>")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--human", report_human, "Add annotation means to the generation table");

  fs::path serve_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t sample = 100;
  std::uint64_t sample_seed = 13;
  std::vector<std::string> methods;
  auto* serve = app.add_subcommand("serve-annotation", "Serve the human-evaluation endpoints");
  serve->add_option("run_dir", serve_dir, "runs/<hash>")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--sample-size", sample, "Dialogues to sample");
  serve->add_option("--seed", sample_seed, "Sampling and queue-order seed");
  serve->add_option("--methods", methods, "Methods to evaluate (default: all with generation output)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen_data(gen_flags, gen_out);
    if (*build) return cmd_build_instructions(build_flags, build_out);
    if (*train) return cmd_train_crs(crs_flags, crs_role, crs_out);
    if (*tune) return cmd_finetune_llm(llm_flags, llm_role, llm_out);
    if (*run) return cmd_run(run_flags);
    if (*report) return cmd_report(report_dir, report_human);
    if (*serve) return cmd_serve(serve_dir, host, port, sample, sample_seed, methods);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
