// Copyright 2026 The HierTKG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// hiertkg: ingest event corpora, train and evaluate the link predictor, and
// run the ablation grid.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiertkg/errors.hpp"
#include "hiertkg/ingest.hpp"
#include "hiertkg/reports.hpp"
#include "hiertkg/runner.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hiertkg;

namespace {

nlohmann::ordered_json report_json(const metrics::MetricReport& r) {
  nlohmann::ordered_json j;
  j["split"] = r.split;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["ap"] = r.ap;
  j["auc"] = r.auc;
  j["mrr"] = r.mrr;
  j["n_queries"] = r.n_queries;
  return j;
}

TrainConfig resolve_config(const std::string& path, const std::string& dataset,
                           const std::string& format) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : load_config(path);
  if (!dataset.empty()) cfg.dataset = dataset;
  if (!format.empty()) cfg.dataset_format = format;
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

EventDataset dataset_for(const TrainConfig& cfg, int synthetic_cycles) {
  if (synthetic_cycles > 0) return make_cyclic_tkg(20, synthetic_cycles);
  return load_dataset(cfg);
}

int run_ingest(const std::string& format, const fs::path& input,
               const fs::path& out) {
  EventDataset ds;
  nlohmann::ordered_json summary;
  if (format == "icews") {
    ds = load_icews(input);
  } else if (format == "wikidata") {
    ds = load_wikidata(input);
  } else {
    PhemeKg kg = build_pheme_kg(input);
    for (const std::string& w : kg.report.warnings) {
      std::cerr << "warning: " << w << "\n";
    }
    IngestSummary s = ingest_summary(kg.dataset, &kg.report);
    summary["threads"] = s.threads;
    summary["tweets"] = s.tweets;
    summary["threads_by_event"] = s.threads_by_event;
    summary["tweets_by_event"] = s.tweets_by_event;
    summary["entities_by_kind"] = s.entities_by_kind;
    summary["events_by_relation"] = s.events_by_relation;
    summary["dropped_replies"] = kg.report.dropped_replies;
    summary["reply_time_violations"] = kg.report.reply_time_violations;
    ds = std::move(kg.dataset);
  }
  write_canonical(ds, out);
  if (!summary.empty()) {
    std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";
  }
  std::cout << ds.size() << " events, " << ds.num_entities() << " entities, "
            << ds.num_relations() << " relations -> " << out.string() << "\n";
  return 0;
}

int run_train(const TrainConfig& cfg, int synthetic_cycles, const fs::path& out,
              bool no_plot) {
  EventDataset ds = dataset_for(cfg, synthetic_cycles);
  DatasetSplits splits =
      chronological_split(ds, cfg.train_fraction, cfg.val_fraction);
  TrainResult r = train(cfg, splits, &std::cerr);
  std::vector<metrics::MetricReport> history = r.history;
  if (!splits.test.empty()) {
    metrics::MetricReport test = evaluate(r.checkpoint, splits, "test");
    history.push_back(test);
    std::cout << report_json(test).dump() << "\n";
  }
  fs::create_directories(out);
  save_checkpoint(r.checkpoint, out / "checkpoint.bin");
  if (!history.empty()) reports::emit_reports(history, out, cfg.plot && !no_plot);
  return 0;
}

int run_eval(const fs::path& checkpoint, const std::string& split,
             const std::string& protocol, const std::string& dataset,
             int synthetic_cycles, const fs::path& out) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  TrainConfig cfg = ckpt.config;
  if (!dataset.empty()) cfg.dataset = dataset;
  EventDataset ds = dataset_for(cfg, synthetic_cycles);
  DatasetSplits splits =
      chronological_split(ds, cfg.train_fraction, cfg.val_fraction);
  metrics::MetricReport r = evaluate(
      ckpt, splits, split,
      protocol == "all-entities" ? Protocol::kAllEntities : Protocol::kSampled);
  std::cout << report_json(r).dump() << "\n";
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(out / ("eval_" + split + ".jsonl"))
        << reports::to_jsonl({r});
  }
  return 0;
}

int run_ablate(const TrainConfig& cfg, const std::string& scenario,
               int synthetic_cycles, const fs::path& out) {
  EventDataset ds = dataset_for(cfg, synthetic_cycles);
  DatasetSplits splits =
      chronological_split(ds, cfg.train_fraction, cfg.val_fraction);
  std::vector<AblationScenario> todo;
  if (scenario == "all") {
    todo = ablation_scenarios();
  } else {
    todo.push_back(ablation_scenario(scenario));
  }
  std::vector<AblationRow> rows;
  for (const AblationScenario& s : todo) {
    std::cerr << "scenario " << s.name << "\n";
    rows.push_back(run_ablation(cfg, splits, s, &std::cerr));
  }
  const std::string table = reports::ablation_table(rows);
  std::cout << table;
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(out / "ablation.csv") << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal knowledge graph link prediction"};
  app.require_subcommand(1);

  std::string config, dataset, format, out_dir = "out";
  int cycles = 0;
  bool no_plot = false;

  auto* ingest = app.add_subcommand("ingest", "Convert a raw corpus");
  std::string ingest_format, ingest_input, ingest_out;
  ingest->add_option("--kind,--format", ingest_format, "Input kind")
      ->required()
      ->check(CLI::IsMember({"icews", "wikidata", "pheme"}));
  ingest->add_option("--in,--input", ingest_input, "File or corpus root")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config, "key = value config file");
  train_cmd->add_option("--dataset", dataset, "Dataset path (overrides config)");
  train_cmd->add_option("--format", format, "canonical | icews | wikidata");
  train_cmd->add_option("--synthetic-cycles", cycles,
                        "Use the 20-node cyclic toy graph with N cycles");
  train_cmd->add_option("--out", out_dir, "Output directory");
  train_cmd->add_flag("--no-plot", no_plot, "Skip loss_auc.png");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string checkpoint, split = "test", protocol = "sampled", eval_out;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.bin")->required();
  eval_cmd->add_option("--split", split)->check(CLI::IsMember({"val", "test"}));
  eval_cmd->add_option("--protocol", protocol)
      ->check(CLI::IsMember({"sampled", "all-entities"}));
  eval_cmd->add_option("--dataset", dataset, "Dataset path (overrides config)");
  eval_cmd->add_option("--synthetic-cycles", cycles);
  eval_cmd->add_option("--out", eval_out, "Directory for eval_<split>.jsonl");

  auto* ablate = app.add_subcommand("ablate", "Run ablation scenarios");
  std::string scenario = "all", ablate_out;
  ablate->add_option("--scenario", scenario)
      ->check(CLI::IsMember({"hiertkg", "first", "second", "third", "all"},
                            CLI::ignore_case));
  ablate->add_option("--config", config, "key = value config file");
  ablate->add_option("--dataset", dataset, "Dataset path (overrides config)");
  ablate->add_option("--format", format, "canonical | icews | wikidata");
  ablate->add_option("--synthetic-cycles", cycles);
  ablate->add_option("--out", ablate_out, "Directory for ablation.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return run_ingest(ingest_format, ingest_input, ingest_out);
    if (*train_cmd) {
      return run_train(resolve_config(config, dataset, format), cycles,
                       out_dir, no_plot);
    }
    if (*eval_cmd) {
      return run_eval(checkpoint, split, protocol, dataset, cycles, eval_out);
    }
    if (*ablate) {
      return run_ablate(resolve_config(config, dataset, format), scenario,
                        cycles, ablate_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
