// lcv: end-to-end omission-aware misinformation detection pipeline.
// Stages communicate through files so the expensive relation-generation
// stage stays cached and every step is restartable.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcv/corpus.hpp"
#include "lcv/error.hpp"
#include "lcv/graph.hpp"
#include "lcv/metrics.hpp"
#include "lcv/model.hpp"
#include "lcv/pipeline.hpp"
#include "lcv/providers.hpp"
#include "lcv/tfidf.hpp"
#include "lcv/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// CLI flag > config file > built-in default.
template <typename T>
T resolve(const CLI::Option* opt, const T& flag_value, const json& cfg,
          const char* key, const T& fallback) {
  if (opt && opt->count() > 0) return flag_value;
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lcv::data_error("IoError", "cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw lcv::data_error("ParseError", path + ": " + e.what());
  }
}

lcv::ModelConfig model_config_from_json(const json& j) {
  lcv::ModelConfig c;
  c.d0 = j.value("d0", c.d0);
  c.d = j.value("d", c.d);
  c.layers = j.value("layers", c.layers);
  c.window = j.value("window", c.window);
  c.lambda = j.value("lambda", c.lambda);
  c.dropout_p = j.value("dropout", c.dropout_p);
  if (j.contains("ablation")) {
    auto a = lcv::parse_ablation(j.at("ablation").get<std::string>());
    if (!a)
      throw lcv::usage_error("BadConfig", "unknown ablation '" +
                                              j.at("ablation").get<std::string>() +
                                              "'");
    c.ablation = *a;
  }
  return c;
}

lcv::TrainConfig train_config_from_json(const json& j) {
  lcv::TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  return c;
}

json model_config_to_json(const lcv::ModelConfig& c) {
  return json{{"d0", c.d0},         {"d", c.d},
              {"layers", c.layers}, {"window", c.window},
              {"lambda", c.lambda}, {"dropout", c.dropout_p},
              {"ablation", lcv::ablation_name(c.ablation)}};
}

std::unique_ptr<lcv::RelationProvider> make_provider(const std::string& name) {
  if (name == "stub") return std::make_unique<lcv::StubRelationProvider>();
  if (name == "remote")
    return std::make_unique<lcv::RemoteRelationProvider>(
        lcv::EndpointConfig::from_env());
  throw lcv::usage_error("BadProvider", "unknown provider '" + name + "'");
}

std::unique_ptr<lcv::TextEncoder> make_encoder(const std::string& name,
                                               size_t d0) {
  if (name == "hash") return std::make_unique<lcv::HashEmbedder>(d0);
  if (name == "remote")
    return std::make_unique<lcv::RemoteEncoder>(lcv::EndpointConfig::from_env(),
                                                d0);
  throw lcv::usage_error("BadEncoder", "unknown encoder '" + name + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"LCV omission-aware misinformation detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "Pipeline config JSON (flags override its keys)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string synth_spec, synth_out;
  synth->add_option("--spec", synth_spec, "SynthSpec JSON file")->required();
  synth->add_option("--out", synth_out, "Output corpus JSONL")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load and validate a corpus");
  std::string ingest_in;
  bool ingest_check = false;
  ingest->add_option("--in", ingest_in, "Corpus JSONL")->required();
  ingest->add_flag("--check", ingest_check, "Validate only, print stats");

  // retrieve
  auto* retrieve_cmd =
      app.add_subcommand("retrieve", "Windowed top-K TF-IDF retrieval");
  std::string ret_corpus, ret_out;
  size_t ret_k = 3;
  int64_t ret_delta = 7;
  retrieve_cmd->add_option("--corpus", ret_corpus)->required();
  auto* opt_k = retrieve_cmd->add_option("--k", ret_k, "Retrieval budget");
  auto* opt_delta =
      retrieve_cmd->add_option("--delta", ret_delta, "Look-back window, days");
  retrieve_cmd->add_option("--out", ret_out)->required();

  // relations
  auto* relations_cmd =
      app.add_subcommand("relations", "Generate missing-context relations");
  std::string rel_corpus, rel_retrievals, rel_provider = "stub", rel_cache;
  size_t rel_budget = 10;
  relations_cmd->add_option("--corpus", rel_corpus)->required();
  relations_cmd->add_option("--retrievals", rel_retrievals)->required();
  auto* opt_rel_provider =
      relations_cmd->add_option("--provider", rel_provider, "stub|remote");
  relations_cmd->add_option("--cache", rel_cache, "Relation cache JSONL")
      ->required();
  auto* opt_rel_budget =
      relations_cmd->add_option("--budget", rel_budget, "Sentence budget");

  // build-graphs
  auto* build_cmd = app.add_subcommand("build-graphs", "Encode heterographs");
  std::string bg_corpus, bg_retrievals, bg_cache, bg_out;
  std::string bg_provider = "stub", bg_encoder = "hash";
  size_t bg_d0 = 768, bg_window = 2, bg_budget = 10;
  build_cmd->add_option("--corpus", bg_corpus)->required();
  build_cmd->add_option("--retrievals", bg_retrievals)->required();
  build_cmd->add_option("--cache", bg_cache)->required();
  auto* opt_bg_provider =
      build_cmd->add_option("--provider", bg_provider, "stub|remote");
  auto* opt_bg_encoder =
      build_cmd->add_option("--encoder", bg_encoder, "hash|remote");
  auto* opt_bg_d0 = build_cmd->add_option("--d0", bg_d0, "Encoder dimension");
  auto* opt_bg_window =
      build_cmd->add_option("--window", bg_window, "Coherence window");
  auto* opt_bg_budget =
      build_cmd->add_option("--budget", bg_budget, "Sentence budget");
  build_cmd->add_option("--out", bg_out, "Graph bundle")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train over the seed list");
  std::string tr_graphs, tr_config, tr_out;
  train_cmd->add_option("--graphs", tr_graphs)->required();
  train_cmd->add_option("--config", tr_config,
                        "JSON with 'model' and 'train' sections");
  train_cmd->add_option("--out", tr_out, "Run directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ev_ckpt, ev_graphs, ev_report, ev_split = "test";
  eval_cmd->add_option("--ckpt", ev_ckpt)->required();
  eval_cmd->add_option("--graphs", ev_graphs)->required();
  eval_cmd->add_option("--report", ev_report)->required();
  eval_cmd->add_option("--split", ev_split, "train|val|test");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Per-article probabilities");
  std::string pr_ckpt, pr_graphs, pr_out;
  predict_cmd->add_option("--ckpt", pr_ckpt)->required();
  predict_cmd->add_option("--graphs", pr_graphs)->required();
  predict_cmd->add_option("--out", pr_out)->required();

  CLI11_PARSE(app, argc, argv);

  json cfg = json::object();
  if (!config_path.empty()) cfg = load_json_file(config_path);

  if (*synth) {
    auto spec = lcv::load_synth_spec(synth_spec);
    auto store = lcv::synth_generate(spec);
    lcv::save_corpus(store, synth_out);
    std::cout << "wrote " << store.size() << " articles to " << synth_out
              << "\n";
    return 0;
  }

  if (*ingest) {
    auto store = lcv::load_corpus(ingest_in);
    size_t pool = 0, labeled = 0;
    for (const auto* a : store.all())
      (a->split == lcv::Split::ContextPool ? pool : labeled) += 1;
    std::cout << "ok: " << store.size() << " articles (" << labeled
              << " labeled, " << pool << " context-pool)\n";
    return 0;
  }

  if (*retrieve_cmd) {
    size_t k = resolve(opt_k, ret_k, cfg, "k", size_t(3));
    int64_t delta = resolve(opt_delta, ret_delta, cfg, "delta", int64_t(7));
    auto store = lcv::load_corpus(ret_corpus);
    auto index =
        lcv::TfIdfIndex::build(store.split_articles(lcv::Split::ContextPool));
    auto results = lcv::retrieve_all(store, index, k, delta);
    lcv::save_retrievals(results, ret_out);
    std::cout << "wrote " << results.size() << " retrieval results to "
              << ret_out << "\n";
    return 0;
  }

  if (*relations_cmd) {
    auto provider_name = resolve(opt_rel_provider, rel_provider, cfg,
                                 "provider", std::string("stub"));
    size_t budget =
        resolve(opt_rel_budget, rel_budget, cfg, "sentence_budget", size_t(10));
    auto store = lcv::load_corpus(rel_corpus);
    auto retrievals = lcv::load_retrievals(rel_retrievals);
    auto inner = make_provider(provider_name);
    lcv::RelationCache cache(rel_cache);
    lcv::CachedRelationProvider provider(*inner, cache);
    size_t pairs =
        lcv::generate_relations(store, retrievals, provider, budget);
    std::cout << "processed " << pairs << " pairs; cache now holds "
              << cache.size() << " entries\n";
    return 0;
  }

  if (*build_cmd) {
    auto provider_name = resolve(opt_bg_provider, bg_provider, cfg, "provider",
                                 std::string("stub"));
    auto encoder_name =
        resolve(opt_bg_encoder, bg_encoder, cfg, "encoder", std::string("hash"));
    size_t d0 = resolve(opt_bg_d0, bg_d0, cfg, "d0", size_t(768));
    size_t window = resolve(opt_bg_window, bg_window, cfg, "window", size_t(2));
    size_t budget =
        resolve(opt_bg_budget, bg_budget, cfg, "sentence_budget", size_t(10));
    auto store = lcv::load_corpus(bg_corpus);
    auto retrievals = lcv::load_retrievals(bg_retrievals);
    auto inner = make_provider(provider_name);
    lcv::RelationCache cache(bg_cache);
    lcv::CachedRelationProvider provider(*inner, cache);
    auto encoder = make_encoder(encoder_name, d0);
    auto records = lcv::build_all_graphs(store, retrievals, provider, *encoder,
                                         window, budget);
    lcv::save_graphs(records, bg_out);
    std::cout << "wrote " << records.size() << " graphs to " << bg_out << "\n";
    return 0;
  }

  if (*train_cmd) {
    json tcfg_json = tr_config.empty() ? cfg : load_json_file(tr_config);
    auto model_cfg = model_config_from_json(tcfg_json.value("model", json::object()));
    auto train_cfg = train_config_from_json(tcfg_json.value("train", json::object()));

    auto records = lcv::load_graphs(tr_graphs);
    auto train_graphs = lcv::graphs_of_split(records, lcv::Split::Train);
    auto val_graphs = lcv::graphs_of_split(records, lcv::Split::Val);

    fs::create_directories(tr_out);
    {
      std::ofstream snap(fs::path(tr_out) / "config.json");
      json j{{"model", model_config_to_json(model_cfg)},
             {"train",
              {{"lr", train_cfg.lr},
               {"batch_size", train_cfg.batch_size},
               {"max_epochs", train_cfg.max_epochs},
               {"patience", train_cfg.patience},
               {"seeds", train_cfg.seeds}}}};
      snap << j.dump(2) << "\n";
    }

    std::vector<lcv::MetricReport> val_reports;
    for (uint64_t seed : train_cfg.seeds) {
      auto result =
          lcv::train(train_graphs, val_graphs, model_cfg, train_cfg, seed);
      fs::path seed_dir = fs::path(tr_out) / ("seed_" + std::to_string(seed));
      fs::create_directories(seed_dir);
      lcv::save_checkpoint(result.best_params, (seed_dir / "best.ckpt").string());
      std::ofstream hist(seed_dir / "history.jsonl");
      for (const auto& e : result.history) {
        json j{{"epoch", e.epoch},
               {"train_loss", e.train_loss},
               {"val_macro_f1", e.val.macro_f1},
               {"val_accuracy", e.val.accuracy}};
        hist << j.dump() << "\n";
      }
      val_reports.push_back(result.best_val);
      std::cout << "seed " << seed << ": best val macro-F1 "
                << result.best_val.macro_f1 << " (epoch " << result.best_epoch
                << ")\n";
    }
    if (val_reports.size() >= 2) {
      auto agg = lcv::aggregate_runs(val_reports);
      std::ofstream summary(fs::path(tr_out) / "summary.json");
      summary << json{{"val_macro_f1_mean", agg.macro_f1.mean},
                      {"val_macro_f1_std", agg.macro_f1.stddev}}
                     .dump(2)
              << "\n";
    }
    return 0;
  }

  if (*eval_cmd) {
    auto params = lcv::load_checkpoint(ev_ckpt);
    auto records = lcv::load_graphs(ev_graphs);
    auto split = lcv::parse_split(ev_split);
    if (!split || *split == lcv::Split::ContextPool)
      throw lcv::usage_error("BadSplit", "unknown split '" + ev_split + "'");
    auto graphs = lcv::graphs_of_split(records, *split);
    if (graphs.empty())
      throw lcv::data_error("EmptySplit",
                            "no graphs with split '" + ev_split + "'");
    auto report = lcv::evaluate(graphs, params);
    json j = json::parse(lcv::report_to_json(report));
    j["split"] = ev_split;
    j["model"] = model_config_to_json(params.config);
    std::ofstream out(ev_report);
    if (!out) throw lcv::data_error("IoError", "cannot write '" + ev_report + "'");
    out << j.dump(2) << "\n";
    std::cout << "macro_f1 " << report.macro_f1 << " accuracy "
              << report.accuracy << " (" << report.n_examples << " examples)\n";
    return 0;
  }

  if (*predict_cmd) {
    auto params = lcv::load_checkpoint(pr_ckpt);
    auto records = lcv::load_graphs(pr_graphs);
    std::ofstream out(pr_out);
    if (!out) throw lcv::data_error("IoError", "cannot write '" + pr_out + "'");
    for (const auto& rec : records) {
      auto proba = lcv::predict_proba(rec.graph, params);
      json j{{"id", rec.id},
             {"p_real", proba[0]},
             {"p_misinfo", proba[1]},
             {"predicted", proba[1] > proba[0] ? 1 : 0}};
      out << j.dump() << "\n";
    }
    std::cout << "wrote " << records.size() << " predictions to " << pr_out
              << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lcv::Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump()
              << std::endl;
    switch (e.kind()) {
      case lcv::ErrorKind::Usage: return 2;
      case lcv::ErrorKind::Data: return 3;
      case lcv::ErrorKind::Provider: return 4;
      case lcv::ErrorKind::Internal: return 1;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump()
              << std::endl;
    return 1;
  }
}
