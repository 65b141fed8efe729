#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lagr/cfq.hpp"
#include "lagr/cogs.hpp"
#include "lagr/harness.hpp"
#include "lagr/util.hpp"

using namespace lagr;

namespace {

int cmd_train(const std::string& config_path, const std::string& data_dir) {
  harness::RunConfig cfg = harness::RunConfig::from_file(config_path);
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  harness::Dataset ds = harness::load_dataset(cfg);
  std::printf("dataset %s: %zu train / %zu dev / %zu test / %zu gen examples\n",
              cfg.dataset.c_str(), ds.train.size(), ds.dev.size(), ds.test.size(),
              ds.gen.size());
  std::printf("vocab: %d tokens, %d node labels, %d edge labels\n",
              ds.token_vocab.size(), ds.node_labels.size(), ds.edge_labels.size());
  std::printf("config %s data %s seed %llu\n", cfg.config_hash().c_str(),
              ds.data_hash.c_str(), static_cast<unsigned long long>(cfg.seed));

  harness::TrainResult result = harness::train_with_restarts(cfg, ds);
  std::printf("final: train %.4f dev %.4f steps %d seed %llu restarts %d%s\n",
              result.final_train_acc, result.final_dev_acc, result.steps_run,
              static_cast<unsigned long long>(result.seed_used), result.restarts_used,
              result.aborted_nan ? " [aborted: nan loss]" : "");
  if (result.gold_alignment_match >= 0)
    std::printf("gold-alignment match: %.4f\n", result.gold_alignment_match);
  std::printf("checkpoint: %s.{json,bin}\n", result.ckpt_prefix.c_str());
  if (!result.accepted) {
    std::printf("run NOT accepted by the restart policy (threshold %.3f)\n",
                cfg.restart_threshold);
    return 1;
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& split, const std::string& data_dir,
             std::string out_path) {
  harness::EvalReport report =
      harness::evaluate_checkpoint(ckpt, split, data_dir, &out_path);
  std::printf("%s", report.table().c_str());
  if (!out_path.empty()) std::printf("predictions: %s\n", out_path.c_str());
  return 0;
}

int cmd_retrain(const std::string& config_path, const std::string& alignments,
                const std::string& data_dir) {
  harness::RunConfig cfg = harness::RunConfig::from_file(config_path);
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  harness::Dataset ds = harness::load_dataset(cfg);
  harness::TrainResult result = harness::retrain(cfg, ds, alignments);
  std::printf("retrain final: train %.4f dev %.4f steps %d seed %llu\n",
              result.final_train_acc, result.final_dev_acc, result.steps_run,
              static_cast<unsigned long long>(result.seed_used));
  return result.accepted ? 0 : 1;
}

int cmd_convert(const std::string& dataset, const std::string& in_path,
                const std::string& out_path) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  if (dataset == "cogs") {
    for (const auto& ex : cogs::read_cogs_tsv(in_path)) {
      cogs::StringGraph sg = cogs::lf_to_string_graph(cogs::parse_lf(ex.lf), ex.tokens);
      MRGraph mr;
      for (int i = 0; i < sg.N; ++i) {
        if (sg.labels[static_cast<std::size_t>(i)].empty()) continue;
        MRNode node;
        node.id = static_cast<int>(mr.nodes.size());
        node.label = sg.labels[static_cast<std::size_t>(i)];
        node.layer = 0;
        node.pos = i;
        mr.nodes.push_back(std::move(node));
      }
      auto node_at = [&](int pos) {
        for (const auto& n : mr.nodes)
          if (n.pos == pos) return n.id;
        throw std::runtime_error("convert: edge endpoint without node");
      };
      for (const auto& [src, dst, role] : sg.edges)
        mr.edges.push_back({node_at(src), node_at(dst), role});
      nlohmann::json rec{{"tokens", ex.tokens},
                         {"case", ex.split_case},
                         {"graph", mr_graph_to_json(mr)}};
      out << rec.dump() << "\n";
    }
  } else if (dataset == "cfq") {
    for (const auto& ex : cfq::read_cfq_jsonl(in_path)) {
      MRGraph g = cfq::sparql_to_graph(cfq::compress(cfq::parse_sparql(ex.sparql)));
      nlohmann::json rec{{"question", ex.question}, {"graph", mr_graph_to_json(g)}};
      out << rec.dump() << "\n";
    }
  } else {
    throw std::runtime_error("convert: dataset must be cogs or cfq");
  }
  return 0;
}

int cmd_graph_acc(const std::string& pred_path, const std::string& gold_path,
                  const std::string& dataset) {
  std::ifstream pred(pred_path), gold(gold_path);
  if (!pred) throw std::runtime_error("cannot open " + pred_path);
  if (!gold) throw std::runtime_error("cannot open " + gold_path);
  int correct = 0, total = 0;
  std::string p, g;
  while (std::getline(gold, g)) {
    if (!std::getline(pred, p))
      throw std::runtime_error("prediction file shorter than gold file");
    ++total;
    if (dataset == "cogs") {
      correct += normalize_ws(p) == normalize_ws(g);
      continue;
    }
    try {
      MRGraph gp = cfq::sparql_to_graph(cfq::compress(cfq::parse_sparql(p)));
      MRGraph gg = cfq::sparql_to_graph(cfq::compress(cfq::parse_sparql(g)));
      correct += cfq::graph_isomorphic(gp, gg);
    } catch (const std::exception&) {
      // unparseable prediction counts as wrong
    }
  }
  std::printf("%s accuracy: %d/%d = %.4f\n", dataset == "cogs" ? "exact-match" : "graph",
              correct, total, total ? static_cast<double>(correct) / total : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LAGr: semantic parsing by labeling aligned graphs"};
  app.require_subcommand(1);

  std::string config_path, data_dir, ckpt, split = "dev", out_path;
  std::string dataset = "cfq", in_path, alignments, pred_path, gold_path;

  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "key=value config file")->required();
  train->add_option("--data-dir", data_dir, "dataset root (default $LAGR_DATA_DIR)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  eval->add_option("--ckpt", ckpt, "checkpoint prefix")->required();
  eval->add_option("--split", split, "train|dev|test|gen|gendev");
  eval->add_option("--data-dir", data_dir, "dataset root override");
  eval->add_option("--out", out_path, "predictions file");

  auto* retrain = app.add_subcommand("retrain", "strong training from dumped alignments");
  retrain->add_option("--config", config_path, "key=value config file")->required();
  retrain->add_option("--alignments", alignments, "alignment dump (json lines)")
      ->required();
  retrain->add_option("--data-dir", data_dir, "dataset root override");

  auto* convert = app.add_subcommand("convert", "convert a dataset file to graph JSON");
  convert->add_option("--dataset", dataset, "cogs|cfq")->required();
  convert->add_option("--in", in_path, "input file")->required();
  convert->add_option("--out", out_path, "output JSON-lines file")->required();

  auto* gacc = app.add_subcommand("graph-acc", "score a predictions file against gold");
  gacc->add_option("--pred", pred_path, "predictions, one per line")->required();
  gacc->add_option("--gold", gold_path, "gold references, one per line")->required();
  gacc->add_option("--dataset", dataset, "cogs|cfq (default cfq)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, data_dir);
    if (eval->parsed()) return cmd_eval(ckpt, split, data_dir, out_path);
    if (retrain->parsed()) return cmd_retrain(config_path, alignments, data_dir);
    if (convert->parsed()) return cmd_convert(dataset, in_path, out_path);
    if (gacc->parsed()) return cmd_graph_acc(pred_path, gold_path, dataset);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
