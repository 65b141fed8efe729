#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lagr/harness.hpp"
#include "lagr/synthetic.hpp"
#include "lagr/util.hpp"

using namespace lagr;
using namespace lagr::harness;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("lagr_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

RunConfig tiny_cogs_config(const TempDir& dir) {
  RunConfig cfg;
  cfg.dataset = "cogs";
  cfg.data_dir = dir.str();
  cfg.supervision = "strong";
  cfg.d = 32;
  cfg.enc_layers = 1;
  cfg.heads = 4;
  cfg.ff = 64;
  cfg.dropout = 0.1f;
  cfg.max_len = 32;
  cfg.L = 1;
  cfg.batch_size = 8;
  cfg.lr = 2e-3f;
  cfg.warmup = 50;
  cfg.train_steps = 800;
  cfg.eval_interval = 100;
  cfg.stop_at_train_acc = 1.0f;
  cfg.seed = 3;
  cfg.ckpt = (dir.path / "ckpt").string();
  cfg.metrics = (dir.path / "metrics.jsonl").string();
  return cfg;
}

// Writes a generated corpus in the on-disk COGS layout.
void write_cogs_dir(const TempDir& dir, const synth::CogsCorpus& corpus) {
  fs::create_directories(dir.path / "cogs");
  synth::write_cogs_tsv(corpus.train, (dir.path / "cogs" / "train.tsv").string());
  synth::write_cogs_tsv(corpus.dev, (dir.path / "cogs" / "dev.tsv").string());
  synth::write_cogs_tsv(corpus.test, (dir.path / "cogs" / "test.tsv").string());
  synth::write_cogs_tsv(corpus.gen, (dir.path / "cogs" / "gen.tsv").string());
}

synth::CogsCorpus tiny_unique_corpus(int train_n) {
  synth::CogsGenConfig gen_cfg;
  gen_cfg.train = train_n;
  gen_cfg.dev = 20;
  gen_cfg.test = 10;
  gen_cfg.gen = 10;
  gen_cfg.unique_labels_only = true;
  return synth::generate_cogs(gen_cfg, 21);
}

}  // namespace

TEST_CASE("config files parse, default, and validate") {
  const char* path = "harness_cfg_test.cfg";
  write_file(path,
             "# toy config\n"
             "dataset = cogs\n"
             "supervision = weak\n"
             "d = 48\n"
             "heads=6\n"
             "K = 7\n"
             "sigma = 1.5\n"
             "cache = true\n"
             "data_dir = /tmp/nowhere\n");
  RunConfig cfg = RunConfig::from_file(path);
  CHECK(cfg.d == 48);
  CHECK(cfg.heads == 6);
  CHECK(cfg.K == 7);
  CHECK(cfg.sigma == doctest::Approx(1.5f));
  CHECK(cfg.cache);
  CHECK(cfg.batch_size == 32);  // default preserved
  CHECK(cfg.config_hash().size() == 40);

  write_file(path, "dataset = imdb\n");
  CHECK_THROWS_AS(RunConfig::from_file(path), std::invalid_argument);
  write_file(path, "dataset cogs\n");
  CHECK_THROWS_AS(RunConfig::from_file(path), std::runtime_error);
  std::remove(path);
}

TEST_CASE("dataset loads from disk with per-case tags and hashes") {
  TempDir dir("dataset");
  synth::CogsCorpus corpus = synth::generate_cogs({80, 10, 10, 40, false}, 5);
  write_cogs_dir(dir, corpus);
  RunConfig cfg = tiny_cogs_config(dir);
  Dataset ds = load_dataset(cfg);
  CHECK(ds.kind == "cogs");
  CHECK(ds.train.size() == 80);
  CHECK(ds.gen.size() == 40);
  CHECK_FALSE(ds.data_hash.empty());
  CHECK(ds.edge_labels.size() == 10);  // 9 roles + null
  bool has_case = false;
  for (const auto& ex : ds.gen) has_case = has_case || ex.case_tag == "subj_to_obj";
  CHECK(has_case);
  // gold alignment targets agree with the gold graphs
  for (const auto& ex : ds.train) {
    REQUIRE(ex.gold.has_value());
    CHECK(ex.target.N == ex.gold->N);
  }
  CHECK_THROWS_AS(ds.split("nope"), std::invalid_argument);
}

TEST_CASE("strong training reaches perfect accuracy on a tiny corpus") {
  TempDir dir("train_strong");
  write_cogs_dir(dir, tiny_unique_corpus(48));
  RunConfig cfg = tiny_cogs_config(dir);
  Dataset ds = load_dataset(cfg);
  TrainResult result = train_once(cfg, ds, cfg.seed);
  CHECK(result.final_train_acc == doctest::Approx(1.0));
  CHECK(result.steps_run <= cfg.train_steps);
  CHECK_FALSE(result.aborted_nan);

  SUBCASE("metrics file has a run header and eval records") {
    std::ifstream in(cfg.metrics);
    REQUIRE(in);
    std::string line;
    REQUIRE(std::getline(in, line));
    auto header = nlohmann::json::parse(line);
    CHECK(header.at("record") == "run");
    CHECK(header.at("config_hash") == cfg.config_hash());
    CHECK(header.at("data_hash") == ds.data_hash);
    int evals = 0;
    int last_step = 0;
    while (std::getline(in, line)) {
      auto rec = nlohmann::json::parse(line);
      CHECK(rec.at("step").get<int>() > last_step);  // monotone steps
      last_step = rec.at("step");
      ++evals;
    }
    CHECK(evals >= 1);
  }

  SUBCASE("checkpoint evaluation reproduces the in-memory evaluation bit-exactly") {
    EvalReport direct;
    {
      RunConfig eval_cfg;
      AlignmentCache cache;
      auto model = model_from_checkpoint(cfg.ckpt, &eval_cfg, &cache);
      direct = evaluate_model(*model, ds, ds.dev, true);
    }
    EvalReport via_ckpt = evaluate_checkpoint(cfg.ckpt, "dev");
    CHECK(via_ckpt.accuracy == direct.accuracy);
    CHECK(via_ckpt.predictions == direct.predictions);
  }

  SUBCASE("vocabulary mismatch is rejected") {
    TempDir other("train_strong_other");
    write_cogs_dir(other, synth::generate_cogs({60, 10, 5, 5, false}, 99));
    CHECK_THROWS_WITH_AS(evaluate_checkpoint(cfg.ckpt, "dev", other.str()),
                         doctest::Contains("vocabulary mismatch"), std::runtime_error);
  }
}

TEST_CASE("train_steps = 0 evaluates the freshly initialized model") {
  TempDir dir("train_zero");
  write_cogs_dir(dir, tiny_unique_corpus(48));
  RunConfig cfg = tiny_cogs_config(dir);
  cfg.train_steps = 0;
  cfg.stop_at_train_acc = -1.0f;
  Dataset ds = load_dataset(cfg);
  TrainResult result = train_once(cfg, ds, 1);
  CHECK(result.steps_run == 0);
  CHECK(result.final_train_acc < 0.5);  // untrained model
}

TEST_CASE("weak supervision with zero noise matches strong supervision") {
  TempDir dir("weak_reduction");
  write_cogs_dir(dir, tiny_unique_corpus(48));
  RunConfig strong_cfg = tiny_cogs_config(dir);
  strong_cfg.ckpt = (dir.path / "strong_ckpt").string();
  strong_cfg.metrics = "";
  Dataset ds = load_dataset(strong_cfg);
  TrainResult strong = train_once(strong_cfg, ds, 7);

  RunConfig weak_cfg = strong_cfg;
  weak_cfg.supervision = "weak";
  weak_cfg.K = 1;
  weak_cfg.sigma = 0.0f;
  weak_cfg.ckpt = (dir.path / "weak_ckpt").string();
  weak_cfg.alignment_dump = (dir.path / "alignments.jsonl").string();
  TrainResult weak = train_once(weak_cfg, ds, 7);

  CHECK(std::abs(weak.final_train_acc - strong.final_train_acc) <= 0.01 + 1e-9);
  CHECK(weak.gold_alignment_match >= 0.9);

  SUBCASE("retraining from the dump reaches the weak run's accuracy") {
    RunConfig retrain_cfg = strong_cfg;
    retrain_cfg.ckpt = (dir.path / "retrain_ckpt").string();
    retrain_cfg.max_restarts = 0;
    retrain_cfg.restart_threshold = 0.5f;
    TrainResult again = retrain(retrain_cfg, ds, weak_cfg.alignment_dump);
    CHECK(again.final_train_acc >= weak.final_train_acc - 1e-9);
  }

  SUBCASE("retraining rejects an empty or incomplete dump") {
    const std::string empty_path = (dir.path / "empty.jsonl").string();
    write_file(empty_path, "");
    CHECK_THROWS_AS(retrain(strong_cfg, ds, empty_path), std::runtime_error);
    const std::string partial_path = (dir.path / "partial.jsonl").string();
    std::ifstream full(weak_cfg.alignment_dump);
    std::string first_line;
    std::getline(full, first_line);
    write_file(partial_path, first_line + "\n");
    CHECK_THROWS_WITH_AS(retrain(strong_cfg, ds, partial_path),
                         doctest::Contains("missing"), std::runtime_error);
  }
}

TEST_CASE("restart policy accepts, relaunches, and reports exhaustion") {
  RunConfig cfg;
  cfg.restart_threshold = 0.95f;
  CHECK(restart_accepts(0.96, cfg));
  CHECK_FALSE(restart_accepts(0.93, cfg));
  cfg.restart_threshold = 0.995f;
  CHECK_FALSE(restart_accepts(0.99, cfg));

  // With no training steps the accuracy stays near zero, so every attempt
  // fails and the policy exhausts max_restarts with fresh seeds.
  TempDir dir("restarts");
  write_cogs_dir(dir, tiny_unique_corpus(48));
  RunConfig run_cfg = tiny_cogs_config(dir);
  run_cfg.train_steps = 0;
  run_cfg.stop_at_train_acc = -1.0f;
  run_cfg.max_restarts = 2;
  run_cfg.metrics = "";
  Dataset ds = load_dataset(run_cfg);
  TrainResult result = train_with_restarts(run_cfg, ds);
  CHECK_FALSE(result.accepted);
  CHECK(result.restarts_used == 2);
  CHECK(result.seed_used == run_cfg.seed + 2);
}

TEST_CASE("gen-dev sampling is deterministic, disjoint, and bounded") {
  auto a = sample_gen_dev(500, 100, 9);
  auto b = sample_gen_dev(500, 100, 9);
  CHECK(a == b);
  auto c = sample_gen_dev(500, 500, 9);
  std::set<int> unique(c.begin(), c.end());
  CHECK(unique.size() == 500);
  std::set<int> sample(a.begin(), a.end());
  CHECK(sample.size() == 100);
  int in_complement = 0;
  for (int i = 0; i < 500; ++i) in_complement += sample.count(i) == 0;
  CHECK(in_complement == 400);
  CHECK_THROWS_AS(sample_gen_dev(10, 11, 1), std::invalid_argument);
}

TEST_CASE("cfq dataset loads, trains a step, and evaluates") {
  TempDir dir("cfq_ds");
  namespace fs = std::filesystem;
  fs::create_directories(dir.path / "cfq" / "splits");
  auto examples = synth::generate_cfq({60, 4}, 41);
  synth::write_cfq_jsonl(examples, (dir.path / "cfq" / "dataset.jsonl").string());
  std::vector<int> train_ids, dev_ids, test_ids;
  for (int i = 0; i < 40; ++i) train_ids.push_back(i);
  for (int i = 40; i < 50; ++i) dev_ids.push_back(i);
  for (int i = 50; i < 60; ++i) test_ids.push_back(i);
  synth::write_split_index(train_ids, dev_ids, test_ids,
                           (dir.path / "cfq" / "splits" / "random.json").string());

  RunConfig cfg;
  cfg.dataset = "cfq";
  cfg.data_dir = dir.str();
  cfg.supervision = "weak";
  cfg.d = 32;
  cfg.enc_layers = 1;
  cfg.heads = 4;
  cfg.ff = 64;
  cfg.L = 2;
  cfg.K = 2;
  cfg.sigma = 1.0f;
  cfg.batch_size = 4;
  cfg.lr = 1e-3f;
  cfg.train_steps = 30;
  cfg.eval_interval = 30;
  cfg.max_len = 64;
  cfg.ckpt = (dir.path / "cfq_ckpt").string();
  Dataset ds = load_dataset(cfg);
  CHECK(ds.L == 2);
  CHECK(ds.edge_labels.size() == 4);  // agent, theme, FILTER + null
  for (const auto& ex : ds.train) CHECK_FALSE(ex.gold.has_value());

  TrainResult result = train_once(cfg, ds, 2);
  CHECK_FALSE(result.aborted_nan);
  CHECK(result.steps_run == 30);
  EvalReport report = evaluate_checkpoint(cfg.ckpt, "dev");
  CHECK(report.total == 10);
}
