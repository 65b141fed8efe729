#include "lagr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "lagr/cfq.hpp"
#include "lagr/cogs.hpp"
#include "lagr/optim.hpp"
#include "lagr/util.hpp"

namespace lagr::harness {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose) {
  // splitmix64 over (seed, purpose)
  std::uint64_t z = seed + purpose * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

// ---- config -------------------------------------------------------------

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string trimmed = normalize_ws(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               " is not key=value: " + trimmed);
    std::string key = normalize_ws(trimmed.substr(0, eq));
    std::string value = normalize_ws(trimmed.substr(eq + 1));
    kv[key] = value;
  }
  return from_kv(kv);
}

RunConfig RunConfig::from_kv(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  auto geti = [&](const char* k, int& out) {
    if (kv.count(k)) out = std::stoi(kv.at(k));
  };
  auto getf = [&](const char* k, float& out) {
    if (kv.count(k)) out = std::stof(kv.at(k));
  };
  auto gets = [&](const char* k, std::string& out) {
    if (kv.count(k)) out = kv.at(k);
  };
  auto getb = [&](const char* k, bool& out) {
    if (kv.count(k)) out = kv.at(k) == "true" || kv.at(k) == "1";
  };
  gets("dataset", cfg.dataset);
  gets("data_dir", cfg.data_dir);
  gets("split", cfg.split);
  gets("supervision", cfg.supervision);
  geti("d", cfg.d);
  geti("enc_layers", cfg.enc_layers);
  geti("heads", cfg.heads);
  geti("ff", cfg.ff);
  getf("dropout", cfg.dropout);
  gets("encoder_mode", cfg.encoder_mode);
  geti("max_len", cfg.max_len);
  geti("L", cfg.L);
  geti("batch_size", cfg.batch_size);
  getf("lr", cfg.lr);
  geti("warmup", cfg.warmup);
  geti("train_steps", cfg.train_steps);
  getf("grad_clip", cfg.grad_clip);
  geti("eval_interval", cfg.eval_interval);
  geti("eval_train_subset", cfg.eval_train_subset);
  geti("K", cfg.K);
  getf("sigma", cfg.sigma);
  getb("cache", cfg.cache);
  getb("first_noiseless", cfg.first_noiseless);
  if (kv.count("seed")) cfg.seed = std::stoull(kv.at("seed"));
  getf("restart_threshold", cfg.restart_threshold);
  geti("max_restarts", cfg.max_restarts);
  getf("stop_at_train_acc", cfg.stop_at_train_acc);
  getb("expect_official_sizes", cfg.expect_official_sizes);
  gets("ckpt", cfg.ckpt);
  gets("metrics", cfg.metrics);
  gets("alignment_dump", cfg.alignment_dump);
  gets("predictions", cfg.predictions);
  if (cfg.data_dir.empty()) {
    const char* env = std::getenv("LAGR_DATA_DIR");
    if (env) cfg.data_dir = env;
  }
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> RunConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset;
  kv["data_dir"] = data_dir;
  kv["split"] = split;
  kv["supervision"] = supervision;
  kv["d"] = std::to_string(d);
  kv["enc_layers"] = std::to_string(enc_layers);
  kv["heads"] = std::to_string(heads);
  kv["ff"] = std::to_string(ff);
  kv["dropout"] = std::to_string(dropout);
  kv["encoder_mode"] = encoder_mode;
  kv["max_len"] = std::to_string(max_len);
  kv["L"] = std::to_string(L);
  kv["batch_size"] = std::to_string(batch_size);
  kv["lr"] = std::to_string(lr);
  kv["warmup"] = std::to_string(warmup);
  kv["train_steps"] = std::to_string(train_steps);
  kv["grad_clip"] = std::to_string(grad_clip);
  kv["eval_interval"] = std::to_string(eval_interval);
  kv["eval_train_subset"] = std::to_string(eval_train_subset);
  kv["K"] = std::to_string(K);
  kv["sigma"] = std::to_string(sigma);
  kv["cache"] = cache ? "true" : "false";
  kv["first_noiseless"] = first_noiseless ? "true" : "false";
  kv["seed"] = std::to_string(seed);
  kv["restart_threshold"] = std::to_string(restart_threshold);
  kv["max_restarts"] = std::to_string(max_restarts);
  kv["stop_at_train_acc"] = std::to_string(stop_at_train_acc);
  kv["expect_official_sizes"] = expect_official_sizes ? "true" : "false";
  kv["ckpt"] = ckpt;
  kv["metrics"] = metrics;
  kv["alignment_dump"] = alignment_dump;
  kv["predictions"] = predictions;
  return kv;
}

std::string RunConfig::config_hash() const {
  std::string dump;
  for (const auto& [k, v] : to_kv()) dump += k + "=" + v + "\n";
  return git_blob_hash(dump);
}

void RunConfig::validate() const {
  if (dataset != "cogs" && dataset != "cfq")
    throw std::invalid_argument("config: dataset must be cogs or cfq");
  if (supervision != "strong" && supervision != "weak" && supervision != "retrain")
    throw std::invalid_argument("config: supervision must be strong, weak, or retrain");
  if (encoder_mode != "shared" && encoder_mode != "separate")
    throw std::invalid_argument("config: encoder_mode must be shared or separate");
  if (K < 1) throw std::invalid_argument("config: K must be >= 1");
  if (sigma < 0) throw std::invalid_argument("config: sigma must be >= 0");
  if (L < 1) throw std::invalid_argument("config: L must be >= 1");
  if (batch_size < 1 || train_steps < 0)
    throw std::invalid_argument("config: bad batch size or step count");
  if (restart_threshold <= 0.0f || restart_threshold > 1.0f)
    throw std::invalid_argument("config: restart threshold must be in (0, 1]");
  encoder_config().validate();
}

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig ec;
  ec.d = d;
  ec.layers = enc_layers;
  ec.heads = heads;
  ec.ff = ff;
  ec.dropout = dropout;
  ec.mode = encoder_mode == "separate" ? EncoderMode::Separate : EncoderMode::Shared;
  ec.max_len = max_len;
  return ec;
}

// ---- dataset building -----------------------------------------------------

const std::vector<TrainExample>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  if (name == "gen") return gen;
  throw std::invalid_argument("unknown split '" + name + "'");
}

namespace {

// Gold alignment consistent with pad_to_slots placement: target slot of each
// node maps to its gold (layer, pos) slot; null slots fill the rest in
// ascending order.
std::vector<int> gold_alignment_from(const MRGraph& mr, const std::vector<int>& slot_of_node,
                                     int n_tokens, int layers) {
  const int m = n_tokens * layers;
  std::vector<int> a(static_cast<std::size_t>(m), -1);
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  for (const MRNode& node : mr.nodes) {
    const int gold_slot = node.layer * n_tokens + node.pos;
    a[static_cast<std::size_t>(slot_of_node[static_cast<std::size_t>(node.id)])] = gold_slot;
    taken[static_cast<std::size_t>(gold_slot)] = 1;
  }
  int next_free = 0;
  for (int j = 0; j < m; ++j) {
    if (a[static_cast<std::size_t>(j)] >= 0) continue;
    while (taken[static_cast<std::size_t>(next_free)]) ++next_free;
    a[static_cast<std::size_t>(j)] = next_free;
    taken[static_cast<std::size_t>(next_free)] = 1;
  }
  return a;
}

}  // namespace

Dataset build_cogs_dataset(const std::vector<cogs::CogsExample>& train,
                           const std::vector<cogs::CogsExample>& dev,
                           const std::vector<cogs::CogsExample>& test,
                           const std::vector<cogs::CogsExample>& gen,
                           bool expect_official, const std::string& data_hash) {
  Dataset ds;
  ds.kind = "cogs";
  ds.L = 1;
  ds.data_hash = data_hash;

  std::set<std::string> node_labels, edge_labels;
  std::vector<std::vector<std::string>> token_corpus;
  std::vector<cogs::StringGraph> train_graphs;
  train_graphs.reserve(train.size());
  for (const auto& ex : train) {
    cogs::StringGraph g = cogs::lf_to_string_graph(cogs::parse_lf(ex.lf), ex.tokens);
    cogs::collect_labels(g, node_labels, edge_labels);
    token_corpus.push_back(ex.tokens);
    train_graphs.push_back(std::move(g));
  }
  ds.token_vocab = Vocab::build(token_corpus);
  ds.node_labels = LabelVocab::build({node_labels.begin(), node_labels.end()});
  ds.edge_labels = LabelVocab::build({edge_labels.begin(), edge_labels.end()});
  if (expect_official &&
      (ds.node_labels.size() != 645 || ds.edge_labels.size() != 10))
    throw std::runtime_error(
        "COGS vocabulary sizes deviate from the official corpus: got " +
        std::to_string(ds.node_labels.size()) + " node and " +
        std::to_string(ds.edge_labels.size()) + " edge labels, expected 645/10");

  auto convert = [&](const std::vector<cogs::CogsExample>& examples,
                     const cogs::StringGraph* prebuilt) {
    std::vector<TrainExample> out;
    out.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto& ex = examples[i];
      TrainExample te;
      te.id = static_cast<std::int64_t>(out.size());
      te.tokens = ex.tokens;
      te.token_ids = encode_tokens(ds.token_vocab, ex.tokens);
      te.case_tag = ex.split_case;
      te.gold_text = ex.lf;
      cogs::StringGraph sg =
          prebuilt ? prebuilt[i]
                   : cogs::lf_to_string_graph(cogs::parse_lf(ex.lf), ex.tokens);
      AlignedGraph gold = cogs::intern_string_graph(sg, ds.node_labels, ds.edge_labels);
      te.mr = strip_nulls(gold, ds.node_labels, ds.edge_labels);
      std::vector<int> slot_of_node;
      te.target = pad_to_slots(te.mr, gold.N, 1, ds.node_labels, ds.edge_labels,
                               &slot_of_node);
      te.gold = std::move(gold);
      out.push_back(std::move(te));
    }
    return out;
  };
  ds.train = convert(train, train_graphs.data());
  ds.dev = convert(dev, nullptr);
  ds.test = convert(test, nullptr);
  ds.gen = convert(gen, nullptr);
  return ds;
}

Dataset build_cfq_dataset(const std::vector<cfq::CfqExample>& all,
                          const cfq::SplitIndex& idx, int max_len, bool expect_official,
                          const std::string& data_hash) {
  Dataset ds;
  ds.kind = "cfq";
  ds.L = 2;
  ds.data_hash = data_hash;

  auto graph_of = [](const cfq::CfqExample& ex) {
    return cfq::sparql_to_graph(cfq::compress(cfq::parse_sparql(ex.sparql)));
  };

  std::set<std::string> node_labels, edge_labels;
  std::vector<std::vector<std::string>> token_corpus;
  for (int i : idx.train) {
    const auto& ex = all.at(static_cast<std::size_t>(i));
    const MRGraph g = graph_of(ex);
    for (const auto& n : g.nodes) node_labels.insert(n.label);
    for (const auto& e : g.edges) edge_labels.insert(e.label);
    token_corpus.push_back(split_ws(ex.question));
  }
  ds.token_vocab = Vocab::build(token_corpus);
  ds.node_labels = LabelVocab::build({node_labels.begin(), node_labels.end()});
  ds.edge_labels = LabelVocab::build({edge_labels.begin(), edge_labels.end()});
  if (expect_official && (ds.node_labels.size() != 84 || ds.edge_labels.size() != 4))
    throw std::runtime_error(
        "CFQ vocabulary sizes deviate from the official corpus: got " +
        std::to_string(ds.node_labels.size()) + " node and " +
        std::to_string(ds.edge_labels.size()) + " edge labels, expected 84/4");

  auto convert = [&](const std::vector<int>& ids) {
    std::vector<TrainExample> out;
    out.reserve(ids.size());
    for (int i : ids) {
      const auto& ex = all.at(static_cast<std::size_t>(i));
      TrainExample te;
      te.id = i;
      te.tokens = split_ws(ex.question);
      if (static_cast<int>(te.tokens.size()) > max_len)
        throw std::runtime_error("CFQ question longer than max_len: " + ex.question);
      te.token_ids = encode_tokens(ds.token_vocab, te.tokens);
      te.mr = graph_of(ex);
      // L=2 slot budget asserted loudly here
      if (static_cast<int>(te.mr.nodes.size()) >
          2 * static_cast<int>(te.tokens.size()))
        throw std::runtime_error("CFQ example needs more than 2N slots: " + ex.question);
      te.target =
          pad_to_slots(te.mr, static_cast<int>(te.tokens.size()), 2, ds.node_labels,
                       ds.edge_labels);
      te.gold_text = ex.sparql;
      out.push_back(std::move(te));
    }
    return out;
  };
  ds.train = convert(idx.train);
  ds.dev = convert(idx.dev);
  ds.test = convert(idx.test);
  return ds;
}

Dataset load_dataset(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.data_dir.empty())
    throw std::runtime_error("no data directory: set data_dir or LAGR_DATA_DIR");
  if (cfg.dataset == "cogs") {
    const fs::path root = fs::path(cfg.data_dir) / "cogs";
    auto read = [&](const char* name) {
      const fs::path p = root / name;
      return fs::exists(p) ? cogs::read_cogs_tsv(p.string())
                           : std::vector<cogs::CogsExample>{};
    };
    auto train = cogs::read_cogs_tsv((root / "train.tsv").string());
    std::string hash = file_blob_hash((root / "train.tsv").string());
    Dataset ds = build_cogs_dataset(train, read("dev.tsv"), read("test.tsv"),
                                    read("gen.tsv"), cfg.expect_official_sizes, hash);
    return ds;
  }
  const fs::path root = fs::path(cfg.data_dir) / "cfq";
  const fs::path data = root / "dataset.jsonl";
  const fs::path split =
      root / "splits" / (cfg.split.empty() ? "random.json" : cfg.split);
  auto all = cfq::read_cfq_jsonl(data.string());
  auto idx = cfq::read_split_index(split.string());
  const std::string hash =
      file_blob_hash(data.string()) + ":" + file_blob_hash(split.string());
  return build_cfq_dataset(all, idx, cfg.max_len, cfg.expect_official_sizes, hash);
}

// ---- evaluation -----------------------------------------------------------

std::string EvalReport::table() const {
  std::string out = "overall\t" + std::to_string(correct) + "/" + std::to_string(total) +
                    "\t" + std::to_string(accuracy) + "\n";
  for (const auto& [name, counts] : per_case) {
    const double acc =
        counts.second == 0 ? 0.0 : static_cast<double>(counts.first) / counts.second;
    out += name + "\t" + std::to_string(counts.first) + "/" +
           std::to_string(counts.second) + "\t" + std::to_string(acc) + "\n";
  }
  return out;
}

EvalReport evaluate_model(const LagrModel& model, const Dataset& ds,
                          const std::vector<TrainExample>& examples,
                          bool keep_predictions) {
  EvalReport report;
  for (const auto& ex : examples) {
    AlignedGraph decoded = model.decode(ex.token_ids);
    StripStats strip_stats;
    MRGraph mr = strip_nulls(decoded, ds.node_labels, ds.edge_labels, &strip_stats);
    bool ok = false;
    std::string prediction;
    if (ds.kind == "cogs") {
      try {
        prediction = cogs::serialize_lf(mr);
      } catch (const std::exception&) {
        prediction = "";
      }
      ok = normalize_ws(prediction) == normalize_ws(ex.gold_text);
    } else {
      prediction = cfq::graph_to_sparql(mr);
      ok = cfq::graph_isomorphic(mr, ex.mr);
    }
    ++report.total;
    report.correct += ok;
    auto& bucket = report.per_case[ex.case_tag.empty() ? "all" : ex.case_tag];
    ++bucket.second;
    bucket.first += ok;
    if (keep_predictions) report.predictions.push_back(prediction);
  }
  report.accuracy = report.total == 0 ? 0.0
                                      : static_cast<double>(report.correct) / report.total;
  return report;
}

// ---- training ---------------------------------------------------------------

namespace {

struct MetricsWriter {
  std::ofstream out;
  bool enabled = false;

  MetricsWriter(const std::string& path, const nlohmann::json& header) {
    if (path.empty()) return;
    out.open(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write metrics file: " + path);
    enabled = true;
    out << header.dump() << "\n";
  }
  void record(const nlohmann::json& j) {
    if (!enabled) return;
    out << j.dump() << "\n";
    out.flush();
  }
};

void write_alignment_dump(const std::string& path, const Dataset& ds,
                          const AlignmentCache& cache, const LagrModel& model,
                          const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write alignment dump: " + path);
  for (const auto& ex : ds.train) {
    auto a = cache.get(ex.id, ex.target.M());
    if (!a) continue;
    LagrModel::Output fwd = model.forward(ex.token_ids, /*train=*/false);
    const double j_score =
        score_alignment(*a, ex.target, fwd.node_log_probs, fwd.edge_log_probs);
    nlohmann::json rec{{"example_id", ex.id}, {"a", *a}, {"J", j_score}};
    out << rec.dump() << "\n";
  }
  (void)cfg;
}

nlohmann::json checkpoint_meta(const RunConfig& cfg, const Dataset& ds, int step,
                               const AlignmentCache& cache) {
  nlohmann::json meta;
  meta["config"] = cfg.to_kv();
  meta["config_hash"] = cfg.config_hash();
  meta["data_hash"] = ds.data_hash;
  meta["step"] = step;
  meta["tokens"] = ds.token_vocab.tokens();
  meta["node_labels"] = ds.node_labels.labels();
  meta["edge_labels"] = ds.edge_labels.labels();
  meta["L"] = ds.L;
  meta["alignment_cache"] = cache.to_json();
  return meta;
}

}  // namespace

bool restart_accepts(double train_acc, const RunConfig& cfg) {
  return train_acc >= static_cast<double>(cfg.restart_threshold);
}

TrainResult train_once(const RunConfig& cfg, const Dataset& ds, std::uint64_t seed) {
  if (ds.train.empty()) throw std::runtime_error("train: empty training split");
  const bool weak = cfg.supervision == "weak";

  Rng init_rng(stream_seed(seed, 1));
  Rng dropout_rng(stream_seed(seed, 2));
  Rng noise_rng(stream_seed(seed, 3));
  std::mt19937_64 shuffle_eng(stream_seed(seed, 4));

  LagrModel model(cfg.encoder_config(), ds.token_vocab.size(), ds.node_labels.size(),
                  ds.edge_labels.size(), ds.L, init_rng);
  std::vector<Tensor> params = model.params();
  Adam adam(params, {}, LrSchedule{cfg.lr, cfg.warmup, std::max(1, cfg.train_steps)});

  AlignmentConfig acfg;
  acfg.K = cfg.K;
  acfg.sigma = cfg.sigma;
  acfg.cache_enabled = cfg.cache;
  acfg.first_noiseless = cfg.first_noiseless;
  AlignmentCache cache;

  MetricsWriter metrics(cfg.metrics,
                        nlohmann::json{{"record", "run"},
                                       {"dataset", cfg.dataset},
                                       {"supervision", cfg.supervision},
                                       {"seed", seed},
                                       {"config_hash", cfg.config_hash()},
                                       {"data_hash", ds.data_hash}});

  TrainResult result;
  result.seed_used = seed;
  result.ckpt_prefix = cfg.ckpt;

  std::vector<int> order(ds.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), shuffle_eng);
  std::size_t cursor = 0;

  const double start = now_seconds();
  double window_loss = 0.0;
  int window_count = 0;
  double window_j_sum = 0.0, window_j_min = 0.0, window_j_max = 0.0;
  int window_j_count = 0;
  int window_changed = 0, window_changed_total = 0;

  const float inv_batch = 1.0f / static_cast<float>(cfg.batch_size);
  int step = 0;
  for (step = 1; step <= cfg.train_steps; ++step) {
    adam.zero_grad();
    bool aborted = false;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_eng);
        cursor = 0;
      }
      const TrainExample& ex = ds.train[static_cast<std::size_t>(order[cursor++])];
      if (ex.target.M() == 0) continue;
      LagrModel::Output out = model.forward(ex.token_ids, /*train=*/true, &dropout_rng);
      Tensor loss;
      if (weak) {
        WeakStepInfo info;
        loss = weak_example_loss(model, out, ex.target, acfg, noise_rng, &cache, ex.id,
                                 &info);
        window_j_sum += info.selected.score;
        window_j_min = window_j_count == 0 ? info.selected.score
                                           : std::min(window_j_min, info.selected.score);
        window_j_max = window_j_count == 0 ? info.selected.score
                                           : std::max(window_j_max, info.selected.score);
        ++window_j_count;
        if (info.had_cache) {
          ++window_changed_total;
          window_changed += info.changed_from_cache;
        }
      } else {
        if (!ex.gold)
          throw std::runtime_error("strong supervision needs gold aligned graphs");
        loss = model.supervised_loss(out, *ex.gold);
      }
      const float loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        nlohmann::json dump{{"event", "nan_loss"},
                            {"step", step},
                            {"seed", seed},
                            {"example_id", ex.id},
                            {"grad_norm", global_grad_norm(params)}};
        write_file(cfg.ckpt + ".abort.json", dump.dump(2));
        result.aborted_nan = true;
        aborted = true;
        break;
      }
      window_loss += loss_value;
      ++window_count;
      backward(scalar_mul(loss, inv_batch));
    }
    if (aborted) break;
    clip_gradients(params, cfg.grad_clip);
    adam.step_at(step);

    const bool eval_now = step % cfg.eval_interval == 0 || step == cfg.train_steps;
    if (eval_now) {
      EvalReport train_report;
      if (cfg.eval_train_subset > 0 &&
          cfg.eval_train_subset < static_cast<int>(ds.train.size())) {
        std::vector<TrainExample> subset(
            ds.train.begin(), ds.train.begin() + cfg.eval_train_subset);
        train_report = evaluate_model(model, ds, subset);
      } else {
        train_report = evaluate_model(model, ds, ds.train);
      }
      EvalReport dev_report = evaluate_model(model, ds, ds.dev);
      result.final_train_acc = train_report.accuracy;
      result.final_dev_acc = dev_report.accuracy;
      result.steps_run = step;

      nlohmann::json rec{{"record", "eval"},
                         {"step", step},
                         {"loss", window_count ? window_loss / window_count : 0.0},
                         {"train_acc", train_report.accuracy},
                         {"dev_acc", dev_report.accuracy},
                         {"lr", adam.schedule().at(step)},
                         {"wall_s", now_seconds() - start},
                         {"seed", seed}};
      if (weak) {
        rec["j_mean"] = window_j_count ? window_j_sum / window_j_count : 0.0;
        rec["j_min"] = window_j_min;
        rec["j_max"] = window_j_max;
        rec["align_changed_frac"] =
            window_changed_total ? static_cast<double>(window_changed) / window_changed_total
                                 : 1.0;
      }
      metrics.record(rec);
      window_loss = 0.0;
      window_count = 0;
      window_j_sum = window_j_min = window_j_max = 0.0;
      window_j_count = 0;
      window_changed = window_changed_total = 0;

      if (cfg.stop_at_train_acc > 0 &&
          train_report.accuracy >= static_cast<double>(cfg.stop_at_train_acc))
        break;
    }
  }
  result.steps_run = std::min(step, cfg.train_steps);

  if (cfg.train_steps == 0) {
    EvalReport train_report = evaluate_model(model, ds, ds.train);
    EvalReport dev_report = evaluate_model(model, ds, ds.dev);
    result.final_train_acc = train_report.accuracy;
    result.final_dev_acc = dev_report.accuracy;
  }

  // Weak supervision: how many learned alignments reproduce the gold one
  // (up to null-slot placement), when gold alignments exist.
  if (weak) {
    int matched = 0, with_gold = 0;
    for (const auto& ex : ds.train) {
      if (!ex.gold) continue;
      auto a = cache.get(ex.id, ex.target.M());
      if (!a) continue;
      ++with_gold;
      matched += apply_alignment(ex.target, *a) == *ex.gold;
    }
    if (with_gold > 0)
      result.gold_alignment_match = static_cast<double>(matched) / with_gold;
  }

  save_checkpoint(cfg.ckpt, model.named_params(),
                  checkpoint_meta(cfg, ds, result.steps_run, cache));
  if (weak && !cfg.alignment_dump.empty())
    write_alignment_dump(cfg.alignment_dump, ds, cache, model, cfg);
  return result;
}

TrainResult train_with_restarts(const RunConfig& cfg, const Dataset& ds) {
  TrainResult last;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(attempt);
    last = train_once(cfg, ds, seed);
    last.restarts_used = attempt;
    if (!last.aborted_nan && restart_accepts(last.final_train_acc, cfg)) {
      last.accepted = true;
      return last;
    }
  }
  last.accepted = false;
  return last;
}

TrainResult retrain(const RunConfig& cfg, const Dataset& ds, const std::string& dump_path) {
  std::ifstream in(dump_path);
  if (!in) throw std::runtime_error("cannot open alignment dump: " + dump_path);
  std::map<std::int64_t, std::vector<int>> alignments;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    alignments[j.at("example_id").get<std::int64_t>()] =
        j.at("a").get<std::vector<int>>();
  }
  if (alignments.empty()) throw std::runtime_error("alignment dump is empty: " + dump_path);

  Dataset retrain_ds = ds;
  for (auto& ex : retrain_ds.train) {
    auto it = alignments.find(ex.id);
    if (it == alignments.end())
      throw std::runtime_error("alignment dump missing example " + std::to_string(ex.id));
    ex.gold = apply_alignment(ex.target, it->second);
  }
  RunConfig strong_cfg = cfg;
  strong_cfg.supervision = "strong";
  return train_with_restarts(strong_cfg, retrain_ds);
}

std::vector<int> sample_gen_dev(int split_size, int n, std::uint64_t seed) {
  if (n > split_size)
    throw std::invalid_argument("sample_gen_dev: requested " + std::to_string(n) +
                                " of " + std::to_string(split_size) + " examples");
  std::vector<int> ids(static_cast<std::size_t>(split_size));
  for (int i = 0; i < split_size; ++i) ids[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 eng(seed);
  std::shuffle(ids.begin(), ids.end(), eng);
  ids.resize(static_cast<std::size_t>(n));
  return ids;
}

std::unique_ptr<LagrModel> model_from_checkpoint(const std::string& ckpt_prefix,
                                                 RunConfig* cfg_out,
                                                 AlignmentCache* cache_out) {
  const nlohmann::json meta = load_checkpoint_meta(ckpt_prefix);
  RunConfig cfg = RunConfig::from_kv(
      meta.at("config").get<std::map<std::string, std::string>>());
  const auto tokens = meta.at("tokens").get<std::vector<std::string>>();
  const auto node_labels = meta.at("node_labels").get<std::vector<std::string>>();
  const auto edge_labels = meta.at("edge_labels").get<std::vector<std::string>>();
  Rng init(0);
  auto model = std::make_unique<LagrModel>(
      cfg.encoder_config(), static_cast<int>(tokens.size()),
      static_cast<int>(node_labels.size()), static_cast<int>(edge_labels.size()),
      meta.at("L").get<int>(), init);
  auto params = model->named_params();
  load_checkpoint(ckpt_prefix, params);
  if (cfg_out) *cfg_out = cfg;
  if (cache_out && meta.contains("alignment_cache"))
    *cache_out = AlignmentCache::from_json(meta.at("alignment_cache"));
  return model;
}

EvalReport evaluate_checkpoint(const std::string& ckpt_prefix, const std::string& split_name,
                               const std::string& data_dir_override,
                               std::string* predictions_path) {
  const nlohmann::json meta = load_checkpoint_meta(ckpt_prefix);
  RunConfig cfg;
  auto model = model_from_checkpoint(ckpt_prefix, &cfg);
  if (!data_dir_override.empty()) cfg.data_dir = data_dir_override;
  Dataset ds = load_dataset(cfg);

  // The checkpoint's vocabularies are the contract; a dataset that rebuilds
  // differently cannot be scored against this model.
  if (ds.token_vocab.tokens() != meta.at("tokens").get<std::vector<std::string>>() ||
      ds.node_labels.labels() != meta.at("node_labels").get<std::vector<std::string>>() ||
      ds.edge_labels.labels() != meta.at("edge_labels").get<std::vector<std::string>>())
    throw std::runtime_error("checkpoint/vocabulary mismatch: dataset at '" +
                             cfg.data_dir + "' does not rebuild the stored vocabularies");

  const std::vector<TrainExample>* examples = nullptr;
  std::vector<TrainExample> gendev;
  if (split_name == "gendev") {
    const int n = std::min<int>(1000, static_cast<int>(ds.gen.size()));
    for (int i : sample_gen_dev(static_cast<int>(ds.gen.size()), n, cfg.seed))
      gendev.push_back(ds.gen[static_cast<std::size_t>(i)]);
    examples = &gendev;
  } else {
    examples = &ds.split(split_name);
  }
  EvalReport report = evaluate_model(*model, ds, *examples, /*keep_predictions=*/true);
  if (predictions_path && !predictions_path->empty()) {
    std::string out;
    for (const auto& p : report.predictions) {
      out += p;
      out += '\n';
    }
    write_file(*predictions_path, out);
  }
  return report;
}

}  // namespace lagr::harness
