#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lagr/alignment.hpp"
#include "lagr/cfq.hpp"
#include "lagr/cogs.hpp"
#include "lagr/graph.hpp"
#include "lagr/model.hpp"
#include "lagr/vocab.hpp"

namespace lagr::harness {

struct RunConfig {
  std::string dataset = "cogs";  // cogs | cfq
  std::string data_dir;          // defaults to $LAGR_DATA_DIR
  std::string split;             // cfq split-index file name
  std::string supervision = "strong";  // strong | weak | retrain
  // encoder
  int d = 64;
  int enc_layers = 2;
  int heads = 4;
  int ff = 256;
  float dropout = 0.1f;
  std::string encoder_mode = "shared";  // shared | separate
  int max_len = 64;
  int L = 1;  // graph layers
  // optimization
  int batch_size = 32;
  float lr = 1e-3f;
  int warmup = 0;
  int train_steps = 2000;
  float grad_clip = 1.0f;
  int eval_interval = 250;
  int eval_train_subset = 0;  // 0 = evaluate the full training split
  // weak supervision
  int K = 1;
  float sigma = 0.0f;
  bool cache = false;
  bool first_noiseless = false;
  // run control
  std::uint64_t seed = 1;
  float restart_threshold = 0.95f;
  int max_restarts = 2;
  float stop_at_train_acc = -1.0f;  // <= 0 disables the stopping target
  bool expect_official_sizes = false;
  // paths
  std::string ckpt = "lagr_ckpt";
  std::string metrics;
  std::string alignment_dump;
  std::string predictions;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_kv(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_kv() const;
  std::string config_hash() const;
  void validate() const;
  EncoderConfig encoder_config() const;
};

struct TrainExample {
  std::int64_t id = 0;
  std::vector<std::string> tokens;
  std::vector<int> token_ids;
  UnalignedTarget target;
  std::optional<AlignedGraph> gold;  // strong supervision
  MRGraph mr;                        // gold MR graph
  std::string gold_text;             // exact-match reference (COGS)
  std::string case_tag;
};

struct Dataset {
  std::string kind;
  Vocab token_vocab;
  LabelVocab node_labels;
  LabelVocab edge_labels;
  int L = 1;
  std::vector<TrainExample> train, dev, test, gen;
  std::string data_hash;

  const std::vector<TrainExample>& split(const std::string& name) const;
};

// Loads COGS TSVs or CFQ JSONL+split files from cfg.data_dir, builds the
// vocabularies from the training split, and converts targets. Asserts the
// official vocabulary sizes (645/10, 84/4) when cfg.expect_official_sizes.
Dataset load_dataset(const RunConfig& cfg);
Dataset build_cogs_dataset(const std::vector<cogs::CogsExample>& train,
                           const std::vector<cogs::CogsExample>& dev,
                           const std::vector<cogs::CogsExample>& test,
                           const std::vector<cogs::CogsExample>& gen,
                           bool expect_official, const std::string& data_hash = "");
Dataset build_cfq_dataset(const std::vector<cfq::CfqExample>& all,
                          const cfq::SplitIndex& idx, int max_len, bool expect_official,
                          const std::string& data_hash = "");

struct EvalReport {
  int correct = 0;
  int total = 0;
  double accuracy = 0.0;
  std::map<std::string, std::pair<int, int>> per_case;  // correct/total
  std::vector<std::string> predictions;

  std::string table() const;
};

EvalReport evaluate_model(const LagrModel& model, const Dataset& ds,
                          const std::vector<TrainExample>& examples,
                          bool keep_predictions = false);

struct TrainResult {
  double final_train_acc = 0.0;
  double final_dev_acc = 0.0;
  int steps_run = 0;
  int restarts_used = 0;
  std::uint64_t seed_used = 0;
  bool aborted_nan = false;
  bool accepted = false;
  double gold_alignment_match = -1.0;  // weak mode, when gold is known
  std::string ckpt_prefix;
};

// One training run with the given seed. Writes the checkpoint and optional
// metrics/alignment-dump files from cfg.
TrainResult train_once(const RunConfig& cfg, const Dataset& ds, std::uint64_t seed);

// accept iff train accuracy meets the restart threshold
bool restart_accepts(double train_acc, const RunConfig& cfg);

// Applies the restart policy: relaunches with seed+1 until accepted or
// max_restarts is exhausted.
TrainResult train_with_restarts(const RunConfig& cfg, const Dataset& ds);

// Strong training against alignments read from a weak run's dump file.
TrainResult retrain(const RunConfig& cfg, const Dataset& ds,
                    const std::string& dump_path);

// Deterministic uniform sample without replacement.
std::vector<int> sample_gen_dev(int split_size, int n, std::uint64_t seed);

// Rebuilds the model from a checkpoint (vocabulary sizes from its meta) and
// evaluates the named split of the dataset implied by the stored config.
EvalReport evaluate_checkpoint(const std::string& ckpt_prefix, const std::string& split_name,
                               const std::string& data_dir_override = "",
                               std::string* predictions_path = nullptr);

std::unique_ptr<LagrModel> model_from_checkpoint(const std::string& ckpt_prefix,
                                                 RunConfig* cfg_out = nullptr,
                                                 AlignmentCache* cache_out = nullptr);

}  // namespace lagr::harness
