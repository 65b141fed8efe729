#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lagr/cfq.hpp"
#include "lagr/cogs.hpp"

namespace lagr::synth {

// COGS-format corpus generator. Sentences cover the full construction
// inventory (articles, proper nouns, ditransitives, PPs, clausal and
// infinitival complements, passives, primitives), and the gen split
// recombines lexical items into roles never seen in training.
struct CogsGenConfig {
  int train = 500;
  int dev = 100;
  int test = 100;
  int gen = 200;
  // Restrict to indefinite NPs with per-sentence-unique labels (used by the
  // weak-equals-strong reduction checks).
  bool unique_labels_only = false;
};

struct CogsCorpus {
  std::vector<cogs::CogsExample> train, dev, test, gen;
};

CogsCorpus generate_cogs(const CogsGenConfig& cfg, std::uint64_t seed);
void write_cogs_tsv(const std::vector<cogs::CogsExample>& examples, const std::string& path);

// CFQ-style SPARQL sampler: FILTER / one-place / two-place constraints over
// a small entity and predicate inventory, with occasional duplicated
// predicates, plus a templated question string for the encoder.
struct CfqGenConfig {
  int count = 1200;
  int max_constraints = 5;
};

std::vector<cfq::CfqExample> generate_cfq(const CfqGenConfig& cfg, std::uint64_t seed);
void write_cfq_jsonl(const std::vector<cfq::CfqExample>& examples, const std::string& path);
void write_split_index(const std::vector<int>& train, const std::vector<int>& dev,
                       const std::vector<int>& test, const std::string& path);

}  // namespace lagr::synth
