#pragma once

#include <string>
#include <vector>

#include "lagr/graph.hpp"

namespace lagr::cfq {

struct CfqExample {
  std::string question;
  std::string sparql;
  std::string split;
};

// One WHERE constraint. One-place triples keep the category in `pred` and
// leave `objects` empty.
struct Triple {
  std::vector<std::string> subjects;
  std::string pred;
  std::vector<std::string> objects;
  bool one_place = false;
};

struct FilterPair {
  std::string a, b;
};

struct SparqlQuery {
  enum class Select { Count, DistinctX0 };
  Select select = Select::Count;
  std::vector<Triple> triples;
  std::vector<FilterPair> filters;
};

// CFQ-style SPARQL: SELECT count(*) / SELECT DISTINCT ?x0, WHERE clause with
// FILTER pairs, one-place ("X a CAT" or "X CAT") and two-place constraints;
// entity sides may be bracketed lists from compressed queries.
SparqlQuery parse_sparql(const std::string& text);

enum class CompressMode { ObjectOnly, Both };

// Merges triples that share (predicate, object side) by concatenating their
// subjects, and in Both mode symmetrically for shared (predicate, subject
// side); merged sides are entity-name sorted. Idempotent.
SparqlQuery compress(const SparqlQuery& q, CompressMode mode = CompressMode::Both);

// Entities and variables become one node each; every triple occurrence
// contributes its own predicate node. For wh- queries ?x0 is replaced by
// select_?x0. One-place: entity --agent--> predicate. Two-place:
// predicate --agent--> subject, predicate --theme--> object. FILTER pairs
// get a FILTER edge, oriented from the lexicographically smaller entity.
MRGraph sparql_to_graph(const SparqlQuery& q);

struct ReconstructStats {
  int dropped_predicates = 0;  // predicate nodes without usable agent edges
};

// Canonical compressed SPARQL text: constraints sorted lexicographically,
// select_?x0 restored to ?x0. Round-trips sparql_to_graph up to isomorphism.
std::string graph_to_sparql(const MRGraph& g, ReconstructStats* stats = nullptr);

// Label-preserving isomorphism of directed labeled graphs; backtracking
// with label-count and degree-signature pruning.
bool graph_isomorphic(const MRGraph& a, const MRGraph& b);

bool is_entity(const std::string& label);

// "[M2 directed_by ?x0, M3 directed_by ?x0]" -> display form of a triple
// list; multi-entity sides render as "[M2, M3]".
std::string format_triples(const std::vector<Triple>& triples);
std::string format_triple(const Triple& t);

// JSON-lines {question, sparql} reader plus split index files.
std::vector<CfqExample> read_cfq_jsonl(const std::string& path);
struct SplitIndex {
  std::vector<int> train, dev, test;
};
SplitIndex read_split_index(const std::string& path);

}  // namespace lagr::cfq
