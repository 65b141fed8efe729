#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "lagr/graph.hpp"

namespace lagr::cogs {

struct CogsExample {
  std::vector<std::string> tokens;
  std::string lf;
  std::string split_case;
};

// One parsed clause of a standard logical form.
struct Definite {
  std::string noun;
  int var = 0;
};

struct Conjunct {
  std::string pred;
  std::string role;  // empty for unary predicates, else agent/theme/.../nmod.on
  int head_var = 0;
  bool arg_is_var = false;
  int arg_var = 0;
  std::string arg_name;  // proper-noun argument
  bool unary = true;
};

// Verb primitives come as lambda templates; we keep the parsed structure so
// serialization can reproduce the text.
struct LambdaForm {
  std::string verb;
  std::vector<std::string> vars;  // binding order, e.g. a, b, e
  std::vector<std::pair<std::string, std::string>> conjuncts;  // (role, bound var)
};

struct LogicalForm {
  enum class Kind { Standard, ProperPrimitive, LambdaPrimitive };
  Kind kind = Kind::Standard;
  std::vector<Definite> definites;
  std::vector<Conjunct> conjuncts;
  std::string primitive_name;
  LambdaForm lambda;
};

// Parses COGS logical-form text: optional "* noun ( x _ i )" clauses joined
// by " ; ", then conjuncts joined by " AND "; bare proper-noun and LAMBDA
// primitives are recognized as such.
LogicalForm parse_lf(const std::string& text);

// Aligned graph in label-string space (empty label = null); x_i sits at the
// 0-based token position i.
struct StringGraph {
  int N = 0;
  std::vector<std::string> labels;
  std::vector<std::tuple<int, int, std::string>> edges;  // (src pos, dst pos, role)
};

// Builds the single-layer aligned graph: predicates own their variable's
// slot, articles sit one token before their noun with an article edge, and
// proper-noun arguments are located in the token sequence.
StringGraph lf_to_string_graph(const LogicalForm& lf, const std::vector<std::string>& tokens);

AlignedGraph intern_string_graph(const StringGraph& g, const LabelVocab& node_vocab,
                                 const LabelVocab& edge_vocab);
AlignedGraph lf_to_aligned_graph(const LogicalForm& lf, const std::vector<std::string>& tokens,
                                 const LabelVocab& node_vocab, const LabelVocab& edge_vocab);

// Serializes a provenance-carrying MR graph back to canonical COGS text:
// definite clauses sorted by noun position, conjuncts by (head position,
// argument position) with unary clauses at their variable's first slot.
std::string serialize_lf(const MRGraph& g);

// Labels contributed by this example, for vocabulary building.
void collect_labels(const StringGraph& g, std::set<std::string>& node_labels,
                    std::set<std::string>& edge_labels);

struct ReadStats {
  int skipped_lines = 0;
};

// Streaming reader over the 3-column COGS TSV.
void for_each_cogs_line(const std::string& path,
                        const std::function<void(CogsExample&&)>& fn,
                        ReadStats* stats = nullptr);
std::vector<CogsExample> read_cogs_tsv(const std::string& path, ReadStats* stats = nullptr);

// The nine non-null edge labels of the COGS graph schema.
const std::vector<std::string>& cogs_edge_labels();

}  // namespace lagr::cogs
