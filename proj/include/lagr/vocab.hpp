#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace lagr {

// Token vocabulary with reserved padding/unknown ids. Ordering is
// first-appearance over the corpus, so rebuilding from the same corpus
// reproduces the same ids.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();
  static Vocab build(const std::vector<std::vector<std::string>>& corpus);

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  int add(const std::string& token);  // idempotent

  // One token per line, id = line number.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Whitespace tokenization of a pre-tokenized utterance; empty input is
// rejected.
std::vector<std::string> tokenize_utterance(const std::string& utterance);
std::vector<int> encode_tokens(const Vocab& vocab, const std::vector<std::string>& tokens);

}  // namespace lagr
