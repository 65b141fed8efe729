#include "lagr/vocab.hpp"

#include <fstream>
#include <stdexcept>

#include "lagr/util.hpp"

namespace lagr {

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus) {
  Vocab v;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) v.add(tok);
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("vocab: id " + std::to_string(id) + " outside " +
                            std::to_string(size()) + " entries");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(const std::string& token) const { return ids_.count(token) > 0; }

int Vocab::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = size();
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

void Vocab::save(const std::string& path) const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  write_file(path, out);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  Vocab v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  while (std::getline(in, line)) v.add(line);
  if (v.size() < 2 || v.tokens_[0] != "<pad>" || v.tokens_[1] != "<unk>")
    throw std::runtime_error("vocab file missing reserved entries: " + path);
  return v;
}

std::vector<std::string> tokenize_utterance(const std::string& utterance) {
  std::vector<std::string> tokens = split_ws(utterance);
  if (tokens.empty())
    throw std::invalid_argument("tokenize: empty utterance");
  return tokens;
}

std::vector<int> encode_tokens(const Vocab& vocab, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

}  // namespace lagr
