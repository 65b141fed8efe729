#include "lagr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "lagr/util.hpp"

namespace lagr {

namespace {

static_assert(sizeof(float) == 4, "float32 blobs require 4-byte float");

void to_little_endian(std::vector<float>& buf) {
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : buf) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& prefix, const std::vector<NamedParam>& params,
                     const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["format"] = "lagr-checkpoint-v1";
  manifest["params"] = nlohmann::json::array();
  std::ofstream blob(prefix + ".bin", std::ios::binary | std::ios::trunc);
  if (!blob) throw std::runtime_error("cannot write checkpoint blob: " + prefix + ".bin");
  std::uint64_t offset = 0;
  for (const NamedParam& p : params) {
    nlohmann::json entry;
    entry["name"] = p.name;
    entry["shape"] = p.tensor.shape();
    entry["offset"] = offset;
    entry["count"] = p.tensor.values().size();
    manifest["params"].push_back(entry);
    std::vector<float> buf = p.tensor.values();
    to_little_endian(buf);
    blob.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * 4));
    offset += buf.size() * 4;
  }
  if (!blob) throw std::runtime_error("write failed: " + prefix + ".bin");
  blob.close();
  manifest["meta"] = meta;
  write_file(prefix + ".json", manifest.dump(2));
}

nlohmann::json load_checkpoint(const std::string& prefix, std::vector<NamedParam>& params) {
  const nlohmann::json manifest = nlohmann::json::parse(read_file(prefix + ".json"));
  std::ifstream blob(prefix + ".bin", std::ios::binary);
  if (!blob) throw std::runtime_error("cannot open checkpoint blob: " + prefix + ".bin");

  std::unordered_map<std::string, NamedParam*> by_name;
  for (NamedParam& p : params) by_name[p.name] = &p;

  std::size_t filled = 0;
  for (const auto& entry : manifest.at("params")) {
    const std::string name = entry.at("name");
    auto it = by_name.find(name);
    if (it == by_name.end()) continue;
    NamedParam& p = *it->second;
    const Shape shape = entry.at("shape").get<Shape>();
    if (shape != p.tensor.shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file has " +
                               shape_str(shape) + ", model has " +
                               shape_str(p.tensor.shape()));
    const std::uint64_t offset = entry.at("offset");
    const std::size_t count = entry.at("count");
    if (count != p.tensor.values().size())
      throw std::runtime_error("checkpoint: element count mismatch for '" + name + "'");
    blob.seekg(static_cast<std::streamoff>(offset));
    std::vector<float> buf(count);
    blob.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 4));
    if (!blob) throw std::runtime_error("checkpoint: truncated blob reading '" + name + "'");
    to_little_endian(buf);  // symmetric swap
    p.tensor.values() = std::move(buf);
    ++filled;
  }
  if (filled != params.size()) {
    for (const NamedParam& p : params)
      if (!manifest.at("params").empty()) {
        bool found = false;
        for (const auto& entry : manifest.at("params"))
          if (entry.at("name") == p.name) found = true;
        if (!found)
          throw std::runtime_error("checkpoint: parameter '" + p.name + "' missing from " +
                                   prefix + ".json");
      }
  }
  return manifest.contains("meta") ? manifest.at("meta") : nlohmann::json::object();
}

nlohmann::json load_checkpoint_meta(const std::string& prefix) {
  const nlohmann::json manifest = nlohmann::json::parse(read_file(prefix + ".json"));
  return manifest.contains("meta") ? manifest.at("meta") : nlohmann::json::object();
}

}  // namespace lagr
