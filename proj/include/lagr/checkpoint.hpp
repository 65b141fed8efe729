#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lagr/tensor.hpp"

namespace lagr {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

// Checkpoint = <prefix>.json manifest (name -> shape, byte offset, plus a
// free-form "meta" object) and <prefix>.bin, one raw little-endian float32
// blob. Round trips are bit-exact.
void save_checkpoint(const std::string& prefix, const std::vector<NamedParam>& params,
                     const nlohmann::json& meta);

// Fills `params` in place by name; shapes must match the manifest exactly.
// Returns the manifest's meta object.
nlohmann::json load_checkpoint(const std::string& prefix, std::vector<NamedParam>& params);

// Reads only the meta object (no parameter data).
nlohmann::json load_checkpoint_meta(const std::string& prefix);

}  // namespace lagr
