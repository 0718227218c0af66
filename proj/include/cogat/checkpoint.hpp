#pragma once

// Parameter checkpoints: one JSON manifest line followed by the raw
// little-endian float64 payload of every parameter, in manifest order.
//
//   {"format":"cogat-ckpt-v1","metadata":{...},"params":[{"name":..,"shape":[..],"offset":..}, ..]}\n
//   <payload>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cogat/tensor.hpp"

namespace cogat {

inline constexpr const char* kCheckpointFormat = "cogat-ckpt-v1";

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  NamedTensors params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cogat
