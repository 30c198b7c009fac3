#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "liodom/nn/tensor.hpp"

namespace liodom::nn {

/// Checkpoint container:
///   8 bytes  "LIODCKPT"
///   u32 LE   format version (1)
///   u64 LE   header length in bytes
///   header   JSON {"architecture": ..., "precision": "f64",
///                  "tensors": [{"name", "shape", "offset", "count"}...]}
///   payload  float64 little-endian values; offsets are byte offsets into it
struct Checkpoint {
  nlohmann::json architecture;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const nlohmann::json& architecture, const ParamList& params);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& architecture,
                     const ParamList& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies tensors into `params` by name. Throws FormatError on a missing or
/// unexpected name or a shape mismatch.
void apply_checkpoint(const Checkpoint& ckpt, const ParamList& params);

}  // namespace liodom::nn
