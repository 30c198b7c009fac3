#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "liodom/pipeline.hpp"
#include "liodom/preprocess.hpp"
#include "liodom/range_image.hpp"
#include "liodom/registration.hpp"
#include "liodom/training.hpp"

namespace liodom {

struct DataConfig {
  std::string sequence;             // training / inference sequence directory
  std::string validation_sequence;  // optional held-out sequence for train
  std::size_t first = 0;
  std::size_t count = 0;  // 0 = all frames
  double frame_period = 0.1;
};

/// Everything a run needs. Defaults follow the published implementation
/// details where they exist (Adam betas/decay, step schedule, batch 20,
/// S = 15, 52 x 720 maps at 0.5 degrees, alpha 1 / lambda 0.1, voxel 0.3 m
/// start, 0.01 m steps, K = 10240 +- 100).
struct RunConfig {
  ProjectionConfig projection;
  PreprocessParams preprocess;
  ModelConfig model;
  TrainingConfig training;
  RegistrationOptions registration;
  DataConfig data;
  std::uint64_t seed = 1;  // model initialization
};

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json model_to_json(const ModelConfig& cfg);
ModelConfig model_from_json(const nlohmann::json& j);

/// Overlays `patch` on the defaults. Unknown keys and values of the wrong
/// type raise ConfigError naming the key path.
RunConfig run_config_from_json(const nlohmann::json& patch);

/// "a.b.c=value"; value is parsed as JSON when possible, else taken as a
/// string.
nlohmann::json parse_override(const std::string& assignment);

/// Layers the files in order, then the overrides.
RunConfig load_run_config(const std::vector<std::filesystem::path>& files,
                          const std::vector<std::string>& overrides);

void write_run_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace liodom
