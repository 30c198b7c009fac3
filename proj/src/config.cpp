#include "liodom/config.hpp"

#include <fstream>
#include <sstream>

#include "liodom/errors.hpp"

namespace liodom {

using nlohmann::json;

namespace {

std::string kind(const json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

// Every key of `patch` must exist in `schema` with a compatible type.
void check_keys(const json& patch, const json& schema, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config " + (path.empty() ? "root" : path) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    const json& expected = schema.at(key);
    if (expected.is_object()) {
      check_keys(value, expected, here);
    } else if (kind(value) != kind(expected)) {
      throw ConfigError("config key '" + here + "' expects a " + kind(expected) + ", got " +
                        kind(value));
    }
  }
}

json projection_json(const ProjectionConfig& p) {
  return {{"fov_horizontal_deg", p.fov_horizontal_deg},
          {"fov_up_deg", p.fov_up_deg},
          {"eta_w_deg", p.eta_w_deg},
          {"eta_h_deg", p.eta_h_deg},
          {"height", p.height},
          {"width", p.width}};
}

json preprocess_json(const PreprocessParams& p) {
  return {{"planefit_k", p.planefit_k},
          {"ransac",
           {{"distance_threshold", p.ransac.distance_threshold},
            {"iterations", p.ransac.iterations},
            {"min_inlier_fraction", p.ransac.min_inlier_fraction},
            {"seed", p.ransac.seed}}},
          {"voxel",
           {{"initial_side", p.voxel.initial_side},
            {"step", p.voxel.step},
            {"target", p.voxel.target},
            {"tolerance", p.voxel.tolerance},
            {"max_passes", p.voxel.max_passes}}}};
}

json loss_json(const LossSettings& l) {
  return {{"alpha", l.weights.alpha},
          {"lambda", l.weights.lambda},
          {"matching", to_string(l.matching)},
          {"max_correspondence_distance", l.max_correspondence_distance}};
}

json training_json(const TrainingConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.adam.learning_rate},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"epsilon", t.adam.epsilon},
          {"weight_decay", t.adam.weight_decay},
          {"decoupled_weight_decay", t.adam.decoupled_weight_decay},
          {"step_size", t.adam.step_size},
          {"gamma", t.adam.gamma},
          {"seed", t.seed},
          {"shuffle", t.shuffle},
          {"checkpoint_every", t.checkpoint_every}};
}

json registration_json(const RegistrationOptions& r) {
  return {{"max_outer_iterations", r.max_outer_iterations},
          {"max_inner_iterations", r.max_inner_iterations},
          {"tolerance", r.tolerance},
          {"policy", r.policy == StepPolicy::GaussNewton ? "gauss-newton" : "gradient-descent"},
          {"descent_step", r.descent_step},
          {"max_halvings", r.max_halvings},
          {"max_correspondence_distance", r.max_correspondence_distance}};
}

json data_json(const DataConfig& d) {
  return {{"sequence", d.sequence},
          {"validation_sequence", d.validation_sequence},
          {"first", d.first},
          {"count", d.count},
          {"frame_period", d.frame_period}};
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  out = j.at(key).get<T>();
}

}  // namespace

json model_to_json(const ModelConfig& m) {
  return {{"encoder",
           {{"channels", m.encoder.channels},
            {"blocks_per_stage", m.encoder.blocks_per_stage},
            {"feature_width", m.encoder.feature_width}}},
          {"lstm_hidden", m.lstm_hidden},
          {"head_width", m.head_width},
          {"imu_mode", to_string(m.imu_mode)},
          {"head_mode", to_string(m.head_mode)},
          {"head_type", to_string(m.head_type)},
          {"imu_window", m.imu_window},
          {"rotation_scale", m.rotation_scale},
          {"vertex_scale", m.vertex_scale},
          {"accel_scale", m.accel_scale},
          {"gyro_scale", m.gyro_scale}};
}

ModelConfig model_from_json(const json& patch) {
  json j = model_to_json(ModelConfig{});
  check_keys(patch, j, "model");
  j.merge_patch(patch);
  ModelConfig m;
  try {
    const json& e = j.at("encoder");
    const auto ch = e.at("channels").get<std::vector<int>>();
    if (ch.size() != 3) throw ConfigError("model.encoder.channels needs 3 entries");
    m.encoder.channels = {ch[0], ch[1], ch[2]};
    get(e, "blocks_per_stage", m.encoder.blocks_per_stage);
    get(e, "feature_width", m.encoder.feature_width);
    get(j, "lstm_hidden", m.lstm_hidden);
    get(j, "head_width", m.head_width);
    m.imu_mode = parse_imu_mode(j.at("imu_mode").get<std::string>());
    m.head_mode = parse_head_mode(j.at("head_mode").get<std::string>());
    m.head_type = parse_head_type(j.at("head_type").get<std::string>());
    get(j, "imu_window", m.imu_window);
    get(j, "rotation_scale", m.rotation_scale);
    get(j, "vertex_scale", m.vertex_scale);
    get(j, "accel_scale", m.accel_scale);
    get(j, "gyro_scale", m.gyro_scale);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  for (int c : m.encoder.channels) {
    if (c < 1) throw ConfigError("model.encoder.channels must be positive");
  }
  if (m.encoder.feature_width < 1 || m.lstm_hidden < 1 || m.head_width < 1 || m.imu_window < 1) {
    throw ConfigError("model widths and imu_window must be positive");
  }
  return m;
}

json to_json(const RunConfig& c) {
  return {{"projection", projection_json(c.projection)},
          {"preprocess", preprocess_json(c.preprocess)},
          {"model", model_to_json(c.model)},
          {"loss", loss_json(c.training.loss)},
          {"training", training_json(c.training)},
          {"registration", registration_json(c.registration)},
          {"data", data_json(c.data)},
          {"seed", c.seed}};
}

RunConfig run_config_from_json(const json& patch) {
  json j = to_json(RunConfig{});
  check_keys(patch, j, "");
  j.merge_patch(patch);

  RunConfig c;
  try {
    const json& p = j.at("projection");
    get(p, "fov_horizontal_deg", c.projection.fov_horizontal_deg);
    get(p, "fov_up_deg", c.projection.fov_up_deg);
    get(p, "eta_w_deg", c.projection.eta_w_deg);
    get(p, "eta_h_deg", c.projection.eta_h_deg);
    get(p, "height", c.projection.height);
    get(p, "width", c.projection.width);

    const json& pp = j.at("preprocess");
    get(pp, "planefit_k", c.preprocess.planefit_k);
    const json& r = pp.at("ransac");
    get(r, "distance_threshold", c.preprocess.ransac.distance_threshold);
    get(r, "iterations", c.preprocess.ransac.iterations);
    get(r, "min_inlier_fraction", c.preprocess.ransac.min_inlier_fraction);
    get(r, "seed", c.preprocess.ransac.seed);
    const json& v = pp.at("voxel");
    get(v, "initial_side", c.preprocess.voxel.initial_side);
    get(v, "step", c.preprocess.voxel.step);
    get(v, "target", c.preprocess.voxel.target);
    get(v, "tolerance", c.preprocess.voxel.tolerance);
    get(v, "max_passes", c.preprocess.voxel.max_passes);

    c.model = model_from_json(j.at("model"));

    const json& l = j.at("loss");
    get(l, "alpha", c.training.loss.weights.alpha);
    get(l, "lambda", c.training.loss.weights.lambda);
    c.training.loss.matching = parse_matching(l.at("matching").get<std::string>());
    get(l, "max_correspondence_distance", c.training.loss.max_correspondence_distance);

    const json& t = j.at("training");
    get(t, "epochs", c.training.epochs);
    get(t, "batch_size", c.training.batch_size);
    get(t, "learning_rate", c.training.adam.learning_rate);
    get(t, "beta1", c.training.adam.beta1);
    get(t, "beta2", c.training.adam.beta2);
    get(t, "epsilon", c.training.adam.epsilon);
    get(t, "weight_decay", c.training.adam.weight_decay);
    get(t, "decoupled_weight_decay", c.training.adam.decoupled_weight_decay);
    get(t, "step_size", c.training.adam.step_size);
    get(t, "gamma", c.training.adam.gamma);
    get(t, "seed", c.training.seed);
    get(t, "shuffle", c.training.shuffle);
    get(t, "checkpoint_every", c.training.checkpoint_every);

    const json& g = j.at("registration");
    get(g, "max_outer_iterations", c.registration.max_outer_iterations);
    get(g, "max_inner_iterations", c.registration.max_inner_iterations);
    get(g, "tolerance", c.registration.tolerance);
    const auto policy = g.at("policy").get<std::string>();
    if (policy == "gauss-newton") {
      c.registration.policy = StepPolicy::GaussNewton;
    } else if (policy == "gradient-descent") {
      c.registration.policy = StepPolicy::GradientDescent;
    } else {
      throw ConfigError("registration.policy must be gauss-newton or gradient-descent");
    }
    get(g, "descent_step", c.registration.descent_step);
    get(g, "max_halvings", c.registration.max_halvings);
    get(g, "max_correspondence_distance", c.registration.max_correspondence_distance);
    c.registration.weights = c.training.loss.weights;

    const json& d = j.at("data");
    get(d, "sequence", c.data.sequence);
    get(d, "validation_sequence", c.data.validation_sequence);
    get(d, "first", c.data.first);
    get(d, "count", c.data.count);
    get(d, "frame_period", c.data.frame_period);
    get(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    c.projection.validate();
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("projection: ") + e.what());
  }
  if (c.training.epochs < 0 || c.training.batch_size < 1) {
    throw ConfigError("training.epochs must be >= 0 and training.batch_size >= 1");
  }
  return c;
}

json parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) {
    if (k.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    keys.push_back(k);
  }
  json out = value;
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) out = json{{*it, out}};
  return out;
}

RunConfig load_run_config(const std::vector<std::filesystem::path>& files,
                          const std::vector<std::string>& overrides) {
  json merged = json::object();
  const json schema = to_json(RunConfig{});
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot read config " + f.string());
    json layer;
    try {
      layer = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
    try {
      check_keys(layer, schema, "");
    } catch (const ConfigError& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
    merged.merge_patch(layer);
  }
  for (const auto& o : overrides) {
    const json layer = parse_override(o);
    check_keys(layer, schema, "");
    merged.merge_patch(layer);
  }
  return run_config_from_json(merged);
}

void write_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace liodom
