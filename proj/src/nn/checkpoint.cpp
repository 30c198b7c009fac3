#include "liodom/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "liodom/errors.hpp"

namespace liodom::nn {

namespace {

constexpr char kMagic[8] = {'L', 'I', 'O', 'D', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

std::string serialize_checkpoint(const nlohmann::json& architecture, const ParamList& params) {
  nlohmann::json header;
  header["architecture"] = architecture;
  header["precision"] = "f64";
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    header["tensors"].push_back({{"name", p.name},
                                 {"shape", p.tensor->shape()},
                                 {"offset", offset},
                                 {"count", p.tensor->size()}});
    offset += p.tensor->size() * sizeof(double);
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& p : params) {
    for (const double v : p.tensor->values()) put_le<double>(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin) {
  const std::size_t prefix = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < prefix || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(origin + ": not a checkpoint file");
  }
  const auto version = get_le<std::uint32_t>(bytes, sizeof(kMagic));
  if (version != kCheckpointVersion) {
    throw FormatError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, sizeof(kMagic) + 4);
  if (header_len > bytes.size() - prefix) throw FormatError(origin + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(prefix, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": bad header: " + e.what());
  }
  if (header.value("precision", "") != "f64") {
    throw FormatError(origin + ": unsupported precision");
  }
  const std::size_t data_start = prefix + header_len;
  Checkpoint ckpt;
  ckpt.architecture = header.value("architecture", nlohmann::json::object());
  try {
    for (const auto& t : header.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<int>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      Tensor tensor(shape);
      if (t.at("count").get<std::size_t>() != tensor.size()) {
        throw FormatError(origin + ": count/shape mismatch for " + t.at("name").get<std::string>());
      }
      const std::size_t begin = data_start + offset;
      if (begin + tensor.size() * sizeof(double) > bytes.size()) {
        throw FormatError(origin + ": truncated payload");
      }
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        tensor[i] = get_le<double>(bytes, begin + i * sizeof(double));
      }
      ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(tensor));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": bad tensor table: " + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& architecture,
                     const ParamList& params) {
  const std::string bytes = serialize_checkpoint(architecture, params);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), path.string());
}

void apply_checkpoint(const Checkpoint& ckpt, const ParamList& params) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : ckpt.tensors) by_name[name] = &t;
  if (by_name.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(by_name.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks tensor " + p.name);
    if (!it->second->same_shape(*p.tensor)) {
      throw FormatError("checkpoint tensor " + p.name + " has shape " +
                        shape_string(it->second->shape()) + ", model expects " +
                        shape_string(p.tensor->shape()));
    }
    *p.tensor = *it->second;
  }
}

}  // namespace liodom::nn
