#include "ife/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace ife {

namespace {
constexpr char kMagic[4] = {'I', 'F', 'E', '1'};

void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint32_t float_bits(float f) {
  uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

float bits_float(uint32_t u) {
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}
}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const std::string& meta_json) {
  const ModelParams& p = model.params();
  nlohmann::json manifest = nlohmann::json::array();
  long offset = 0;
  for (size_t i = 0; i < p.names.size(); ++i) {
    manifest.push_back({{"name", p.names[i]},
                        {"shape", p.tensors[i].shape()},
                        {"offset", offset}});
    offset += 4L * p.tensors[i].size();
  }
  nlohmann::json header;
  header["version"] = 1;
  header["fingerprint"] = p.fingerprint;
  header["model"] = nlohmann::json::parse(model.config().to_json());
  header["meta"] = nlohmann::json::parse(meta_json.empty() ? "{}" : meta_json);
  header["manifest"] = manifest;
  std::string htext = header.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32le(out, static_cast<uint32_t>(htext.size()));
  out += htext;
  for (const Tensor& t : p.tensors)
    for (double v : t.values()) put_u32le(out, float_bits(static_cast<float>(v)));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValueError("checkpoint: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ValueError("checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValueError("checkpoint: cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ValueError("checkpoint: '" + path + "' is not an IFE1 file");
  const unsigned char* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  uint32_t hlen = get_u32le(raw + 4);
  if (bytes.size() < 8 + static_cast<size_t>(hlen))
    throw ValueError("checkpoint: truncated header in '" + path + "'");
  nlohmann::json header = nlohmann::json::parse(bytes.substr(8, hlen));
  if (header.at("version").get<int>() != 1)
    throw ValueError("checkpoint: unsupported version in '" + path + "'");

  ModelConfig cfg = ModelConfig::from_json(header.at("model").dump());
  if (header.at("fingerprint").get<std::string>() != cfg.fingerprint())
    throw ValueError("checkpoint: fingerprint does not match architecture config in '" + path + "'");

  Model model = Model::init(cfg, 0);
  ModelParams& p = model.params();
  const auto& manifest = header.at("manifest");
  if (manifest.size() != p.names.size())
    throw ValueError("checkpoint: manifest has " + std::to_string(manifest.size()) +
                     " entries, architecture needs " + std::to_string(p.names.size()));
  size_t blob_start = 8 + hlen;
  for (size_t i = 0; i < p.names.size(); ++i) {
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != p.names[i])
      throw ValueError("checkpoint: manifest parameter '" + entry.at("name").get<std::string>() +
                       "' does not match expected '" + p.names[i] + "'");
    Shape shape = entry.at("shape").get<Shape>();
    if (shape != p.tensors[i].shape())
      throw ValueError("checkpoint: shape mismatch for '" + p.names[i] + "'");
    size_t off = blob_start + entry.at("offset").get<size_t>();
    size_t need = off + 4 * static_cast<size_t>(p.tensors[i].size());
    if (bytes.size() < need) throw ValueError("checkpoint: truncated blob in '" + path + "'");
    for (int j = 0; j < p.tensors[i].size(); ++j)
      p.tensors[i].values()[static_cast<size_t>(j)] =
          static_cast<double>(bits_float(get_u32le(raw + off + 4 * static_cast<size_t>(j))));
  }
  return LoadedCheckpoint{std::move(model), header.at("meta").dump()};
}

}  // namespace ife
