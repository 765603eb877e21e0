#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "litefat/errors.hpp"
#include "litefat/kv.hpp"
#include "litefat/model.hpp"

namespace litefat::model {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

[[noreturn]] void truncated() {
  throw FormatError("checkpoint: truncated file");
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) truncated();
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) truncated();
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_u64(in));
}

}  // namespace

std::string config_to_text(const ModelConfig& config) {
  std::ostringstream out;
  out << "model.nodes = " << config.nodes << "\n"
      << "model.landmark_features = " << config.landmark_features << "\n"
      << "model.fused_dim = " << config.fused_dim << "\n"
      << "model.adj_embed_dim = " << config.adj_embed_dim << "\n"
      << "model.residual_channels = " << config.residual_channels << "\n"
      << "model.conv_taps = " << config.conv_taps << "\n"
      << "model.dilations = ";
  for (std::size_t i = 0; i < config.dilations.size(); ++i) {
    if (i) out << ",";
    out << config.dilations[i];
  }
  out << "\n"
      << "model.gcn_hidden = " << config.gcn_hidden << "\n"
      << "model.classes = " << config.classes << "\n"
      << "model.frames_per_sample = " << config.frames_per_sample << "\n"
      << "model.use_tcn = " << (config.use_tcn ? "true" : "false") << "\n"
      << "model.use_gcn = " << (config.use_gcn ? "true" : "false") << "\n"
      << "model.use_embedding = " << (config.use_embedding ? "true" : "false")
      << "\n";
  return out.str();
}

bool apply_config_key(ModelConfig& config, const std::string& key,
                      const std::string& value) {
  if (key == "model.nodes") {
    config.nodes = kv_to_count(key, value);
  } else if (key == "model.landmark_features") {
    config.landmark_features = kv_to_count(key, value);
  } else if (key == "model.fused_dim") {
    config.fused_dim = kv_to_count(key, value);
  } else if (key == "model.adj_embed_dim") {
    config.adj_embed_dim = kv_to_count(key, value);
  } else if (key == "model.residual_channels") {
    config.residual_channels = kv_to_count(key, value);
  } else if (key == "model.conv_taps") {
    config.conv_taps = kv_to_count(key, value);
  } else if (key == "model.dilations") {
    config.dilations = kv_to_count_list(key, value);
  } else if (key == "model.gcn_hidden") {
    config.gcn_hidden = kv_to_count(key, value);
  } else if (key == "model.classes") {
    config.classes = kv_to_count(key, value);
  } else if (key == "model.frames_per_sample") {
    config.frames_per_sample = kv_to_count(key, value);
  } else if (key == "model.use_tcn") {
    config.use_tcn = kv_to_bool(key, value);
  } else if (key == "model.use_gcn") {
    config.use_gcn = kv_to_bool(key, value);
  } else if (key == "model.use_embedding") {
    config.use_embedding = kv_to_bool(key, value);
  } else {
    return false;
  }
  return true;
}

ModelConfig config_from_text(const std::string& text) {
  ModelConfig config;
  for (const auto& [key, value] : parse_kv(text)) {
    if (!apply_config_key(config, key, value))
      throw FormatError("config: unknown key " + key);
  }
  config.validate();
  return config;
}

void checkpoint_save(const ModelParams& params, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  const std::string config_text = config_to_text(params.config);
  put_u64(out, config_text.size());
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

  auto& mutable_params = const_cast<ModelParams&>(params);
  for (const TensorRef& ref : tensor_refs(mutable_params)) {
    put_u32(out, static_cast<std::uint32_t>(ref.name.size()));
    out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
    put_u32(out, static_cast<std::uint32_t>(ref.dims.size()));
    for (std::size_t d : ref.dims) put_u64(out, d);
    for (double v : *ref.values) put_f64(out, v);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

ModelParams checkpoint_load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic bytes");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    std::ostringstream msg;
    msg << "checkpoint: unsupported version " << version;
    throw FormatError(msg.str());
  }
  const std::uint64_t config_len = get_u64(in);
  std::string config_text(config_len, '\0');
  if (!in.read(config_text.data(), static_cast<std::streamsize>(config_len)))
    truncated();

  ModelParams params = zeros_like(config_from_text(config_text));

  std::vector<TensorRef> refs = tensor_refs(params);
  std::vector<bool> filled(refs.size(), false);
  while (true) {
    in.peek();
    if (in.eof()) break;
    std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) truncated();
    const std::uint32_t rank = get_u32(in);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = static_cast<std::size_t>(get_u64(in));

    std::size_t which = refs.size();
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (refs[i].name == name) {
        which = i;
        break;
      }
    }
    if (which == refs.size())
      throw FormatError("checkpoint: unexpected tensor \"" + name + "\"");
    if (filled[which])
      throw FormatError("checkpoint: duplicate tensor \"" + name + "\"");
    if (dims != refs[which].dims)
      throw FormatError("checkpoint: tensor \"" + name +
                        "\" has unexpected dimensions");
    for (double& v : *refs[which].values) v = get_f64(in);
    filled[which] = true;
  }
  for (std::size_t i = 0; i < refs.size(); ++i)
    if (!filled[i])
      throw FormatError("checkpoint: missing tensor \"" + refs[i].name + "\"");
  return params;
}

void checkpoint_save(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  checkpoint_save(params, out);
  out.close();
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

ModelParams checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return checkpoint_load(in);
}

}  // namespace litefat::model
