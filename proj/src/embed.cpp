#include "litefat/embed.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "litefat/errors.hpp"
#include "litefat/rng.hpp"

namespace litefat::embed {

namespace {

std::string table_key(const std::string& clip_id, std::int64_t frame_index) {
  return clip_id + "\x1f" + std::to_string(frame_index);
}

}  // namespace

EmbeddingTable EmbeddingTable::load(std::istream& in) {
  EmbeddingTable out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    const auto fail = [&](const std::string& why) {
      throw FormatError("embedding file line " + std::to_string(line_no) +
                        ": " + why);
    };
    if (rec.is_discarded() || !rec.is_object()) fail("not a JSON object");
    for (const auto& item : rec.items()) {
      if (item.key() != "clip" && item.key() != "frame" && item.key() != "vec")
        fail("unknown field \"" + item.key() + "\"");
    }
    if (!rec.contains("clip") || !rec["clip"].is_string())
      fail("missing string field \"clip\"");
    if (!rec.contains("frame") || !rec["frame"].is_number_integer())
      fail("missing integer field \"frame\"");
    if (!rec.contains("vec") || !rec["vec"].is_array())
      fail("missing array field \"vec\"");
    std::vector<double> vec;
    vec.reserve(rec["vec"].size());
    for (const auto& v : rec["vec"]) {
      if (!v.is_number()) fail("non-numeric vector entry");
      vec.push_back(v.get<double>());
    }
    if (vec.empty()) fail("empty vector");
    if (out.dim_ == 0) {
      out.dim_ = vec.size();
    } else if (vec.size() != out.dim_) {
      std::ostringstream msg;
      msg << "embedding file line " << line_no << ": dimension "
          << vec.size() << " differs from earlier records (" << out.dim_
          << ")";
      throw FormatError(msg.str());
    }
    const std::string key =
        table_key(rec["clip"].get<std::string>(), rec["frame"].get<std::int64_t>());
    if (!out.table_.emplace(key, std::move(vec)).second)
      fail("duplicate (clip, frame) record");
  }
  return out;
}

EmbeddingTable EmbeddingTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  return load(in);
}

const std::vector<double>& EmbeddingTable::lookup(
    const std::string& clip_id, std::int64_t frame_index) const {
  const auto it = table_.find(table_key(clip_id, frame_index));
  if (it == table_.end()) {
    throw LookupError("no embedding for (" + clip_id + ", " +
                      std::to_string(frame_index) + ")");
  }
  return it->second;
}

std::string serialize_embedding(const FrameEmbedding& e) {
  nlohmann::ordered_json rec;
  rec["clip"] = e.clip_id;
  rec["frame"] = e.frame_index;
  rec["vec"] = e.vec;
  return rec.dump();
}

std::vector<double> synthetic_embedding(const numkit::DenseMatrix& points,
                                        std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InputError("synthetic_embedding: dimension must be >= 1");
  // Projection scale keeps unit-range landmark inputs out of tanh
  // saturation.
  constexpr double kScale = 1.0 / 8.0;
  const std::size_t flat = points.size();
  std::vector<double> out(dim, 0.0);
  Rng rng = Rng::substream(seed, 0x50524f4a);  // projection stream
  for (std::size_t j = 0; j < dim; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < flat; ++i)
      acc += rng.normal() * kScale * points.data[i];
    out[j] = std::tanh(acc);
  }
  return out;
}

Provider Provider::make(const ProviderSpec& spec) {
  Provider p;
  p.spec_ = spec;
  if (spec.dim == 0) throw InputError("embedding provider: dimension must be >= 1");
  if (spec.kind == ProviderKind::kFile) {
    p.table_ = EmbeddingTable::load_file(spec.path);
    if (p.table_.dim() != 0 && p.table_.dim() != spec.dim) {
      std::ostringstream msg;
      msg << "embedding file " << spec.path << " has dimension "
          << p.table_.dim() << ", expected " << spec.dim;
      throw FormatError(msg.str());
    }
  }
  return p;
}

std::vector<double> Provider::get(const std::string& clip_id,
                                  std::int64_t frame_index,
                                  const numkit::DenseMatrix& points) const {
  switch (spec_.kind) {
    case ProviderKind::kFile:
      return table_.lookup(clip_id, frame_index);
    case ProviderKind::kSynthetic:
      return synthetic_embedding(points, spec_.dim, spec_.seed);
    case ProviderKind::kConstant:
      return std::vector<double>(spec_.dim, spec_.value);
  }
  throw StateError("embedding provider: unknown kind");
}

}  // namespace litefat::embed
