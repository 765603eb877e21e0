#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "litefat/numkit.hpp"

namespace litefat::embed {

// One frame's feature vector, as read from or written to an embedding file.
struct FrameEmbedding {
  std::string clip_id;
  std::int64_t frame_index = 0;
  std::vector<double> vec;
};

// File-backed embedding collection, indexed by (clip, frame).
class EmbeddingTable {
 public:
  // Reads newline-delimited records; every record must share one dimension.
  static EmbeddingTable load(std::istream& in);
  static EmbeddingTable load_file(const std::string& path);

  // Throws LookupError naming the key when the pair is unknown.
  const std::vector<double>& lookup(const std::string& clip_id,
                                    std::int64_t frame_index) const;

  std::size_t size() const { return table_.size(); }
  std::size_t dim() const { return dim_; }

 private:
  std::unordered_map<std::string, std::vector<double>> table_;
  std::size_t dim_ = 0;
};

std::string serialize_embedding(const FrameEmbedding& e);

// Deterministic stand-in for a per-frame CNN feature vector: a fixed seeded
// random projection of the flattened points matrix, squashed by tanh into
// (-1, 1). Depends only on (points, dim, seed).
std::vector<double> synthetic_embedding(const numkit::DenseMatrix& points,
                                        std::size_t dim, std::uint64_t seed);

enum class ProviderKind { kFile, kSynthetic, kConstant };

struct ProviderSpec {
  ProviderKind kind = ProviderKind::kSynthetic;
  std::size_t dim = 64;
  std::string path;          // kFile
  std::uint64_t seed = 0;    // kSynthetic
  double value = 1.0;        // kConstant
};

// Total embedding source: every requested frame yields a vector or a typed
// lookup error, never a silent default.
class Provider {
 public:
  static Provider make(const ProviderSpec& spec);

  std::vector<double> get(const std::string& clip_id, std::int64_t frame_index,
                          const numkit::DenseMatrix& points) const;

  const ProviderSpec& spec() const { return spec_; }

 private:
  ProviderSpec spec_;
  EmbeddingTable table_;  // populated for kFile
};

}  // namespace litefat::embed
