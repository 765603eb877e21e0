#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "litefat/numkit.hpp"

namespace litefat::ingest {

inline constexpr std::size_t kLandmarkCount = 68;
inline constexpr std::size_t kPointFeatures = 3;  // (X, Y, confidence)

// Mouth landmark rows in the 68-point layout.
inline constexpr std::size_t kMouthBegin = 48;
inline constexpr std::size_t kMouthEnd = 68;

struct LandmarkFrame {
  std::string clip_id;
  std::int64_t frame_index = 0;
  bool detected = true;
  numkit::DenseMatrix points;  // 68 x 3
  std::optional<std::string> label;
};

// Fixed-length window of S frames plus their embeddings and a class index.
struct ClipSample {
  std::string clip_id;
  std::vector<LandmarkFrame> frames;
  std::vector<std::vector<double>> embeddings;
  int label = -1;
};

struct DatasetSplit {
  std::vector<ClipSample> train;
  std::vector<ClipSample> validation;
  std::vector<ClipSample> test;
  std::vector<std::string> class_names;
};

// One full clip before key-frame selection.
struct Clip {
  std::string clip_id;
  std::optional<std::string> label;
  std::vector<LandmarkFrame> frames;
};

struct ClipSplit {
  std::vector<Clip> train;
  std::vector<Clip> validation;
  std::vector<Clip> test;
  std::vector<std::string> class_names;
};

// Parses one newline-delimited JSON record per frame. Returns frames sorted
// by (clip_id, frame_index); undetected frames already carry the all-ones
// fallback matrix. Malformed lines raise FormatError naming the line.
std::vector<LandmarkFrame> parse_landmark_stream(std::istream& in);

LandmarkFrame parse_landmark_record(const std::string& line,
                                    std::size_t line_no);

std::string serialize_landmark_frame(const LandmarkFrame& frame);

// Undetected frames get the all-ones coordinate matrix; detected frames pass
// through untouched. Idempotent.
LandmarkFrame apply_missing_face_fallback(const LandmarkFrame& frame);

// Uniform temporal subsampling to exactly S frames: index round(i*(L-1)/(S-1))
// for L >= S, last-frame repetition for L < S.
std::vector<LandmarkFrame> select_key_frames(
    const std::vector<LandmarkFrame>& clip_frames, std::size_t frames_out);

// Groups a sorted frame list into clips; validates per-clip label agreement.
std::vector<Clip> group_clips(std::vector<LandmarkFrame> frames);

using EmbedFn = std::function<std::vector<double>(const LandmarkFrame&)>;

// Windows each clip to S key frames and attaches embeddings and label index.
std::vector<ClipSample> build_samples(const std::vector<Clip>& clips,
                                      std::size_t frames_per_sample,
                                      const EmbedFn& embed,
                                      const std::vector<std::string>& class_names);

std::vector<std::string> synth_class_names(std::size_t num_classes);

// Deterministic synthetic landmark clips with per-class motion signatures,
// split 70/15/15 by clip (integer floor rule, remainder to test).
ClipSplit synth_clip_split(std::uint64_t seed, std::size_t clips_per_class,
                           std::size_t num_classes);

// Full synthetic dataset including per-frame synthetic embeddings.
DatasetSplit synth_dataset(std::uint64_t seed, std::size_t clips_per_class,
                           std::size_t num_classes,
                           std::size_t frames_per_sample,
                           std::size_t embed_dim = 64);

}  // namespace litefat::ingest
