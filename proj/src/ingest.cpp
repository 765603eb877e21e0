#include "litefat/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "litefat/embed.hpp"
#include "litefat/errors.hpp"
#include "litefat/rng.hpp"

namespace litefat::ingest {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail_line(std::size_t line_no, const std::string& why) {
  throw FormatError("landmark stream line " + std::to_string(line_no) + ": " +
                    why);
}

}  // namespace

LandmarkFrame parse_landmark_record(const std::string& line,
                                    std::size_t line_no) {
  nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object())
    fail_line(line_no, "not a JSON object");
  for (const auto& item : rec.items()) {
    if (item.key() != "clip" && item.key() != "frame" &&
        item.key() != "detected" && item.key() != "label" &&
        item.key() != "points")
      fail_line(line_no, "unknown field \"" + item.key() + "\"");
  }
  if (!rec.contains("clip") || !rec["clip"].is_string())
    fail_line(line_no, "missing string field \"clip\"");
  if (!rec.contains("frame") || !rec["frame"].is_number_integer())
    fail_line(line_no, "missing integer field \"frame\"");
  if (!rec.contains("detected") || !rec["detected"].is_boolean())
    fail_line(line_no, "missing boolean field \"detected\"");
  if (!rec.contains("label") ||
      !(rec["label"].is_string() || rec["label"].is_null()))
    fail_line(line_no, "field \"label\" must be a string or null");
  if (!rec.contains("points") || !rec["points"].is_array())
    fail_line(line_no, "missing array field \"points\"");

  const auto& pts = rec["points"];
  if (pts.size() != kLandmarkCount) {
    std::ostringstream msg;
    msg << "expected " << kLandmarkCount << " points, got " << pts.size();
    fail_line(line_no, msg.str());
  }

  LandmarkFrame frame;
  frame.clip_id = rec["clip"].get<std::string>();
  frame.frame_index = rec["frame"].get<std::int64_t>();
  frame.detected = rec["detected"].get<bool>();
  if (rec["label"].is_string()) frame.label = rec["label"].get<std::string>();
  frame.points = numkit::DenseMatrix(kLandmarkCount, kPointFeatures);
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    const auto& p = pts[i];
    if (!p.is_array() || p.size() != kPointFeatures)
      fail_line(line_no, "point " + std::to_string(i) +
                             " is not an [x, y, c] triple");
    for (std::size_t j = 0; j < kPointFeatures; ++j) {
      if (!p[j].is_number())
        fail_line(line_no,
                  "non-numeric coordinate in point " + std::to_string(i));
      frame.points.at(i, j) = p[j].get<double>();
    }
  }
  if (frame.frame_index < 0) fail_line(line_no, "negative frame index");
  return apply_missing_face_fallback(frame);
}

std::vector<LandmarkFrame> parse_landmark_stream(std::istream& in) {
  std::vector<LandmarkFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LandmarkFrame frame = parse_landmark_record(line, line_no);
    const auto key = std::make_pair(frame.clip_id, frame.frame_index);
    if (!seen.emplace(key, line_no).second) {
      std::ostringstream msg;
      msg << "duplicate record for (" << frame.clip_id << ", "
          << frame.frame_index << ")";
      fail_line(line_no, msg.str());
    }
    frames.push_back(std::move(frame));
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const LandmarkFrame& a, const LandmarkFrame& b) {
                     if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
                     return a.frame_index < b.frame_index;
                   });
  return frames;
}

std::string serialize_landmark_frame(const LandmarkFrame& frame) {
  nlohmann::ordered_json rec;
  rec["clip"] = frame.clip_id;
  rec["frame"] = frame.frame_index;
  rec["detected"] = frame.detected;
  if (frame.label) {
    rec["label"] = *frame.label;
  } else {
    rec["label"] = nullptr;
  }
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < frame.points.rows; ++i) {
    pts.push_back({frame.points.at(i, 0), frame.points.at(i, 1),
                   frame.points.at(i, 2)});
  }
  rec["points"] = std::move(pts);
  return rec.dump();
}

LandmarkFrame apply_missing_face_fallback(const LandmarkFrame& frame) {
  if (frame.detected) return frame;
  LandmarkFrame out = frame;
  for (double& v : out.points.data) v = 1.0;
  return out;
}

std::vector<LandmarkFrame> select_key_frames(
    const std::vector<LandmarkFrame>& clip_frames, std::size_t frames_out) {
  if (clip_frames.empty()) throw InputError("select_key_frames: empty clip");
  if (frames_out == 0)
    throw InputError("select_key_frames: target count must be >= 1");
  const std::size_t len = clip_frames.size();
  std::vector<LandmarkFrame> out;
  out.reserve(frames_out);
  if (len >= frames_out) {
    if (frames_out == 1) {
      out.push_back(clip_frames.front());
      return out;
    }
    for (std::size_t i = 0; i < frames_out; ++i) {
      const auto idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(len - 1) /
                       static_cast<double>(frames_out - 1)));
      out.push_back(clip_frames[idx]);
    }
  } else {
    out = clip_frames;
    while (out.size() < frames_out) out.push_back(clip_frames.back());
  }
  return out;
}

std::vector<Clip> group_clips(std::vector<LandmarkFrame> frames) {
  std::vector<Clip> clips;
  for (auto& frame : frames) {
    if (clips.empty() || clips.back().clip_id != frame.clip_id) {
      clips.push_back(Clip{frame.clip_id, frame.label, {}});
    } else {
      Clip& clip = clips.back();
      if (!clip.frames.empty() &&
          frame.frame_index <= clip.frames.back().frame_index)
        throw FormatError("clip " + clip.clip_id +
                          ": frame indices are not strictly increasing");
      if (clip.label != frame.label)
        throw FormatError("clip " + clip.clip_id +
                          ": frames disagree on the label");
    }
    clips.back().frames.push_back(std::move(frame));
  }
  return clips;
}

std::vector<ClipSample> build_samples(
    const std::vector<Clip>& clips, std::size_t frames_per_sample,
    const EmbedFn& embed, const std::vector<std::string>& class_names) {
  std::vector<ClipSample> samples;
  samples.reserve(clips.size());
  for (const Clip& clip : clips) {
    if (!clip.label)
      throw InputError("clip " + clip.clip_id + " has no label");
    const auto it =
        std::find(class_names.begin(), class_names.end(), *clip.label);
    if (it == class_names.end())
      throw InputError("clip " + clip.clip_id + ": unknown class \"" +
                       *clip.label + "\"");
    ClipSample sample;
    sample.clip_id = clip.clip_id;
    sample.label = static_cast<int>(it - class_names.begin());
    sample.frames = select_key_frames(clip.frames, frames_per_sample);
    sample.embeddings.reserve(frames_per_sample);
    for (const LandmarkFrame& frame : sample.frames)
      sample.embeddings.push_back(embed(frame));
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<std::string> synth_class_names(std::size_t num_classes) {
  if (num_classes == 2) return {"normal", "yawning"};
  if (num_classes == 3) return {"normal", "talking", "yawning"};
  throw InputError("synthetic dataset supports 2 or 3 classes");
}

namespace {

// Canonical 68-point face in the unit square, y growing downward. Unit
// coordinates keep the all-ones fallback matrix on the same scale as real
// frames. open widens the mouth vertically; drift shifts the face in x.
numkit::DenseMatrix face_points(double open, double drift, double cx,
                                double cy, double scale, Rng& rng,
                                double jitter) {
  numkit::DenseMatrix pts(kLandmarkCount, kPointFeatures);
  std::size_t row = 0;
  const auto put = [&](double x, double y) {
    pts.at(row, 0) = cx + scale * (x - 128.0) / 256.0 + drift +
                     rng.normal() * jitter;
    pts.at(row, 1) = cy + scale * (y - 128.0) / 256.0 + rng.normal() * jitter;
    pts.at(row, 2) = 0.75 + 0.25 * rng.uniform();
    ++row;
  };
  for (int i = 0; i <= 16; ++i) {  // jaw
    const double phi = kPi * i / 16.0;
    put(128.0 - 50.0 * std::cos(phi), 120.0 + 65.0 * std::sin(phi));
  }
  for (int i = 0; i < 5; ++i)  // brows
    put(88.0 + 6.0 * i, 103.0 - 3.0 * std::sin(kPi * i / 4.0));
  for (int i = 0; i < 5; ++i)
    put(138.0 + 6.0 * i, 103.0 - 3.0 * std::sin(kPi * i / 4.0));
  for (int i = 0; i < 4; ++i) put(128.0, 112.0 + 8.0 * i);  // nose bridge
  for (int i = 0; i < 5; ++i)                               // nose base
    put(116.0 + 6.0 * i, 148.0 + 2.0 * std::sin(kPi * i / 4.0));
  for (int i = 0; i < 6; ++i) {  // eyes
    const double a = 2.0 * kPi * i / 6.0;
    put(103.0 + 9.0 * std::cos(a), 118.0 + 4.0 * std::sin(a));
  }
  for (int i = 0; i < 6; ++i) {
    const double a = 2.0 * kPi * i / 6.0;
    put(153.0 + 9.0 * std::cos(a), 118.0 + 4.0 * std::sin(a));
  }
  for (int i = 0; i < 12; ++i) {  // outer lip
    const double a = kPi + 2.0 * kPi * i / 12.0;
    put(128.0 + 22.0 * std::cos(a), 162.0 + (6.0 + 0.5 * open) * std::sin(a));
  }
  for (int i = 0; i < 8; ++i) {  // inner lip
    const double a = kPi + 2.0 * kPi * i / 8.0;
    put(128.0 + 14.0 * std::cos(a), 162.0 + (2.0 + 0.45 * open) * std::sin(a));
  }
  return pts;
}

Clip synth_clip(std::uint64_t seed, std::uint64_t ordinal,
                const std::string& class_name, const std::string& clip_id) {
  Rng rng = Rng::substream(seed, ordinal);
  const auto length = static_cast<std::size_t>(30 + rng.bounded(21));
  const double cx = 0.5 + rng.uniform(-8.0, 8.0) / 256.0;
  const double cy = 0.5 + rng.uniform(-8.0, 8.0) / 256.0;
  const double scale = rng.uniform(0.95, 1.05);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double drift_phase = rng.uniform(0.0, 2.0 * kPi);
  const double slow_period = rng.uniform(35.0, 55.0);
  const double fast_period = rng.uniform(3.0, 6.0);
  const double drift_period = rng.uniform(25.0, 40.0);

  Clip clip;
  clip.clip_id = clip_id;
  clip.label = class_name;
  clip.frames.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    double open = 1.0;
    double drift = 0.0;
    if (class_name == "yawning") {
      open = 2.0 + 14.0 * (0.5 - 0.5 * std::cos(2.0 * kPi * t / slow_period +
                                                 phase));
    } else if (class_name == "talking") {
      open = 2.0 + 5.0 * (0.5 - 0.5 * std::cos(2.0 * kPi * t / fast_period +
                                                phase));
      drift = (10.0 / 256.0) * std::sin(2.0 * kPi * t / drift_period +
                                        drift_phase);
    }
    LandmarkFrame frame;
    frame.clip_id = clip_id;
    frame.frame_index = static_cast<std::int64_t>(t);
    frame.detected = rng.uniform() >= 0.02;
    frame.label = class_name;
    frame.points = face_points(open, drift, cx, cy, scale, rng, 1.0 / 256.0);
    clip.frames.push_back(apply_missing_face_fallback(frame));
  }
  return clip;
}

}  // namespace

ClipSplit synth_clip_split(std::uint64_t seed, std::size_t clips_per_class,
                           std::size_t num_classes) {
  if (clips_per_class < 3)
    throw InputError("synthetic dataset needs at least 3 clips per class");
  ClipSplit split;
  split.class_names = synth_class_names(num_classes);

  // Interleave classes so the 70/15/15 cut stays roughly balanced.
  std::vector<Clip> clips;
  clips.reserve(clips_per_class * num_classes);
  std::uint64_t ordinal = 0;
  for (std::size_t i = 0; i < clips_per_class; ++i) {
    for (std::size_t m = 0; m < num_classes; ++m) {
      std::ostringstream id;
      id << split.class_names[m] << "_"
         << std::setw(3) << std::setfill('0') << i;
      clips.push_back(
          synth_clip(seed, ordinal++, split.class_names[m], id.str()));
    }
  }

  const std::size_t total = clips.size();
  const std::size_t n_train = total * 7 / 10;
  const std::size_t n_val = total * 15 / 100;
  for (std::size_t i = 0; i < total; ++i) {
    if (i < n_train) {
      split.train.push_back(std::move(clips[i]));
    } else if (i < n_train + n_val) {
      split.validation.push_back(std::move(clips[i]));
    } else {
      split.test.push_back(std::move(clips[i]));
    }
  }
  return split;
}

DatasetSplit synth_dataset(std::uint64_t seed, std::size_t clips_per_class,
                           std::size_t num_classes,
                           std::size_t frames_per_sample,
                           std::size_t embed_dim) {
  const ClipSplit clips = synth_clip_split(seed, clips_per_class, num_classes);
  const EmbedFn embed = [&](const LandmarkFrame& frame) {
    return embed::synthetic_embedding(frame.points, embed_dim, seed);
  };
  DatasetSplit out;
  out.class_names = clips.class_names;
  out.train = build_samples(clips.train, frames_per_sample, embed,
                            out.class_names);
  out.validation = build_samples(clips.validation, frames_per_sample, embed,
                                 out.class_names);
  out.test = build_samples(clips.test, frames_per_sample, embed,
                           out.class_names);
  return out;
}

}  // namespace litefat::ingest
