#include <doctest.h>

#include <cmath>
#include <sstream>

#include "litefat/errors.hpp"
#include "litefat/ingest.hpp"
#include "litefat/rng.hpp"

using namespace litefat;
using namespace litefat::ingest;

namespace {

LandmarkFrame make_frame(const std::string& clip, std::int64_t index,
                         double fill = 2.0) {
  LandmarkFrame f;
  f.clip_id = clip;
  f.frame_index = index;
  f.detected = true;
  f.points = numkit::DenseMatrix(kLandmarkCount, kPointFeatures, fill);
  f.label = "normal";
  return f;
}

std::string frame_line(const std::string& clip, std::int64_t index) {
  return serialize_landmark_frame(make_frame(clip, index));
}

// Per-frame vertical mouth spread, then its variance over the clip.
double mouth_spread_variance(const Clip& clip) {
  std::vector<double> spread;
  for (const auto& f : clip.frames) {
    double lo = f.points.at(kMouthBegin, 1), hi = lo;
    for (std::size_t i = kMouthBegin; i < kMouthEnd; ++i) {
      lo = std::min(lo, f.points.at(i, 1));
      hi = std::max(hi, f.points.at(i, 1));
    }
    spread.push_back(hi - lo);
  }
  double mean = 0.0;
  for (double s : spread) mean += s;
  mean /= static_cast<double>(spread.size());
  double var = 0.0;
  for (double s : spread) var += (s - mean) * (s - mean);
  return var / static_cast<double>(spread.size());
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("well-formed record parses to a detected frame") {
  const LandmarkFrame f = parse_landmark_record(frame_line("a", 0), 1);
  CHECK(f.clip_id == "a");
  CHECK(f.frame_index == 0);
  CHECK(f.detected);
  CHECK(f.points.rows == 68);
  CHECK(f.points.cols == 3);
  CHECK(f.label == "normal");
}

TEST_CASE("record with 67 points names the line") {
  std::string line = frame_line("a", 0);
  // drop the last [x,y,c] triple
  const auto cut = line.rfind(",[");
  line = line.substr(0, cut) + "]}";
  CHECK_THROWS_WITH_AS(parse_landmark_record(line, 12),
                       "landmark stream line 12: expected 68 points, got 67",
                       FormatError);
}

TEST_CASE("non-numeric coordinate and unknown fields are rejected") {
  std::string line = frame_line("a", 0);
  std::string bad = line;
  bad.replace(bad.find("[2.0,2.0,2.0]"), 13, "[2.0,\"x\",2.0]");
  CHECK_THROWS_AS(parse_landmark_record(bad, 3), FormatError);

  std::string extra = line;
  extra.insert(1, "\"bogus\":1,");
  CHECK_THROWS_AS(parse_landmark_record(extra, 4), FormatError);
}

TEST_CASE("duplicate (clip, frame) pairs are a format error") {
  std::stringstream in(frame_line("a", 0) + "\n" + frame_line("a", 0) + "\n");
  CHECK_THROWS_AS(parse_landmark_stream(in), FormatError);
}

TEST_CASE("stream of 3 clips x 40 frames comes back in (clip, index) order") {
  std::ostringstream buf;
  // write interleaved and out of order on purpose
  for (int t = 39; t >= 0; --t)
    for (const char* c : {"c2", "c0", "c1"}) buf << frame_line(c, t) << "\n";
  std::stringstream in(buf.str());
  const auto frames = parse_landmark_stream(in);
  REQUIRE(frames.size() == 120);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const bool ordered =
        frames[i - 1].clip_id < frames[i].clip_id ||
        (frames[i - 1].clip_id == frames[i].clip_id &&
         frames[i - 1].frame_index < frames[i].frame_index);
    CHECK(ordered);
  }
}

TEST_CASE("missing-face fallback sets every element to one") {
  LandmarkFrame f = make_frame("a", 0, 7.5);
  f.detected = false;
  const LandmarkFrame fixed = apply_missing_face_fallback(f);
  for (double v : fixed.points.data) CHECK(v == 1.0);

  SUBCASE("detected frames pass through bit-identically") {
    const LandmarkFrame g = make_frame("a", 1, 3.25);
    const LandmarkFrame same = apply_missing_face_fallback(g);
    CHECK(same.points == g.points);
  }
  SUBCASE("applying twice equals applying once") {
    const LandmarkFrame twice = apply_missing_face_fallback(fixed);
    CHECK(twice.points == fixed.points);
  }
}

TEST_CASE("parse-serialize-parse round-trips") {
  Rng rng(31);
  std::ostringstream buf;
  for (int t = 0; t < 5; ++t) {
    LandmarkFrame f = make_frame("clip", t);
    for (double& v : f.points.data) v = rng.uniform(-200.0, 200.0);
    if (t == 2) f.label.reset();
    buf << serialize_landmark_frame(f) << "\n";
  }
  std::stringstream in1(buf.str());
  const auto first = parse_landmark_stream(in1);
  std::ostringstream buf2;
  for (const auto& f : first) buf2 << serialize_landmark_frame(f) << "\n";
  std::stringstream in2(buf2.str());
  const auto second = parse_landmark_stream(in2);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].clip_id == second[i].clip_id);
    CHECK(first[i].frame_index == second[i].frame_index);
    CHECK(first[i].detected == second[i].detected);
    CHECK(first[i].label == second[i].label);
    CHECK(first[i].points == second[i].points);
  }
}

TEST_CASE("key-frame selection") {
  std::vector<LandmarkFrame> clip;
  for (int t = 0; t < 16; ++t) clip.push_back(make_frame("a", t));

  SUBCASE("L == S is the identity") {
    const auto out = select_key_frames(clip, 16);
    REQUIRE(out.size() == 16);
    for (int t = 0; t < 16; ++t) CHECK(out[t].frame_index == t);
  }
  SUBCASE("L = 31, S = 16 picks every other frame") {
    std::vector<LandmarkFrame> longer;
    for (int t = 0; t < 31; ++t) longer.push_back(make_frame("a", t));
    const auto out = select_key_frames(longer, 16);
    REQUIRE(out.size() == 16);
    for (int i = 0; i < 16; ++i) CHECK(out[i].frame_index == 2 * i);
  }
  SUBCASE("short clips pad by repeating the last frame") {
    std::vector<LandmarkFrame> tiny(clip.begin(), clip.begin() + 5);
    const auto out = select_key_frames(tiny, 16);
    REQUIRE(out.size() == 16);
    for (int i = 0; i < 5; ++i) CHECK(out[i].frame_index == i);
    for (int i = 5; i < 16; ++i) CHECK(out[i].frame_index == 4);
  }
  SUBCASE("empty clip is an input error") {
    CHECK_THROWS_AS(select_key_frames({}, 16), InputError);
  }
}

TEST_CASE("synthetic dataset is deterministic in the seed") {
  const DatasetSplit a = synth_dataset(7, 3, 3, 8, 16);
  const DatasetSplit b = synth_dataset(7, 3, 3, 8, 16);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].clip_id == b.train[i].clip_id);
    CHECK(a.train[i].label == b.train[i].label);
    for (std::size_t t = 0; t < a.train[i].frames.size(); ++t) {
      CHECK(a.train[i].frames[t].points == b.train[i].frames[t].points);
      CHECK(a.train[i].embeddings[t] == b.train[i].embeddings[t]);
    }
  }
  const DatasetSplit c = synth_dataset(8, 3, 3, 8, 16);
  CHECK(a.train[0].frames[0].points != c.train[0].frames[0].points);
}

TEST_CASE("split sizes follow the floor rule with remainder to test") {
  const ClipSplit s = synth_clip_split(7, 10, 3);
  CHECK(s.train.size() == 21);
  CHECK(s.validation.size() == 4);
  CHECK(s.test.size() == 5);

  SUBCASE("splits are disjoint by clip id") {
    for (const auto& a : s.train)
      for (const auto& b : s.test) CHECK(a.clip_id != b.clip_id);
  }
}

TEST_CASE("every sample leaving the module has exactly S frames") {
  const DatasetSplit d = synth_dataset(3, 4, 2, 16, 8);
  for (const auto* split : {&d.train, &d.validation, &d.test})
    for (const auto& sample : *split) {
      CHECK(sample.frames.size() == 16);
      CHECK(sample.embeddings.size() == 16);
    }
}

TEST_CASE("yawning clips have higher mouth-spread variance than normal") {
  const ClipSplit s = synth_clip_split(11, 6, 3);
  double yawn = 0.0, normal = 0.0;
  int n_yawn = 0, n_normal = 0;
  for (const auto* split : {&s.train, &s.validation, &s.test})
    for (const auto& clip : *split) {
      if (clip.label == "yawning") {
        yawn += mouth_spread_variance(clip);
        ++n_yawn;
      } else if (clip.label == "normal") {
        normal += mouth_spread_variance(clip);
        ++n_normal;
      }
    }
  REQUIRE(n_yawn > 0);
  REQUIRE(n_normal > 0);
  CHECK(yawn / n_yawn > normal / n_normal);
}

TEST_CASE("group_clips validates label agreement") {
  std::vector<LandmarkFrame> frames{make_frame("a", 0), make_frame("a", 1)};
  frames[1].label = "yawning";
  CHECK_THROWS_AS(group_clips(frames), FormatError);
}

}  // TEST_SUITE
