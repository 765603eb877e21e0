#include <doctest.h>

#include <cmath>
#include <sstream>

#include "litefat/embed.hpp"
#include "litefat/errors.hpp"
#include "litefat/rng.hpp"

using namespace litefat;
using namespace litefat::embed;

TEST_SUITE("embed") {

TEST_CASE("embedding table loads and looks up by (clip, frame)") {
  Rng rng(41);
  std::ostringstream buf;
  std::vector<FrameEmbedding> written;
  for (int i = 0; i < 10; ++i) {
    FrameEmbedding e{"clip" + std::to_string(i % 3), i, {}};
    for (int j = 0; j < 64; ++j) e.vec.push_back(rng.uniform(-1.0, 1.0));
    buf << serialize_embedding(e) << "\n";
    written.push_back(std::move(e));
  }
  std::stringstream in(buf.str());
  const EmbeddingTable table = EmbeddingTable::load(in);
  CHECK(table.size() == 10);
  CHECK(table.dim() == 64);
  for (const auto& e : written)
    CHECK(table.lookup(e.clip_id, e.frame_index) == e.vec);
}

TEST_CASE("inconsistent dimensions are a format error") {
  std::stringstream in(
      R"({"clip":"a","frame":0,"vec":[1.0,2.0]})" "\n"
      R"({"clip":"a","frame":1,"vec":[1.0,2.0,3.0]})" "\n");
  CHECK_THROWS_AS(EmbeddingTable::load(in), FormatError);
}

TEST_CASE("missing lookup names the key") {
  std::stringstream in(R"({"clip":"a","frame":0,"vec":[1.0]})" "\n");
  const EmbeddingTable table = EmbeddingTable::load(in);
  CHECK_THROWS_WITH_AS(table.lookup("b", 4), "no embedding for (b, 4)",
                       LookupError);
}

TEST_CASE("write-then-read round-trips to the last bit") {
  Rng rng(42);
  FrameEmbedding e{"c", 17, {}};
  for (int j = 0; j < 32; ++j) e.vec.push_back(rng.normal() * 1e3);
  std::stringstream in(serialize_embedding(e) + "\n");
  const EmbeddingTable table = EmbeddingTable::load(in);
  CHECK(table.lookup("c", 17) == e.vec);
}

TEST_CASE("synthetic embedding is a pure function of (points, dim, seed)") {
  numkit::DenseMatrix pts(68, 3);
  Rng rng(43);
  for (double& v : pts.data) v = rng.uniform(0.0, 256.0);
  const auto a = synthetic_embedding(pts, 16, 9);
  const auto b = synthetic_embedding(pts, 16, 9);
  CHECK(a == b);
  const auto c = synthetic_embedding(pts, 16, 10);
  CHECK(a != c);
}

TEST_CASE("all undetected frames share one embedding") {
  numkit::DenseMatrix ones(68, 3, 1.0);
  const auto a = synthetic_embedding(ones, 8, 5);
  const auto b = synthetic_embedding(ones, 8, 5);
  CHECK(a == b);
  for (double v : a) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("synthetic embedding stays in (-1, 1)") {
  Rng rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    numkit::DenseMatrix pts(68, 3);
    for (double& v : pts.data) v = rng.uniform(0.0, 256.0);
    for (double v : synthetic_embedding(pts, 12, rep)) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("small landmark perturbations move the embedding very little") {
  Rng rng(45);
  numkit::DenseMatrix pts(68, 3);
  for (double& v : pts.data) v = rng.uniform(0.0, 256.0);
  numkit::DenseMatrix bumped = pts;
  for (double& v : bumped.data) v += 1e-6;
  const auto a = synthetic_embedding(pts, 32, 6);
  const auto b = synthetic_embedding(bumped, 32, 6);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a[i] - b[i]) < 1e-3);
}

TEST_CASE("providers are total or raise typed errors") {
  numkit::DenseMatrix pts(68, 3, 1.0);

  ProviderSpec constant{ProviderKind::kConstant, 4, "", 0, 2.5};
  const Provider c = Provider::make(constant);
  CHECK(c.get("x", 0, pts) == std::vector<double>{2.5, 2.5, 2.5, 2.5});

  ProviderSpec synth{ProviderKind::kSynthetic, 6, "", 11, 0.0};
  const Provider s = Provider::make(synth);
  CHECK(s.get("x", 0, pts).size() == 6);

  ProviderSpec missing{ProviderKind::kFile, 4, "/nonexistent/path.ndjson", 0,
                       0.0};
  CHECK_THROWS_AS(Provider::make(missing), IoError);
}

}  // TEST_SUITE
