#include <doctest.h>

#include <cmath>

#include "litefat/errors.hpp"
#include "litefat/model.hpp"
#include "litefat/numkit.hpp"
#include "litefat/rng.hpp"
#include "oracles.hpp"

using namespace litefat;
using namespace litefat::model;
using numkit::DenseMatrix;
using numkit::SeqTensor;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.nodes = 5;
  cfg.landmark_features = 3;
  cfg.fused_dim = 4;
  cfg.adj_embed_dim = 2;
  cfg.residual_channels = 3;
  cfg.gcn_hidden = 3;
  cfg.classes = 3;
  cfg.frames_per_sample = 8;
  cfg.conv_taps = 2;
  cfg.dilations = {1, 2};
  return cfg;
}

Sample random_sample(const ModelConfig& cfg, Rng& rng) {
  Sample s;
  s.label = static_cast<int>(rng.bounded(cfg.classes));
  for (std::size_t t = 0; t < cfg.frames_per_sample; ++t) {
    DenseMatrix pts(cfg.nodes, cfg.landmark_features);
    for (double& v : pts.data) v = rng.uniform(-1.0, 1.0);
    s.points.push_back(std::move(pts));
    std::vector<double> e(cfg.fused_dim);
    for (double& v : e) v = rng.uniform(-1.0, 1.0);
    s.embeddings.push_back(std::move(e));
  }
  return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("fuse_features is the stated outer product") {
  DenseMatrix c(68, 3, 1.0);
  const std::vector<double> w{1.0, 0.0, 0.0};
  const std::vector<double> d{2.0, 3.0};
  const DenseMatrix x = fuse_features(c, w, d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    CHECK(x.at(i, 0) == 2.0);
    CHECK(x.at(i, 1) == 3.0);
  }

  SUBCASE("zero weights annihilate") {
    const DenseMatrix z = fuse_features(c, {0.0, 0.0, 0.0}, d);
    for (double v : z.data) CHECK(v == 0.0);
  }
  SUBCASE("random instance matches the element-wise oracle") {
    Rng rng(51);
    const DenseMatrix pts = oracles::random_matrix(rng, 4, 3);
    std::vector<double> rw{rng.uniform(), rng.uniform(), rng.uniform()};
    std::vector<double> rd{rng.uniform(), rng.uniform()};
    const DenseMatrix got = fuse_features(pts, rw, rd);
    const DenseMatrix want = oracles::fuse_ref(pts, rw, rd);
    CHECK(oracles::max_abs_diff(got.data, want.data) < 1e-12);
  }
  SUBCASE("every 2x2 minor vanishes") {
    Rng rng(52);
    const DenseMatrix pts = oracles::random_matrix(rng, 6, 3);
    std::vector<double> rw{0.3, -1.2, 0.8};
    std::vector<double> rd{1.1, -0.4, 0.9};
    const DenseMatrix x2 = fuse_features(pts, rw, rd);
    for (std::size_t i = 1; i < x2.rows; ++i)
      for (std::size_t j = 1; j < x2.cols; ++j) {
        const double minor = x2.at(0, 0) * x2.at(i, j) -
                             x2.at(0, j) * x2.at(i, 0);
        CHECK(std::abs(minor) < 1e-9);
      }
  }
  SUBCASE("shape mismatch raises") {
    CHECK_THROWS_AS(fuse_features(c, {1.0, 2.0}, d), ShapeError);
  }
}

TEST_CASE("adaptive_adjacency") {
  SUBCASE("zero factors give the uniform row") {
    DenseMatrix e1(4, 2), e2(4, 2);
    for (double& v : e2.data) v = 0.7;
    const DenseMatrix a = adaptive_adjacency(e1, e2);
    for (double v : a.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("hand-evaluated 2x2 case") {
    DenseMatrix e1(2, 1), e2(2, 1);
    e1.data = {1.0, 0.0};
    e2.data = {1.0, -1.0};
    const DenseMatrix a = adaptive_adjacency(e1, e2);
    const double e = std::exp(1.0);
    CHECK(a.at(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
    CHECK(a.at(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
    CHECK(a.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.at(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("rows always sum to one") {
    Rng rng(53);
    for (int rep = 0; rep < 30; ++rep) {
      const DenseMatrix e1 = oracles::random_matrix(rng, 6, 3, -2.0, 2.0);
      const DenseMatrix e2 = oracles::random_matrix(rng, 6, 3, -2.0, 2.0);
      const DenseMatrix a = adaptive_adjacency(e1, e2);
      for (std::size_t i = 0; i < a.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) sum += a.at(i, j);
        CHECK(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }
  SUBCASE("factor shape mismatch raises") {
    CHECK_THROWS_AS(adaptive_adjacency(DenseMatrix(3, 2), DenseMatrix(3, 3)),
                    ShapeError);
  }
}

TEST_CASE("gcn_block") {
  SUBCASE("uniform adjacency with constant rows keeps rows identical") {
    DenseMatrix a(3, 3, 1.0 / 3.0);
    DenseMatrix x(3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
      x.at(i, 0) = 0.4;
      x.at(i, 1) = -0.9;
    }
    Rng rng(54);
    const DenseMatrix w0 = oracles::random_matrix(rng, 2, 2);
    const DenseMatrix w1 = oracles::random_matrix(rng, 2, 2);
    const DenseMatrix z = gcn_block(x, a, w0, w1, false);
    for (std::size_t j = 0; j < z.cols; ++j) {
      CHECK(z.at(0, j) == doctest::Approx(z.at(1, j)).epsilon(1e-12));
      CHECK(z.at(0, j) == doctest::Approx(z.at(2, j)).epsilon(1e-12));
    }
  }
  SUBCASE("final block rows sum to one") {
    Rng rng(55);
    const DenseMatrix x = oracles::random_matrix(rng, 4, 3);
    DenseMatrix e1 = oracles::random_matrix(rng, 4, 2);
    DenseMatrix e2 = oracles::random_matrix(rng, 4, 2);
    const DenseMatrix a = adaptive_adjacency(e1, e2);
    const DenseMatrix w0 = oracles::random_matrix(rng, 3, 3);
    const DenseMatrix w1 = oracles::random_matrix(rng, 3, 2);
    const DenseMatrix z = gcn_block(x, a, w0, w1, true);
    for (std::size_t i = 0; i < z.rows; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < z.cols; ++j) sum += z.at(i, j);
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
  SUBCASE("random instance matches the propagation oracle") {
    Rng rng(56);
    for (int rep = 0; rep < 10; ++rep) {
      const DenseMatrix x = oracles::random_matrix(rng, 3, 2);
      const DenseMatrix a = oracles::random_matrix(rng, 3, 3, 0.0, 1.0);
      const DenseMatrix w0 = oracles::random_matrix(rng, 2, 2);
      const DenseMatrix w1 = oracles::random_matrix(rng, 2, 2);
      for (bool final : {false, true}) {
        const DenseMatrix got = gcn_block(x, a, w0, w1, final);
        const DenseMatrix want = oracles::gcn_ref(x, a, w0, w1, final);
        CHECK(oracles::max_abs_diff(got.data, want.data) < 1e-12);
      }
    }
  }
  SUBCASE("adjacency must be square and match the node count") {
    CHECK_THROWS_AS(gcn_block(DenseMatrix(3, 2), DenseMatrix(2, 2),
                              DenseMatrix(2, 2), DenseMatrix(2, 2), false),
                    ShapeError);
  }
}

TEST_CASE("gated_tcn") {
  Rng rng(57);
  const SeqTensor x = oracles::random_seq(rng, 2, 3, 8);

  SUBCASE("zero gate filter halves the tanh path") {
    const numkit::ConvFilter fa = oracles::random_filter(rng, 3, 2, 2, 1);
    numkit::ConvFilter fb(3, 2, 2, 1);  // all zeros
    const SeqTensor h = gated_tcn(x, fa, fb);
    const SeqTensor content = numkit::dilated_causal_conv(x, fa);
    for (std::size_t i = 0; i < h.data.size(); ++i)
      CHECK(h.data[i] ==
            doctest::Approx(0.5 * std::tanh(content.data[i])).epsilon(1e-12));
  }
  SUBCASE("zero content filter silences everything") {
    numkit::ConvFilter fa(3, 2, 2, 1);
    const numkit::ConvFilter fb = oracles::random_filter(rng, 3, 2, 2, 1);
    const SeqTensor h = gated_tcn(x, fa, fb);
    for (double v : h.data) CHECK(v == 0.0);
  }
  SUBCASE("output equals composing the primitive kernels and stays in (-1,1)") {
    const numkit::ConvFilter fa = oracles::random_filter(rng, 3, 2, 2, 2);
    numkit::ConvFilter fb = oracles::random_filter(rng, 3, 2, 2, 2);
    const SeqTensor h = gated_tcn(x, fa, fb);
    const SeqTensor ca = numkit::pointwise_activation(
        numkit::Activation::kTanh, numkit::dilated_causal_conv(x, fa));
    const SeqTensor cb = numkit::pointwise_activation(
        numkit::Activation::kSigmoid, numkit::dilated_causal_conv(x, fb));
    for (std::size_t i = 0; i < h.data.size(); ++i) {
      CHECK(h.data[i] == doctest::Approx(ca.data[i] * cb.data[i]).epsilon(1e-12));
      CHECK(std::abs(h.data[i]) < 1.0);
    }
  }
  SUBCASE("filters must agree on channels and dilation") {
    const numkit::ConvFilter fa = oracles::random_filter(rng, 3, 2, 2, 1);
    const numkit::ConvFilter fb = oracles::random_filter(rng, 3, 2, 2, 4);
    CHECK_THROWS_AS(gated_tcn(x, fa, fb), ShapeError);
  }
}

TEST_CASE("model_forward produces per-frame distributions") {
  const ModelConfig cfg = tiny_config();
  Rng rng(58);
  const Sample sample = random_sample(cfg, rng);
  const ModelParams params = init_params(cfg, 99);
  const ForwardResult out = model_forward(sample, params);
  REQUIRE(out.probs.rows == cfg.frames_per_sample);
  REQUIRE(out.probs.cols == cfg.classes);
  for (std::size_t t = 0; t < out.probs.rows; ++t) {
    double sum = 0.0;
    for (std::size_t m = 0; m < out.probs.cols; ++m) {
      sum += out.probs.at(t, m);
      CHECK(out.probs.at(t, m) > 0.0);
      CHECK(out.probs.at(t, m) < 1.0);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("future frames cannot influence earlier outputs") {
  const ModelConfig cfg = tiny_config();
  Rng rng(59);
  const Sample sample = random_sample(cfg, rng);
  const ModelParams params = init_params(cfg, 7);
  const ForwardResult base = model_forward(sample, params);
  for (std::size_t cut = 1; cut < cfg.frames_per_sample; ++cut) {
    Sample mutated = sample;
    for (std::size_t t = cut; t < cfg.frames_per_sample; ++t) {
      for (double& v : mutated.points[t].data) v += rng.uniform(0.5, 1.5);
      for (double& v : mutated.embeddings[t]) v += rng.uniform(0.5, 1.5);
    }
    const ForwardResult out = model_forward(mutated, params);
    for (std::size_t t = 0; t < cut; ++t)
      for (std::size_t m = 0; m < cfg.classes; ++m)
        CHECK(out.probs.at(t, m) == base.probs.at(t, m));
  }
}

TEST_CASE("zero output projection yields uniform predictions") {
  const ModelConfig cfg = tiny_config();
  Rng rng(60);
  const Sample sample = random_sample(cfg, rng);
  ModelParams params = init_params(cfg, 3);
  for (double& v : params.output_proj.weights) v = 0.0;
  for (double& v : params.output_proj.bias) v = 0.0;
  const ForwardResult out = model_forward(sample, params);
  for (double v : out.probs.data)
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("model_forward validates sample shape") {
  const ModelConfig cfg = tiny_config();
  Rng rng(61);
  Sample sample = random_sample(cfg, rng);
  sample.points.pop_back();
  const ModelParams params = init_params(cfg, 3);
  CHECK_THROWS_AS(model_forward(sample, params), ShapeError);
}

TEST_CASE("cross entropy anchors") {
  DenseMatrix perfect(4, 3);
  for (std::size_t t = 0; t < 4; ++t) perfect.at(t, 1) = 1.0;
  CHECK(cross_entropy_loss(perfect, 1) == 0.0);

  DenseMatrix uniform(5, 3, 1.0 / 3.0);
  CHECK(cross_entropy_loss(uniform, 2) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));

  DenseMatrix two(2, 2);
  two.at(0, 0) = 0.5;
  two.at(0, 1) = 0.5;
  two.at(1, 0) = 0.25;
  two.at(1, 1) = 0.75;
  CHECK(cross_entropy_loss(two, 0) ==
        doctest::Approx(-(std::log(0.5) + std::log(0.25)) / 2.0)
            .epsilon(1e-9));
  CHECK(cross_entropy_loss(two, 0) == doctest::Approx(1.0397207708399179));

  SUBCASE("label out of range") {
    CHECK_THROWS_AS(cross_entropy_loss(uniform, 3), InputError);
    CHECK_THROWS_AS(cross_entropy_loss(uniform, -1), InputError);
  }
  SUBCASE("the floor bounds the loss") {
    DenseMatrix hopeless(1, 2);
    hopeless.at(0, 0) = 1.0;  // true class has probability 0
    const double loss = cross_entropy_loss(hopeless, 1);
    CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  }
}

TEST_CASE("count_parameters matches brute-force enumeration") {
  ModelConfig big;  // defaults
  ModelConfig small = tiny_config();
  ModelConfig odd = tiny_config();
  odd.use_tcn = false;
  odd.classes = 2;
  odd.dilations = {1, 2, 4};
  for (const ModelConfig& cfg : {big, small, odd}) {
    ModelParams p = zeros_like(cfg);
    std::size_t total = 0;
    for (const TensorRef& ref : tensor_refs(p)) total += ref.values->size();
    CHECK(count_parameters(cfg) == total);
  }
}

TEST_CASE("adjacency factors contribute exactly 2*N*c elements") {
  ModelConfig cfg;  // N = 68, c = 10
  ModelParams p = zeros_like(cfg);
  std::size_t adj = 0;
  for (const TensorRef& ref : tensor_refs(p))
    if (ref.name == "adj.e1" || ref.name == "adj.e2")
      adj += ref.values->size();
  CHECK(adj == 1360);

  std::size_t fusion = 0;
  for (const TensorRef& ref : tensor_refs(p))
    if (ref.name == "fusion.w") fusion += ref.values->size();
  CHECK(fusion == 3);
}

TEST_CASE("each ablation strictly reduces the parameter count") {
  ModelConfig cfg;
  const std::size_t full = count_parameters(cfg);
  for (int which : {0, 1, 2}) {
    ModelConfig ablated = cfg;
    if (which == 0) ablated.use_tcn = false;
    if (which == 1) ablated.use_gcn = false;
    if (which == 2) ablated.use_embedding = false;
    CHECK(count_parameters(ablated) < full);
  }
}

TEST_CASE("init_params is deterministic and finite") {
  const ModelConfig cfg = tiny_config();
  ModelParams a = init_params(cfg, 5);
  ModelParams b = init_params(cfg, 5);
  ModelParams c = init_params(cfg, 6);
  const auto ra = tensor_refs(a), rb = tensor_refs(b), rc = tensor_refs(c);
  bool any_diff = false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(*ra[i].values == *rb[i].values);
    if (*ra[i].values != *rc[i].values) any_diff = true;
    for (double v : *ra[i].values) CHECK(std::isfinite(v));
  }
  CHECK(any_diff);
}

}  // TEST_SUITE
