#include <cmath>
#include <sstream>

#include "litefat/errors.hpp"
#include "litefat/model.hpp"
#include "litefat/rng.hpp"

namespace litefat::model {

void ModelConfig::validate() const {
  const auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw InputError(std::string("model config: ") + what +
                                 " must be >= 1");
  };
  positive(nodes, "nodes");
  positive(landmark_features, "landmark_features");
  positive(fused_dim, "fused_dim");
  positive(adj_embed_dim, "adj_embed_dim");
  positive(residual_channels, "residual_channels");
  positive(conv_taps, "conv_taps");
  positive(gcn_hidden, "gcn_hidden");
  positive(frames_per_sample, "frames_per_sample");
  if (classes < 2) throw InputError("model config: classes must be >= 2");
  if (dilations.empty())
    throw InputError("model config: at least one layer is required");
  for (std::size_t d : dilations) positive(d, "dilation");
}

std::vector<TensorRef> tensor_refs(ModelParams& params) {
  const ModelConfig& cfg = params.config;
  std::vector<TensorRef> refs;
  const auto add = [&](std::string name, std::vector<std::size_t> dims,
                       std::vector<double>& values) {
    refs.push_back(TensorRef{std::move(name), std::move(dims), &values});
  };
  const auto add_filter = [&](const std::string& base,
                              numkit::ConvFilter& f) {
    add(base + ".weight", {f.out_channels, f.in_channels, f.taps}, f.weights);
    add(base + ".bias", {f.out_channels}, f.bias);
  };

  add("fusion.w", {cfg.landmark_features}, params.fusion_w);
  if (cfg.use_gcn) {
    add("adj.e1", {cfg.nodes, cfg.adj_embed_dim}, params.adj_e1.data);
    add("adj.e2", {cfg.nodes, cfg.adj_embed_dim}, params.adj_e2.data);
  }
  add_filter("input_proj", params.input_proj);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const std::string base = "layer" + std::to_string(l);
    LayerParams& layer = params.layers[l];
    if (cfg.use_tcn) {
      add_filter(base + ".tcn_a", layer.tcn_a);
      add_filter(base + ".tcn_b", layer.tcn_b);
    } else {
      add_filter(base + ".tcn_linear", layer.tcn_linear);
    }
    if (cfg.use_gcn) {
      add(base + ".gcn.w0", {cfg.residual_channels, cfg.gcn_hidden},
          layer.gcn_w0.data);
      add(base + ".gcn.w1", {cfg.gcn_hidden, cfg.residual_channels},
          layer.gcn_w1.data);
    }
    add_filter(base + ".skip", layer.skip_proj);
  }
  add_filter("output_proj", params.output_proj);
  return refs;
}

ModelParams zeros_like(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  const std::size_t n = config.nodes;
  const std::size_t r = config.residual_channels;
  const std::size_t h = config.gcn_hidden;
  p.fusion_w.assign(config.landmark_features, 0.0);
  if (config.use_gcn) {
    p.adj_e1 = numkit::DenseMatrix(n, config.adj_embed_dim);
    p.adj_e2 = numkit::DenseMatrix(n, config.adj_embed_dim);
  }
  p.input_proj = numkit::ConvFilter(config.input_width(), r, 1, 1);
  p.layers.resize(config.layer_count());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    LayerParams& layer = p.layers[l];
    if (config.use_tcn) {
      layer.tcn_a = numkit::ConvFilter(r, r, config.conv_taps,
                                       config.dilations[l]);
      layer.tcn_b = numkit::ConvFilter(r, r, config.conv_taps,
                                       config.dilations[l]);
    } else {
      layer.tcn_linear = numkit::ConvFilter(r, r, 1, 1);
    }
    if (config.use_gcn) {
      layer.gcn_w0 = numkit::DenseMatrix(r, h);
      layer.gcn_w1 = numkit::DenseMatrix(h, r);
    }
    layer.skip_proj = numkit::ConvFilter(r, r, 1, 1);
  }
  p.output_proj = numkit::ConvFilter(r, config.classes, 1, 1);
  return p;
}

namespace {

void fill_uniform(std::vector<double>& values, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : values) v = rng.uniform(-bound, bound);
}

void fill_filter(numkit::ConvFilter& f, Rng& rng) {
  const std::size_t fan_in = f.in_channels * f.taps;
  fill_uniform(f.weights, fan_in, rng);
  fill_uniform(f.bias, fan_in, rng);
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros_like(config);
  Rng rng = Rng::substream(seed, 0x1417);
  fill_uniform(p.fusion_w, config.landmark_features, rng);
  if (config.use_gcn) {
    for (double& v : p.adj_e1.data) v = rng.normal() * 0.1;
    for (double& v : p.adj_e2.data) v = rng.normal() * 0.1;
  }
  fill_filter(p.input_proj, rng);
  for (LayerParams& layer : p.layers) {
    if (config.use_tcn) {
      fill_filter(layer.tcn_a, rng);
      fill_filter(layer.tcn_b, rng);
    } else {
      fill_filter(layer.tcn_linear, rng);
    }
    if (config.use_gcn) {
      fill_uniform(layer.gcn_w0.data, config.residual_channels, rng);
      fill_uniform(layer.gcn_w1.data, config.gcn_hidden, rng);
    }
    fill_filter(layer.skip_proj, rng);
  }
  fill_filter(p.output_proj, rng);
  return p;
}

void zero_tensors(ModelParams& params) {
  for (const TensorRef& ref : tensor_refs(params))
    for (double& v : *ref.values) v = 0.0;
}

void scale_tensors(ModelParams& params, double factor) {
  for (const TensorRef& ref : tensor_refs(params))
    for (double& v : *ref.values) v *= factor;
}

std::size_t count_parameters(const ModelConfig& config) {
  config.validate();
  const std::size_t n = config.nodes;
  const std::size_t c = config.adj_embed_dim;
  const std::size_t r = config.residual_channels;
  const std::size_t h = config.gcn_hidden;
  const std::size_t k = config.conv_taps;
  const std::size_t layers = config.layer_count();

  // fusion weights
  std::size_t total = config.landmark_features;
  // adjacency factors
  if (config.use_gcn) total += 2 * n * c;
  // input projection (weights + bias)
  total += r * config.input_width() + r;
  // temporal blocks: two gated filters or one linear replacement per layer
  if (config.use_tcn) {
    total += layers * 2 * (r * r * k + r);
  } else {
    total += layers * (r * r + r);
  }
  // spatial blocks
  if (config.use_gcn) total += layers * (r * h + h * r);
  // skip projections
  total += layers * (r * r + r);
  // output projection
  total += config.classes * r + config.classes;
  return total;
}

}  // namespace litefat::model
