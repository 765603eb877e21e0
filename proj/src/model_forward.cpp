#include <cmath>
#include <sstream>

#include "dense_ops.hpp"
#include "litefat/errors.hpp"
#include "litefat/model.hpp"

namespace litefat::model {

using numkit::Activation;
using numkit::ConvFilter;
using numkit::DenseMatrix;
using numkit::SeqTensor;

Sample to_sample(const ingest::ClipSample& clip) {
  Sample s;
  s.label = clip.label;
  s.points.reserve(clip.frames.size());
  for (const auto& frame : clip.frames) s.points.push_back(frame.points);
  s.embeddings = clip.embeddings;
  return s;
}

DenseMatrix fuse_features(const DenseMatrix& points,
                          const std::vector<double>& w,
                          const std::vector<double>& d) {
  if (points.cols != w.size()) {
    std::ostringstream msg;
    msg << "fuse_features: points are " << points.rows << "x" << points.cols
        << " but the fusion weight has length " << w.size();
    throw ShapeError(msg.str());
  }
  if (d.empty()) throw ShapeError("fuse_features: empty embedding vector");
  DenseMatrix x(points.rows, d.size());
  for (std::size_t i = 0; i < points.rows; ++i) {
    double mixed = 0.0;
    for (std::size_t f = 0; f < w.size(); ++f) mixed += points.at(i, f) * w[f];
    for (std::size_t j = 0; j < d.size(); ++j) x.at(i, j) = mixed * d[j];
  }
  return x;
}

DenseMatrix adaptive_adjacency(const DenseMatrix& e1, const DenseMatrix& e2) {
  if (e1.cols != e2.cols || e1.rows != e2.rows) {
    std::ostringstream msg;
    msg << "adaptive_adjacency: factor shapes " << e1.rows << "x" << e1.cols
        << " and " << e2.rows << "x" << e2.cols << " do not match";
    throw ShapeError(msg.str());
  }
  DenseMatrix logits(e1.rows, e2.rows);
  detail::matmul_nt(logits.data.data(), e1.data.data(), e2.data.data(),
                    e1.rows, e1.cols, e2.rows, false);
  for (double& v : logits.data) v = v > 0.0 ? v : 0.0;
  return numkit::softmax_rows(logits);
}

DenseMatrix gcn_block(const DenseMatrix& x, const DenseMatrix& adjacency,
                      const DenseMatrix& w0, const DenseMatrix& w1,
                      bool final) {
  if (adjacency.rows != adjacency.cols || adjacency.cols != x.rows) {
    std::ostringstream msg;
    msg << "gcn_block: adjacency " << adjacency.rows << "x" << adjacency.cols
        << " does not match " << x.rows << " nodes";
    throw ShapeError(msg.str());
  }
  const DenseMatrix hidden = numkit::pointwise_activation(
      Activation::kRelu, numkit::matmul(numkit::matmul(adjacency, x), w0));
  const DenseMatrix out = numkit::matmul(numkit::matmul(adjacency, hidden), w1);
  return final ? numkit::softmax_rows(out) : out;
}

SeqTensor gated_tcn(const SeqTensor& x, const ConvFilter& filter_a,
                    const ConvFilter& filter_b) {
  if (filter_a.in_channels != filter_b.in_channels ||
      filter_a.out_channels != filter_b.out_channels ||
      filter_a.dilation != filter_b.dilation) {
    throw ShapeError("gated_tcn: the two filters must share channels and "
                     "dilation");
  }
  const SeqTensor content = numkit::dilated_causal_conv(x, filter_a);
  const SeqTensor gate = numkit::dilated_causal_conv(x, filter_b);
  SeqTensor out(content.nodes, content.channels, content.steps);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = std::tanh(content.data[i]) *
                  numkit::apply_activation(Activation::kSigmoid, gate.data[i]);
  }
  return out;
}

namespace {

void check_sample(const Sample& sample, const ModelConfig& cfg) {
  const std::size_t steps = cfg.frames_per_sample;
  if (sample.points.size() != steps) {
    std::ostringstream msg;
    msg << "model_forward: sample has " << sample.points.size()
        << " frames, config expects " << steps;
    throw ShapeError(msg.str());
  }
  for (const DenseMatrix& p : sample.points) {
    if (p.rows != cfg.nodes || p.cols != cfg.landmark_features) {
      std::ostringstream msg;
      msg << "model_forward: frame points are " << p.rows << "x" << p.cols
          << ", config expects " << cfg.nodes << "x" << cfg.landmark_features;
      throw ShapeError(msg.str());
    }
  }
  if (cfg.use_embedding) {
    if (sample.embeddings.size() != steps)
      throw ShapeError("model_forward: sample is missing frame embeddings");
    for (const auto& e : sample.embeddings) {
      if (e.size() != cfg.fused_dim) {
        std::ostringstream msg;
        msg << "model_forward: embedding has length " << e.size()
            << ", config expects " << cfg.fused_dim;
        throw ShapeError(msg.str());
      }
    }
  }
}

}  // namespace

ForwardResult model_forward(const Sample& sample, const ModelParams& params) {
  const ModelConfig& cfg = params.config;
  check_sample(sample, cfg);
  const std::size_t nodes = cfg.nodes;
  const std::size_t steps = cfg.frames_per_sample;
  const std::size_t width = cfg.input_width();
  const std::size_t chans = cfg.residual_channels;
  const std::size_t hidden = cfg.gcn_hidden;

  ForwardTrace trace;
  trace.sample = sample;

  // Rank-1 fusion per frame, assembled into [N, width, S].
  static const std::vector<double> kOnes{1.0};
  trace.fused = SeqTensor(nodes, width, steps);
  trace.frame_mix.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const DenseMatrix& pts = sample.points[t];
    const std::vector<double>& d =
        cfg.use_embedding ? sample.embeddings[t] : kOnes;
    std::vector<double> mix(nodes, 0.0);
    for (std::size_t n = 0; n < nodes; ++n) {
      double acc = 0.0;
      for (std::size_t f = 0; f < cfg.landmark_features; ++f)
        acc += pts.at(n, f) * params.fusion_w[f];
      mix[n] = acc;
      for (std::size_t j = 0; j < width; ++j)
        trace.fused.at(n, j, t) = acc * d[j];
    }
    trace.frame_mix.push_back(std::move(mix));
  }

  if (cfg.use_gcn) {
    DenseMatrix logits(nodes, nodes);
    detail::matmul_nt(logits.data.data(), params.adj_e1.data.data(),
                      params.adj_e2.data.data(), nodes, cfg.adj_embed_dim,
                      nodes, false);
    for (double& v : logits.data) v = v > 0.0 ? v : 0.0;
    trace.adj_relu = logits;
    trace.adjacency = numkit::softmax_rows(logits);
  }

  SeqTensor x = numkit::dilated_causal_conv(trace.fused, params.input_proj);
  SeqTensor skip_sum(nodes, chans, steps);

  trace.layers.reserve(cfg.layer_count());
  for (std::size_t l = 0; l < cfg.layer_count(); ++l) {
    const LayerParams& lp = params.layers[l];
    LayerTrace lt;
    lt.input = std::move(x);

    if (cfg.use_tcn) {
      const SeqTensor content = numkit::dilated_causal_conv(lt.input, lp.tcn_a);
      const SeqTensor gate = numkit::dilated_causal_conv(lt.input, lp.tcn_b);
      lt.tanh_out = SeqTensor(nodes, chans, steps);
      lt.gate_out = SeqTensor(nodes, chans, steps);
      lt.gated = SeqTensor(nodes, chans, steps);
      for (std::size_t i = 0; i < lt.gated.data.size(); ++i) {
        const double tv = std::tanh(content.data[i]);
        const double gv =
            numkit::apply_activation(Activation::kSigmoid, gate.data[i]);
        lt.tanh_out.data[i] = tv;
        lt.gate_out.data[i] = gv;
        lt.gated.data[i] = tv * gv;
      }
    } else {
      lt.gated = numkit::dilated_causal_conv(lt.input, lp.tcn_linear);
    }

    SeqTensor block_out(nodes, chans, steps);
    if (cfg.use_gcn) {
      // Node mixing treats [channel, step] as one flattened axis; the
      // adjacency still acts independently per step.
      lt.gcn_mix_in = SeqTensor(nodes, chans, steps);
      detail::matmul_nn(lt.gcn_mix_in.data.data(),
                        trace.adjacency.data.data(), lt.gated.data.data(),
                        nodes, nodes, chans * steps, false);
      lt.gcn_hidden = SeqTensor(nodes, hidden, steps);
      detail::channel_mix_forward(lt.gcn_hidden, lt.gcn_mix_in, lp.gcn_w0,
                                  false);
      for (double& v : lt.gcn_hidden.data) v = v > 0.0 ? v : 0.0;
      lt.gcn_mix_hidden = SeqTensor(nodes, hidden, steps);
      detail::matmul_nn(lt.gcn_mix_hidden.data.data(),
                        trace.adjacency.data.data(),
                        lt.gcn_hidden.data.data(), nodes, nodes,
                        hidden * steps, false);
      detail::channel_mix_forward(block_out, lt.gcn_mix_hidden, lp.gcn_w1,
                                  false);
    } else {
      block_out = lt.gated;
    }

    lt.residual_out = SeqTensor(nodes, chans, steps);
    for (std::size_t i = 0; i < block_out.data.size(); ++i)
      lt.residual_out.data[i] = block_out.data[i] + lt.input.data[i];

    const SeqTensor skip =
        numkit::dilated_causal_conv(lt.residual_out, lp.skip_proj);
    for (std::size_t i = 0; i < skip_sum.data.size(); ++i)
      skip_sum.data[i] += skip.data[i];

    x = lt.residual_out;
    trace.layers.push_back(std::move(lt));
  }

  trace.skip_relu = std::move(skip_sum);
  for (double& v : trace.skip_relu.data) v = v > 0.0 ? v : 0.0;

  const SeqTensor head =
      numkit::dilated_causal_conv(trace.skip_relu, params.output_proj);

  DenseMatrix logits(steps, cfg.classes);
  const double inv_nodes = 1.0 / static_cast<double>(nodes);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t m = 0; m < cfg.classes; ++m) {
      double acc = 0.0;
      for (std::size_t n = 0; n < nodes; ++n) acc += head.at(n, m, t);
      logits.at(t, m) = acc * inv_nodes;
    }

  trace.probs = numkit::softmax_rows(logits);

  ForwardResult result;
  result.probs = trace.probs;
  result.trace = std::move(trace);
  return result;
}

double cross_entropy_loss(const DenseMatrix& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.cols) {
    std::ostringstream msg;
    msg << "cross_entropy_loss: label " << label << " out of range for "
        << probs.cols << " classes";
    throw InputError(msg.str());
  }
  double total = 0.0;
  for (std::size_t t = 0; t < probs.rows; ++t) {
    const double p = probs.at(t, static_cast<std::size_t>(label));
    total -= std::log(p > kProbFloor ? p : kProbFloor);
  }
  return total / static_cast<double>(probs.rows);
}

}  // namespace litefat::model
