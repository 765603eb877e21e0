#include <cmath>
#include <sstream>

#include "dense_ops.hpp"
#include "litefat/errors.hpp"
#include "litefat/model.hpp"

namespace litefat::model {

using numkit::ConvFilter;
using numkit::DenseMatrix;
using numkit::SeqTensor;

void backward_pass(const ModelParams& params, ForwardTrace& trace, int label,
                   ModelParams& grads, bool accumulate) {
  const ModelConfig& cfg = params.config;
  if (!(grads.config == cfg))
    throw ShapeError("backward_pass: gradient buffers built for a different "
                     "config");
  if (trace.consumed)
    throw StateError("backward_pass: trace already consumed; run a fresh "
                     "forward pass");
  if (label < 0 || static_cast<std::size_t>(label) >= cfg.classes) {
    std::ostringstream msg;
    msg << "backward_pass: label " << label << " out of range for "
        << cfg.classes << " classes";
    throw InputError(msg.str());
  }
  trace.consumed = true;
  if (!accumulate) zero_tensors(grads);

  const std::size_t nodes = cfg.nodes;
  const std::size_t steps = cfg.frames_per_sample;
  const std::size_t chans = cfg.residual_channels;
  const std::size_t hidden = cfg.gcn_hidden;
  const std::size_t n_class = cfg.classes;

  // Loss and softmax head. With the probability floor active the loss is
  // locally constant in that frame's target probability, so its row is zero.
  DenseMatrix dlogits(steps, n_class);
  const double inv_steps = 1.0 / static_cast<double>(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const double p = trace.probs.at(t, static_cast<std::size_t>(label));
    const double g = p > kProbFloor ? -inv_steps / p : 0.0;
    const double dot = g * p;
    for (std::size_t m = 0; m < n_class; ++m) {
      const double dp = m == static_cast<std::size_t>(label) ? g : 0.0;
      dlogits.at(t, m) = trace.probs.at(t, m) * (dp - dot);
    }
  }

  // Node mean-pool spreads each logit gradient evenly over nodes.
  SeqTensor dhead(nodes, n_class, steps);
  const double inv_nodes = 1.0 / static_cast<double>(nodes);
  for (std::size_t n = 0; n < nodes; ++n)
    for (std::size_t m = 0; m < n_class; ++m)
      for (std::size_t t = 0; t < steps; ++t)
        dhead.at(n, m, t) = dlogits.at(t, m) * inv_nodes;

  detail::conv_backward_filter(grads.output_proj, trace.skip_relu, dhead);
  SeqTensor dskip(nodes, chans, steps);
  detail::conv_backward_data(dskip, dhead, params.output_proj, false);
  for (std::size_t i = 0; i < dskip.data.size(); ++i)
    if (!(trace.skip_relu.data[i] > 0.0)) dskip.data[i] = 0.0;

  DenseMatrix d_adj(cfg.use_gcn ? nodes : 0, cfg.use_gcn ? nodes : 0);

  SeqTensor dx(nodes, chans, steps);  // gradient w.r.t. the layer output
  for (std::size_t li = cfg.layer_count(); li-- > 0;) {
    const LayerParams& lp = params.layers[li];
    LayerParams& lg = grads.layers[li];
    const LayerTrace& lt = trace.layers[li];

    // Skip tap contributes to this layer's output gradient.
    detail::conv_backward_filter(lg.skip_proj, lt.residual_out, dskip);
    detail::conv_backward_data(dx, dskip, lp.skip_proj, true);

    // dx now holds d(residual_out); the identity branch is added after the
    // block backward below.
    SeqTensor dgated(nodes, chans, steps);
    if (cfg.use_gcn) {
      // Mirrors the flattened forward: node mixes act on the [channel, step]
      // axis in one matmul, channel mixes per (node, step).
      detail::channel_mix_backward_weight(lg.gcn_w1, lt.gcn_mix_hidden, dx);
      SeqTensor dmix_hidden(nodes, hidden, steps);
      detail::channel_mix_backward_data(dmix_hidden, dx, lp.gcn_w1, false);
      detail::matmul_nt(d_adj.data.data(), dmix_hidden.data.data(),
                        lt.gcn_hidden.data.data(), nodes, hidden * steps,
                        nodes, true);
      SeqTensor dhidden(nodes, hidden, steps);
      detail::matmul_tn(dhidden.data.data(), trace.adjacency.data.data(),
                        dmix_hidden.data.data(), nodes, nodes, hidden * steps,
                        false);
      for (std::size_t i = 0; i < dhidden.data.size(); ++i)
        if (!(lt.gcn_hidden.data[i] > 0.0)) dhidden.data[i] = 0.0;
      detail::channel_mix_backward_weight(lg.gcn_w0, lt.gcn_mix_in, dhidden);
      SeqTensor dmix_in(nodes, chans, steps);
      detail::channel_mix_backward_data(dmix_in, dhidden, lp.gcn_w0, false);
      detail::matmul_nt(d_adj.data.data(), dmix_in.data.data(),
                        lt.gated.data.data(), nodes, chans * steps, nodes,
                        true);
      detail::matmul_tn(dgated.data.data(), trace.adjacency.data.data(),
                        dmix_in.data.data(), nodes, nodes, chans * steps,
                        false);
    } else {
      dgated = dx;
    }

    SeqTensor dinput(nodes, chans, steps);
    if (cfg.use_tcn) {
      SeqTensor du1(nodes, chans, steps), du2(nodes, chans, steps);
      for (std::size_t i = 0; i < dgated.data.size(); ++i) {
        const double tv = lt.tanh_out.data[i];
        const double gv = lt.gate_out.data[i];
        du1.data[i] = dgated.data[i] * gv * (1.0 - tv * tv);
        du2.data[i] = dgated.data[i] * tv * gv * (1.0 - gv);
      }
      detail::conv_backward_filter(lg.tcn_a, lt.input, du1);
      detail::conv_backward_filter(lg.tcn_b, lt.input, du2);
      detail::conv_backward_data(dinput, du1, lp.tcn_a, false);
      detail::conv_backward_data(dinput, du2, lp.tcn_b, true);
    } else {
      detail::conv_backward_filter(lg.tcn_linear, lt.input, dgated);
      detail::conv_backward_data(dinput, dgated, lp.tcn_linear, false);
    }

    // Residual identity branch.
    for (std::size_t i = 0; i < dinput.data.size(); ++i)
      dinput.data[i] += dx.data[i];
    dx = std::move(dinput);
  }

  detail::conv_backward_filter(grads.input_proj, trace.fused, dx);
  SeqTensor dfused(nodes, cfg.input_width(), steps);
  detail::conv_backward_data(dfused, dx, params.input_proj, false);

  // Fusion: X_t = (C_t w) d_t^T, so dw += C_t^T (dX_t d_t).
  static const std::vector<double> kOnes{1.0};
  for (std::size_t t = 0; t < steps; ++t) {
    const std::vector<double>& d =
        cfg.use_embedding ? trace.sample.embeddings[t] : kOnes;
    const DenseMatrix& pts = trace.sample.points[t];
    for (std::size_t n = 0; n < nodes; ++n) {
      double du = 0.0;
      for (std::size_t j = 0; j < d.size(); ++j)
        du += dfused.at(n, j, t) * d[j];
      for (std::size_t f = 0; f < cfg.landmark_features; ++f)
        grads.fusion_w[f] += pts.at(n, f) * du;
    }
  }

  if (cfg.use_gcn) {
    // Row-softmax backward, then the relu mask on the factor product.
    DenseMatrix dm(nodes, nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < nodes; ++j)
        dot += d_adj.at(i, j) * trace.adjacency.at(i, j);
      for (std::size_t j = 0; j < nodes; ++j) {
        const double v =
            trace.adjacency.at(i, j) * (d_adj.at(i, j) - dot);
        dm.at(i, j) = trace.adj_relu.at(i, j) > 0.0 ? v : 0.0;
      }
    }
    detail::matmul_nn(grads.adj_e1.data.data(), dm.data.data(),
                      params.adj_e2.data.data(), nodes, nodes,
                      cfg.adj_embed_dim, true);
    detail::matmul_tn(grads.adj_e2.data.data(), dm.data.data(),
                      params.adj_e1.data.data(), nodes, nodes,
                      cfg.adj_embed_dim, true);
  }
}

}  // namespace litefat::model
