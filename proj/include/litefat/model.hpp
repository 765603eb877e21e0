#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "litefat/ingest.hpp"
#include "litefat/numkit.hpp"

namespace litefat::model {

// Dimensions and ablation switches of the spatio-temporal stack.
struct ModelConfig {
  std::size_t nodes = 68;              // graph size N (one node per landmark)
  std::size_t landmark_features = 3;   // coordinate matrix columns (X, Y, C)
  std::size_t fused_dim = 64;          // per-frame embedding width D
  std::size_t adj_embed_dim = 10;      // adjacency factor width c
  std::size_t residual_channels = 32;  // channel width R inside the stack
  std::size_t conv_taps = 2;           // temporal kernel size k
  std::vector<std::size_t> dilations = {1, 2, 4, 8};  // one entry per layer
  std::size_t gcn_hidden = 32;         // spatial block hidden width H
  std::size_t classes = 3;             // M
  std::size_t frames_per_sample = 16;  // window length S
  bool use_tcn = true;
  bool use_gcn = true;
  bool use_embedding = true;

  std::size_t layer_count() const { return dilations.size(); }
  // Width of the fused feature matrix; collapses to 1 when the per-frame
  // embedding is ablated (d becomes the all-ones length-1 vector).
  std::size_t input_width() const { return use_embedding ? fused_dim : 1; }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  numkit::ConvFilter tcn_a;       // tanh path (weights + bias)
  numkit::ConvFilter tcn_b;       // sigmoid gate path (weights + bias)
  numkit::ConvFilter tcn_linear;  // 1x1 replacement when the TCN is ablated
  numkit::DenseMatrix gcn_w0;     // R -> H
  numkit::DenseMatrix gcn_w1;     // H -> R
  numkit::ConvFilter skip_proj;   // R -> R, 1x1
};

// Every learnable tensor of the network. The same type doubles as the
// gradient buffer set (one instance per role).
struct ModelParams {
  ModelConfig config;
  std::vector<double> fusion_w;    // length F
  numkit::DenseMatrix adj_e1;      // N x c (empty when the GCN is ablated)
  numkit::DenseMatrix adj_e2;      // N x c
  numkit::ConvFilter input_proj;   // input_width -> R, 1x1
  std::vector<LayerParams> layers;
  numkit::ConvFilter output_proj;  // R -> M, 1x1
};

struct TensorRef {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double>* values;
};

// Enumerates every live tensor in a fixed, documented order.
std::vector<TensorRef> tensor_refs(ModelParams& params);

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);
ModelParams zeros_like(const ModelConfig& config);
void zero_tensors(ModelParams& params);
void scale_tensors(ModelParams& params, double factor);

// Closed-form element count over all live tensors; kept in sync with
// tensor_refs by the enumeration test.
std::size_t count_parameters(const ModelConfig& config);

// ---------------------------------------------------------------------------
// Forward pass

// Model-facing view of one windowed sample.
struct Sample {
  std::vector<numkit::DenseMatrix> points;      // S matrices, N x F
  std::vector<std::vector<double>> embeddings;  // S vectors of length D
  int label = -1;
};

Sample to_sample(const ingest::ClipSample& clip);

// X = (C w) d^T: rank-1 fusion of coordinates and the frame embedding.
numkit::DenseMatrix fuse_features(const numkit::DenseMatrix& points,
                                  const std::vector<double>& w,
                                  const std::vector<double>& d);

// softmax_rows(relu(E1 E2^T)); always row-stochastic.
numkit::DenseMatrix adaptive_adjacency(const numkit::DenseMatrix& e1,
                                       const numkit::DenseMatrix& e2);

// Two-hop propagation A relu(A X W0) W1; row-softmax only at the classifier
// head (final = true), identity inside the stack.
numkit::DenseMatrix gcn_block(const numkit::DenseMatrix& x,
                              const numkit::DenseMatrix& adjacency,
                              const numkit::DenseMatrix& w0,
                              const numkit::DenseMatrix& w1, bool final);

// h = tanh(a * x + bias_a) .* sigmoid(b * x + bias_b), causal in time.
numkit::SeqTensor gated_tcn(const numkit::SeqTensor& x,
                            const numkit::ConvFilter& filter_a,
                            const numkit::ConvFilter& filter_b);

struct LayerTrace {
  numkit::SeqTensor input;
  numkit::SeqTensor tanh_out;  // empty when the TCN is ablated
  numkit::SeqTensor gate_out;
  numkit::SeqTensor gated;     // temporal block output
  // Spatial block caches, empty when the GCN is ablated. The adjacency acts
  // per step; flattening (channel, step) lets one matmul cover all steps.
  numkit::SeqTensor gcn_mix_in;      // A gated, per step
  numkit::SeqTensor gcn_hidden;      // relu((A gated) W0)
  numkit::SeqTensor gcn_mix_hidden;  // A hidden, per step
  numkit::SeqTensor residual_out;
};

// Cached activations of exactly one forward invocation; consumed by one
// backward pass.
struct ForwardTrace {
  Sample sample;
  std::vector<std::vector<double>> frame_mix;  // per frame C w
  numkit::SeqTensor fused;                     // [N, input_width, S]
  numkit::DenseMatrix adj_relu;                // relu(E1 E2^T)
  numkit::DenseMatrix adjacency;
  std::vector<LayerTrace> layers;
  numkit::SeqTensor skip_relu;
  numkit::DenseMatrix probs;  // S x M
  bool consumed = false;
};

struct ForwardResult {
  numkit::DenseMatrix probs;  // S x M, rows sum to 1
  ForwardTrace trace;
};

ForwardResult model_forward(const Sample& sample, const ModelParams& params);

inline constexpr double kProbFloor = 1e-12;

// Mean over frames of -log p(label), with the probability floored at 1e-12.
double cross_entropy_loss(const numkit::DenseMatrix& probs, int label);

// ---------------------------------------------------------------------------
// Backward pass

// Exact gradients of cross_entropy_loss(model_forward(.)) for every tensor.
// Overwrites grads unless accumulate is set. A trace can be consumed once.
void backward_pass(const ModelParams& params, ForwardTrace& trace, int label,
                   ModelParams& grads, bool accumulate = false);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-4;
  std::size_t step = 0;
  std::vector<std::vector<double>> m;  // first moments, tensor_refs order
  std::vector<std::vector<double>> v;  // second moments

  static AdamState init(const ModelConfig& config, double learning_rate);
};

// Bias-corrected Adam update over every tensor pair.
void adam_step(ModelParams& params, ModelParams& grads, AdamState& state);

// ---------------------------------------------------------------------------
// Training

// Stops once the loss has failed to improve by more than min_improvement for
// `patience` consecutive observations.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_improvement)
      : patience_(patience), min_improvement_(min_improvement) {}

  // Returns true when training should stop after this observation.
  bool observe(double loss);

  double best() const { return best_; }

 private:
  std::size_t patience_;
  double min_improvement_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t stale_ = 0;
};

struct TrainOptions {
  std::size_t max_epochs = 100;
  std::size_t patience = 3;
  double learning_rate = 1e-4;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  double min_improvement = 1e-6;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::size_t best_epoch = 0;      // 1-based
  double best_loss = 0.0;
  bool early_stopped = false;
};

struct TrainResult {
  ModelParams params;  // snapshot from the best-loss epoch
  TrainHistory history;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

TrainResult train_loop(const std::vector<ingest::ClipSample>& train_clips,
                       const ModelConfig& config, const TrainOptions& options,
                       const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Evaluation

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
};

// Argmax with ties resolved to the lowest class index.
int predict_class(const std::vector<double>& mean_probs);

// Frame-mean probability vector of one sample's forward output.
std::vector<double> mean_probs(const numkit::DenseMatrix& probs);

// Accuracy plus macro precision/recall/F1 (positive-class convention for
// two classes, class 1 positive) and macro one-vs-rest AUC by rank statistic.
Metrics classification_metrics(
    const std::vector<std::vector<double>>& clip_probs,
    const std::vector<int>& labels, std::size_t classes);

// ---------------------------------------------------------------------------
// Checkpoints

std::string config_to_text(const ModelConfig& config);
ModelConfig config_from_text(const std::string& text);

// Applies one "model.*" key to a config; returns false for unknown keys.
bool apply_config_key(ModelConfig& config, const std::string& key,
                      const std::string& value);

void checkpoint_save(const ModelParams& params, std::ostream& out);
ModelParams checkpoint_load(std::istream& in);
void checkpoint_save(const ModelParams& params, const std::string& path);
ModelParams checkpoint_load(const std::string& path);

}  // namespace litefat::model
