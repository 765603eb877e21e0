#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace litefat::numkit {

// Row-major dense matrix of doubles.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const double& at(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const DenseMatrix&) const = default;
};

// Dense [node][channel][step] tensor; the step index is innermost.
struct SeqTensor {
  std::size_t nodes = 0;
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::vector<double> data;

  SeqTensor() = default;
  SeqTensor(std::size_t n, std::size_t c, std::size_t t, double fill = 0.0)
      : nodes(n), channels(c), steps(t), data(n * c * t, fill) {}

  double& at(std::size_t n, std::size_t c, std::size_t t) {
    return data[(n * channels + c) * steps + t];
  }
  const double& at(std::size_t n, std::size_t c, std::size_t t) const {
    return data[(n * channels + c) * steps + t];
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const SeqTensor&) const = default;
};

// Weights of a dilated causal 1-D convolution mixing channels per node.
struct ConvFilter {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t taps = 1;      // kernel size k
  std::size_t dilation = 1;  // spacing d between taps
  std::vector<double> weights;  // [out][in][tap]
  std::vector<double> bias;     // [out]

  ConvFilter() = default;
  ConvFilter(std::size_t in, std::size_t out, std::size_t k, std::size_t d)
      : in_channels(in),
        out_channels(out),
        taps(k),
        dilation(d),
        weights(in * out * k, 0.0),
        bias(out, 0.0) {}

  double& w(std::size_t o, std::size_t i, std::size_t s) {
    return weights[(o * in_channels + i) * taps + s];
  }
  const double& w(std::size_t o, std::size_t i, std::size_t s) const {
    return weights[(o * in_channels + i) * taps + s];
  }
};

enum class Activation { kRelu, kTanh, kSigmoid, kIdentity };

double apply_activation(Activation kind, double x);

// Standard product; per output element the shared index is summed left to
// right, so results are reproducible bit for bit.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix pointwise_activation(Activation kind, const DenseMatrix& x);
SeqTensor pointwise_activation(Activation kind, const SeqTensor& x);

// Row-wise softmax with per-row max subtraction, safe for any finite input.
DenseMatrix softmax_rows(const DenseMatrix& x);

// y(n,o,t) = bias(o) + sum_i sum_s w(o,i,s) * x(n,i,t - d*s); indices before
// the first step read as zero, so the step count is preserved.
SeqTensor dilated_causal_conv(const SeqTensor& x, const ConvFilter& f);

// Central differences (loss(p+h*e_i) - loss(p-h*e_i)) / 2h per coordinate.
// loss_fn must be pure. Throws NumericError on a non-finite loss value.
std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double h);

}  // namespace litefat::numkit
