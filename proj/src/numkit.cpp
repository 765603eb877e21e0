#include "litefat/numkit.hpp"

#include <cmath>
#include <sstream>

#include "dense_ops.hpp"
#include "litefat/errors.hpp"

namespace litefat::detail {

void matmul_nn(double* out, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
  // i-k-j order: contiguous inner loop, k still ascends per output element.
  for (std::size_t i = 0; i < m; ++i) {
    double* out_row = out + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) out_row[j] = 0.0;
    }
    const double* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a_row[p];
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += aip * b_row[j];
    }
  }
}

void matmul_tn(double* out, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) {
    for (std::size_t idx = 0; idx < m * n; ++idx) out[idx] = 0.0;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* a_row = a + p * m;
    const double* b_row = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = a_row[i];
      double* out_row = out + i * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += api * b_row[j];
    }
  }
}

void matmul_nt(double* out, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    double* out_row = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* b_row = b + j * k;
      for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      if (accumulate) {
        out_row[j] += acc;
      } else {
        out_row[j] = acc;
      }
    }
  }
}

void channel_mix_forward(numkit::SeqTensor& y, const numkit::SeqTensor& x,
                         const numkit::DenseMatrix& w, bool accumulate) {
  const std::size_t steps = x.steps;
  for (std::size_t n = 0; n < x.nodes; ++n) {
    for (std::size_t o = 0; o < y.channels; ++o) {
      double* y_row = &y.at(n, o, 0);
      if (!accumulate) {
        for (std::size_t t = 0; t < steps; ++t) y_row[t] = 0.0;
      }
      for (std::size_t i = 0; i < x.channels; ++i) {
        const double wio = w.at(i, o);
        const double* x_row = &x.at(n, i, 0);
        for (std::size_t t = 0; t < steps; ++t) y_row[t] += wio * x_row[t];
      }
    }
  }
}

void channel_mix_backward_data(numkit::SeqTensor& dx,
                               const numkit::SeqTensor& dy,
                               const numkit::DenseMatrix& w, bool accumulate) {
  const std::size_t steps = dx.steps;
  for (std::size_t n = 0; n < dx.nodes; ++n) {
    for (std::size_t i = 0; i < dx.channels; ++i) {
      double* dx_row = &dx.at(n, i, 0);
      if (!accumulate) {
        for (std::size_t t = 0; t < steps; ++t) dx_row[t] = 0.0;
      }
      for (std::size_t o = 0; o < dy.channels; ++o) {
        const double wio = w.at(i, o);
        const double* dy_row = &dy.at(n, o, 0);
        for (std::size_t t = 0; t < steps; ++t) dx_row[t] += wio * dy_row[t];
      }
    }
  }
}

void channel_mix_backward_weight(numkit::DenseMatrix& dw,
                                 const numkit::SeqTensor& x,
                                 const numkit::SeqTensor& dy) {
  const std::size_t steps = x.steps;
  for (std::size_t i = 0; i < x.channels; ++i) {
    for (std::size_t o = 0; o < dy.channels; ++o) {
      double acc = 0.0;
      for (std::size_t n = 0; n < x.nodes; ++n) {
        const double* x_row = &x.at(n, i, 0);
        const double* dy_row = &dy.at(n, o, 0);
        for (std::size_t t = 0; t < steps; ++t) acc += x_row[t] * dy_row[t];
      }
      dw.at(i, o) += acc;
    }
  }
}

void conv_forward(numkit::SeqTensor& y, const numkit::SeqTensor& x,
                  const numkit::ConvFilter& f) {
  const std::size_t steps = x.steps;
  for (std::size_t n = 0; n < x.nodes; ++n) {
    for (std::size_t o = 0; o < f.out_channels; ++o) {
      double* y_row = &y.at(n, o, 0);
      const double bo = f.bias[o];
      for (std::size_t t = 0; t < steps; ++t) y_row[t] = bo;
      for (std::size_t i = 0; i < f.in_channels; ++i) {
        const double* x_row = &x.at(n, i, 0);
        for (std::size_t s = 0; s < f.taps; ++s) {
          const double wois = f.w(o, i, s);
          const std::size_t shift = f.dilation * s;
          if (shift >= steps) continue;
          for (std::size_t t = shift; t < steps; ++t) {
            y_row[t] += wois * x_row[t - shift];
          }
        }
      }
    }
  }
}

void conv_backward_data(numkit::SeqTensor& dx, const numkit::SeqTensor& dy,
                        const numkit::ConvFilter& f, bool accumulate) {
  if (!accumulate) {
    for (double& v : dx.data) v = 0.0;
  }
  const std::size_t steps = dx.steps;
  for (std::size_t n = 0; n < dx.nodes; ++n) {
    for (std::size_t o = 0; o < f.out_channels; ++o) {
      const double* dy_row = &dy.at(n, o, 0);
      for (std::size_t i = 0; i < f.in_channels; ++i) {
        double* dx_row = &dx.at(n, i, 0);
        for (std::size_t s = 0; s < f.taps; ++s) {
          const double wois = f.w(o, i, s);
          const std::size_t shift = f.dilation * s;
          if (shift >= steps) continue;
          for (std::size_t t = shift; t < steps; ++t) {
            dx_row[t - shift] += wois * dy_row[t];
          }
        }
      }
    }
  }
}

void conv_backward_filter(numkit::ConvFilter& df, const numkit::SeqTensor& x,
                          const numkit::SeqTensor& dy) {
  const std::size_t steps = x.steps;
  for (std::size_t o = 0; o < df.out_channels; ++o) {
    double acc_b = 0.0;
    for (std::size_t n = 0; n < x.nodes; ++n) {
      const double* dy_row = &dy.at(n, o, 0);
      for (std::size_t t = 0; t < steps; ++t) acc_b += dy_row[t];
    }
    df.bias[o] += acc_b;
    for (std::size_t i = 0; i < df.in_channels; ++i) {
      for (std::size_t s = 0; s < df.taps; ++s) {
        const std::size_t shift = df.dilation * s;
        if (shift >= steps) continue;
        double acc = 0.0;
        for (std::size_t n = 0; n < x.nodes; ++n) {
          const double* dy_row = &dy.at(n, o, 0);
          const double* x_row = &x.at(n, i, 0);
          for (std::size_t t = shift; t < steps; ++t) {
            acc += dy_row[t] * x_row[t - shift];
          }
        }
        df.w(o, i, s) += acc;
      }
    }
  }
}

}  // namespace litefat::detail

namespace litefat::numkit {

double apply_activation(Activation kind, double x) {
  switch (kind) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kSigmoid:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Activation::kIdentity:
      return x;
  }
  return x;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) {
    std::ostringstream msg;
    msg << "matmul: shapes " << a.rows << "x" << a.cols << " and " << b.rows
        << "x" << b.cols << " do not chain";
    throw ShapeError(msg.str());
  }
  DenseMatrix out(a.rows, b.cols);
  detail::matmul_nn(out.data.data(), a.data.data(), b.data.data(), a.rows,
                    a.cols, b.cols, false);
  return out;
}

DenseMatrix pointwise_activation(Activation kind, const DenseMatrix& x) {
  DenseMatrix out = x;
  for (double& v : out.data) v = apply_activation(kind, v);
  return out;
}

SeqTensor pointwise_activation(Activation kind, const SeqTensor& x) {
  SeqTensor out = x;
  for (double& v : out.data) v = apply_activation(kind, v);
  return out;
}

DenseMatrix softmax_rows(const DenseMatrix& x) {
  DenseMatrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double max_v = x.at(i, 0);
    for (std::size_t j = 1; j < x.cols; ++j) max_v = std::max(max_v, x.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double e = std::exp(x.at(i, j) - max_v);
      out.at(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < x.cols; ++j) out.at(i, j) /= sum;
  }
  return out;
}

SeqTensor dilated_causal_conv(const SeqTensor& x, const ConvFilter& f) {
  if (x.channels != f.in_channels) {
    std::ostringstream msg;
    msg << "dilated_causal_conv: input has " << x.channels
        << " channels, filter expects " << f.in_channels;
    throw ShapeError(msg.str());
  }
  SeqTensor y(x.nodes, f.out_channels, x.steps);
  detail::conv_forward(y, x, f);
  return y;
}

std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double h) {
  if (!(h > 0.0)) throw InputError("finite_difference_grad: step must be > 0");
  std::vector<double> work(params.begin(), params.end());
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double saved = work[i];
    work[i] = saved + h;
    const double up = loss_fn(work);
    work[i] = saved - h;
    const double down = loss_fn(work);
    work[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_grad: non-finite loss value");
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace litefat::numkit
