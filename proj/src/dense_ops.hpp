#pragma once

// Raw kernels shared by the public numeric ops and the model forward and
// backward passes. Every kernel accumulates each output element over its
// shared index in ascending order, so runs are bit-reproducible.

#include <cstddef>

#include "litefat/numkit.hpp"

namespace litefat::detail {

// out[m x n] (+)= a[m x k] * b[k x n]
void matmul_nn(double* out, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate);

// out[m x n] (+)= a^T * b with a[k x m], b[k x n]
void matmul_tn(double* out, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate);

// out[m x n] (+)= a * b^T with a[m x k], b[n x k]
void matmul_nt(double* out, const double* a, const double* b, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate);

// y[n,o,t] (+)= sum_i x[n,i,t] * w(i,o), with w a [in x out] matrix.
void channel_mix_forward(numkit::SeqTensor& y, const numkit::SeqTensor& x,
                         const numkit::DenseMatrix& w, bool accumulate);

// dx[n,i,t] (+)= sum_o w(i,o) * dy[n,o,t]
void channel_mix_backward_data(numkit::SeqTensor& dx,
                               const numkit::SeqTensor& dy,
                               const numkit::DenseMatrix& w, bool accumulate);

// dw(i,o) += sum_{n,t} x[n,i,t] * dy[n,o,t]
void channel_mix_backward_weight(numkit::DenseMatrix& dw,
                                 const numkit::SeqTensor& x,
                                 const numkit::SeqTensor& dy);

void conv_forward(numkit::SeqTensor& y, const numkit::SeqTensor& x,
                  const numkit::ConvFilter& f);

// dx (+)= gradient of the conv output w.r.t. its input, pulled back through f.
void conv_backward_data(numkit::SeqTensor& dx, const numkit::SeqTensor& dy,
                        const numkit::ConvFilter& f, bool accumulate);

// dw/db += filter gradients for the pair (x, dy).
void conv_backward_filter(numkit::ConvFilter& df, const numkit::SeqTensor& x,
                          const numkit::SeqTensor& dy);

}  // namespace litefat::detail
