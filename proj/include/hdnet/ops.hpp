#pragma once

#include <vector>

#include "hdnet/tape.hpp"
#include "hdnet/tensor.hpp"

namespace hdnet::ops {

// Elementwise
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double c);
Tensor relu(Tape& tape, const Tensor& x);
Tensor softplus(Tape& tape, const Tensor& x);
Tensor abs(Tape& tape, const Tensor& x);
// log(x + eps), the epsilon guards cross-entropy against log(0)
Tensor log_eps(Tape& tape, const Tensor& x, double eps = 1e-12);
// Elementwise product with a constant buffer (no gradient into the mask).
Tensor mul_const(Tape& tape, const Tensor& x, const std::vector<double>& mask);

// Linear algebra
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);  // [n,k]x[k,m]+[m]

// Convolution on [N,C,H,W] with weight [F,C,kh,kw] and optional bias [F].
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b,
              int stride, int pad);

// Batch normalization over all axes except `channel_axis`.
// Training mode uses batch statistics and updates the running buffers
// (momentum-weighted, no gradient); eval mode is an affine map using the
// running statistics.
Tensor batchnorm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool training,
                 double momentum, double eps, std::size_t channel_axis);

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis);

// Resampling on [N,C,H,W]
Tensor upsample_nearest(Tape& tape, const Tensor& x, int factor);
Tensor upsample_bilinear(Tape& tape, const Tensor& x, int factor);
Tensor avgpool2x2(Tape& tape, const Tensor& x);
Tensor global_avgpool(Tape& tape, const Tensor& x);  // [N,C,H,W] -> [N,C]

Tensor concat(Tape& tape, const std::vector<Tensor>& xs, std::size_t axis);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// Reductions
Tensor sum_all(Tape& tape, const Tensor& x);   // -> scalar [1]
Tensor mean_all(Tape& tape, const Tensor& x);  // -> scalar [1]
Tensor mean_axis1(Tape& tape, const Tensor& x);  // [N,J,C] -> [N,C]

// x / sum(x over `axis`), per remaining index tuple.
Tensor normalize_sum(Tape& tape, const Tensor& x, std::size_t axis);

// Per-sample mixing with a constant matrix: out[n,i,c] = sum_j M[i,j] x[n,j,c].
Tensor graph_mix(Tape& tape, const Tensor& x, const std::vector<double>& m, std::size_t rows);

// Heatmap-weighted feature pooling: out[n,j,c] = sum_hw H[n,j,hw] F[n,c,hw].
Tensor attention_pool(Tape& tape, const Tensor& heatmaps, const Tensor& features);

}  // namespace hdnet::ops
