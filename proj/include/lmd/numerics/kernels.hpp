#pragma once

// Graph-free forward/backward kernels. Image batches are [N, C, H, W];
// convolution weights are [Cout, Cin, K, K] with odd K, stride 1 and zero
// padding that preserves H x W. Backward kernels accumulate into their
// gradient outputs.

#include "lmd/numerics/tensor.hpp"

namespace lmd::numerics::kernels {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

Tensor silu(const Tensor& x);
void silu_backward(const Tensor& x, const Tensor& grad_out, Tensor& grad_x);

// y[n, o] = sum_i w[o, i] * x[n, i] + b[o]
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
void affine_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b);

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b);

// 2x2 mean pooling; odd trailing rows/columns are dropped.
Tensor mean_pool2(const Tensor& x);
void mean_pool2_backward(const Tensor& grad_out, Tensor& grad_x);

// Nearest-neighbour 2x upsampling.
Tensor upsample2(const Tensor& x);
void upsample2_backward(const Tensor& grad_out, Tensor& grad_x);

Tensor concat_channels(const Tensor& a, const Tensor& b);

// x[n, c, h, w] + v[n, c]
Tensor add_channel_bias(const Tensor& x, const Tensor& v);
void add_channel_bias_backward(const Tensor& grad_out, Tensor& grad_v);

float sum_of_squares(const Tensor& x);
float mean(const Tensor& x);

}  // namespace lmd::numerics::kernels
