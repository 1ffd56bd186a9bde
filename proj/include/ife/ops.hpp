#pragma once

#include "ife/tensor.hpp"

namespace ife {

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor square(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
// Natural log; errors on non-positive input.
Tensor log(const Tensor& a);

// out = weight * input + bias with weight M x N, input length N, bias length M.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Applies the same linear map to every row of a L x N matrix, giving L x M.
Tensor linear_rows(const Tensor& rows, const Tensor& weight, const Tensor& bias);

// Valid (no padding) 2-D convolution, input C_in x H x W, weight
// C_out x C_in x K x K, bias C_out. Output C_out x H' x W' with
// H' = floor((H-K)/stride)+1, which must be >= 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride);

// Zero-pads the two spatial dims of a C x H x W tensor by `pad` on each side.
Tensor pad2d(const Tensor& input, int pad);

// Max pooling over k x k windows with the given stride; gradient routes to
// the argmax element, ties broken to the lowest flat index.
Tensor maxpool2d(const Tensor& input, int kernel, int stride);

// Partitions the spatial dims into out_h x out_w contiguous near-equal bins
// (bin i spans [floor(i*H/out_h), floor((i+1)*H/out_h))) and takes the max of
// each. Errors if out dims exceed input dims.
Tensor adaptive_maxpool(const Tensor& input, int out_h, int out_w);

// Numerically stable softmax over a length-L vector. Errors on non-finite
// input. Output is nonnegative and sums to 1.
Tensor softmax(const Tensor& input);
// log(softmax(input)) computed without intermediate underflow.
Tensor log_softmax(const Tensor& input);

// C x H x W -> (H*W) x C, one row per spatial location.
Tensor spatial_flatten(const Tensor& input);
// Inverse of spatial_flatten.
Tensor spatial_unflatten(const Tensor& rows, int channels, int h, int w);

// Row i of `rows` scaled by weights[i].
Tensor scale_rows(const Tensor& rows, const Tensor& weights);

// Copy-reshape; element order is preserved.
Tensor reshape(const Tensor& a, Shape shape);
Tensor flatten(const Tensor& a);

// Vector + scalar broadcast.
Tensor add_broadcast(const Tensor& vec, const Tensor& scalar);
Tensor sub_broadcast(const Tensor& vec, const Tensor& scalar);

Tensor pick(const Tensor& vec, int index);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Mean elementwise Huber loss: 0.5 d^2 for |d| <= delta, else
// delta*(|d| - 0.5*delta).
Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta = 1.0);

inline Tensor residual_add(const Tensor& a, const Tensor& b) { return add(a, b); }

int argmax(const Tensor& v);

}  // namespace ife
