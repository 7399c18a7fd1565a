#pragma once

// Differentiable operations. Shape conventions:
//   images / feature maps   [N, C, H, W]
//   convolution kernels     [C_out, C_in, kH, kW]
//   embedding batches       [N, D]
// Element-wise binary ops require identical shapes.

#include <cstddef>
#include <vector>

#include "shapeshot/tensor.hpp"

namespace shapeshot {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& x);
// Natural log; inputs must be strictly positive.
Tensor log(const Tensor& x);
// Subgradient 0 at x == 0.
Tensor sqrt(const Tensor& x);

// Full reductions to a single-element tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// [M,K] x [K,N] -> [M,N]
Tensor matmul(const Tensor& a, const Tensor& b);

// Rank 1: over the vector. Rank 2: independently over each row.
Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);

// [N,C,H,W] -> [N,C,H/2,W/2] (floor), window 2x2 stride 2; ties go to the
// first element in row-major window order.
Tensor max_pool2x2(const Tensor& x);
// [N,C,H,W] -> [N,C]
Tensor global_avg_pool(const Tensor& x);

// Cross-correlation (no kernel flip), zero padding on all four sides.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);
// Adds bias[c] to every element of channel c; x is [N,C,H,W], bias is [C].
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

Tensor reshape(const Tensor& x, Shape shape);

// Squared euclidean distances between rows: [N,D] x [K,D] -> [N,K].
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

// Means of consecutive row groups: [N,D] -> [G,D] where group g spans
// group_sizes[g] rows. Computed as (sum of rows) / size.
Tensor group_mean(const Tensor& x, const std::vector<std::size_t>& group_sizes);

// out[i] = x[i, index[i]] for a [N,K] matrix.
Tensor pick(const Tensor& x, const std::vector<std::size_t>& index);

}  // namespace shapeshot
