#pragma once

#include <vector>

#include "pfoa/nn/tensor.hpp"

namespace pfoa::nn {

/// 2-D cross-correlation with bias. input N x C x H x W, kernel K x C x kh x kw,
/// bias K (or undefined for none). Zero padding. Batch samples run in
/// parallel; weight gradients reduce in sample order, so results are
/// identical for any worker count.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
              int pad);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// 2x2 max pooling, stride 2. Requires even spatial dims. Backward routes to
/// the argmax, first index in row-major order on ties.
Tensor maxpool2(const Tensor& x);

/// Global average pooling N x C x H x W -> N x C.
Tensor gap(const Tensor& x);

/// x: N x D, weight: M x D, bias: M (or undefined) -> N x M.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Concatenation along the feature axis of 2-D tensors.
Tensor concat_features(const std::vector<Tensor>& parts);

/// N x C -> N x C x H x W, each channel a constant plane. Backward sums over
/// the spatial axes.
Tensor broadcast_spatial(const Tensor& v, int height, int width);

/// Elementwise sum; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);

/// Elementwise product. Also accepts a: N x 1 x H x W against
/// b: N x C x H x W (attention-map broadcast over channels).
Tensor mul(const Tensor& a, const Tensor& b);

/// Sum of all elements -> scalar.
Tensor sum(const Tensor& x);

/// Same data, new shape (numel must match). Backward is a pass-through.
Tensor reshape(const Tensor& x, Shape new_shape);

/// Mean over the batch of -alpha_t (1-p_t)^gamma log(p_t), p = sigmoid(logit).
/// alpha weights the positive class (1 disables weighting); gamma = 0 reduces
/// to binary cross-entropy. Stable at large |logit| via softplus.
Tensor focal_loss(const Tensor& logits, const std::vector<int>& labels, double gamma,
                  double alpha);

}  // namespace pfoa::nn
