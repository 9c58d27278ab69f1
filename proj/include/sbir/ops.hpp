#pragma once

#include "sbir/tensor.hpp"

namespace sbir {

// Elementwise / arithmetic -------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);

// Shape manipulation -------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
Tensor flatten(const Tensor& a);
Tensor transpose2d(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int row_begin, int row_end);
Tensor slice_cols(const Tensor& a, int col_begin, int col_end);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Reductions ---------------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Linear algebra -----------------------------------------------------------

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

/// Adds a length-n bias vector to every row of an [m x n] matrix.
Tensor add_rowwise(const Tensor& a, const Tensor& bias);

// Normalization ------------------------------------------------------------

/// Row-wise softmax of a 2D tensor (1D treated as a single row).
/// Shift-by-max guarded; each output row sums to 1.
Tensor softmax(const Tensor& a);

/// Row-wise log-softmax, for numerically stable cross-entropy.
Tensor log_softmax(const Tensor& a);

/// Normalizes each row of an [m x n] tensor to zero mean / unit variance,
/// then applies learned per-feature gain and shift (both length n).
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& shift,
                  double eps = 1e-5);

// Image ops (single image, [C x H x W] stored row-major) --------------------

/// Cross-correlation with zero padding, square stride. kernels are
/// [C_out x C_in x kh x kw]; output [C_out x H' x W'] with
/// H' = floor((H + 2p - kh) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding);

/// Adds a per-channel bias (length C) to a [C x H x W] feature map.
Tensor add_channel_bias(const Tensor& input, const Tensor& bias);

/// Normalizes each channel map of a [C x H x W] tensor to zero mean / unit
/// variance over its H*W cells, then applies per-channel gain and shift
/// (both length C). The statistics are spatial aggregates, so the op
/// commutes with horizontal mirroring.
Tensor instance_norm(const Tensor& input, const Tensor& gain, const Tensor& shift,
                     double eps = 1e-5);

/// Output cell (i,j) averages input rows [floor(i*H/oh), ceil((i+1)*H/oh))
/// and columns analogously; 1x1 output is the per-channel global mean.
Tensor adaptive_avg_pool2d(const Tensor& input, int out_h, int out_w);

/// Reindexes flat elements of `a` into a new shape: out[i] = a[indices[i]].
/// Backward scatter-adds, so repeated indices are allowed.
Tensor gather(const Tensor& a, Shape out_shape, std::vector<std::int64_t> indices);

// Losses -------------------------------------------------------------------

/// Mean negative log-likelihood of the true classes; logits [B x C],
/// labels length B in [0, C).
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Squared Euclidean distance between two equally shaped tensors.
Tensor squared_distance(const Tensor& a, const Tensor& b);

}  // namespace sbir
