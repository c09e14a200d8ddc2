// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "dc/tensor.hpp"

namespace dc {

// Value plus adjoint closure. The closure maps the upstream gradient (same
// shape as value) to gradients w.r.t. each differentiable argument of the
// producing op, in the argument order documented on that op. Adjoints are
// hand-composed per pipeline; there is no graph or tape.
struct GradPair {
    Tensor value;
    std::function<std::vector<Tensor>(const Tensor& upstream)> backward;
};

enum class Axis { token, channel };

// ---- forward-only kernels --------------------------------------------------
// The GradPair ops below compute their value through these, so a pure forward
// pass and a gradient pass produce bit-identical values.

Tensor linear_value(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor gelu_value(const Tensor& x);
Tensor layer_norm_value(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor avg_pool_tokens_value(const Tensor& x, std::size_t alpha);
Tensor conv1d_tokens_value(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor conv2d_grid_value(const Tensor& x, Grid grid, const Tensor& w, const Tensor& b);
Tensor bilinear_resize_value(const Tensor& x, Grid grid_in, Grid grid_out);
Tensor concat_value(const std::vector<Tensor>& parts, Axis axis);

// ---- differentiable ops ----------------------------------------------------

// y[i,j] = sum_k x[i,k] w[k,j] + b[j]; backward -> {dx, dw, db}
GradPair linear(const Tensor& x, const Tensor& w, const Tensor& b);

// elementwise x * Phi(x), exact erf formulation; backward -> {dx}
GradPair gelu(const Tensor& x);

// per-row standardization over channels, then affine; backward -> {dx, dgamma, dbeta}
GradPair layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// output token j = mean of input tokens [j*alpha, (j+1)*alpha); backward -> {dx}
GradPair avg_pool_tokens(const Tensor& x, std::size_t alpha);

// non-overlapping windows of k tokens mapped D->D, stride == k;
// w is [D_out x D_in x k]; backward -> {dx, dw, db}
GradPair conv1d_tokens(const Tensor& x, const Tensor& w, const Tensor& b);

// tokens viewed as grid, 3x3 zero-padded stride-1 convolution, w is
// [D_out x D_in x 3 x 3]; backward -> {dx, dw, db}
GradPair conv2d_grid(const Tensor& x, Grid grid, const Tensor& w, const Tensor& b);

// half-pixel-center bilinear resample of the token grid; source coordinate of
// output row i is (i+0.5)*Hp/Hq - 0.5 clamped to [0, Hp-1]; exact on channels
// affine in grid coordinates; backward -> {dx}
GradPair bilinear_resize(const Tensor& x, Grid grid_in, Grid grid_out);

// parts juxtaposed along the chosen axis; backward splits the upstream
// gradient -> one tensor per part
GradPair concat(const std::vector<Tensor>& parts, Axis axis);

// ---- verification oracle ---------------------------------------------------

// Central differences (f(x+eps e_i) - f(x-eps e_i)) / (2 eps) per coordinate.
// Throws errc::non_finite if f produces a non-finite value near x.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double eps = 1e-4);

}  // namespace dc
