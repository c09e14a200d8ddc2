// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dc/tensor.hpp"

namespace dc {

// Raw image, channels innermost: data is [H x W x C].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    Tensor data;
};

Image synth_image(std::uint64_t seed, std::size_t h, std::size_t w, std::size_t c);

// Stem-inclusive stack of per-layer token matrices from one encoder pass.
// entries[0] is the patch-embedding (stem) output, entries[i] the output of
// block i, so entries.size() == depth + 1 and the final layer is entries.back().
// attn, when retained, holds one [heads x N x N] tensor per block.
struct FeatureStack {
    std::vector<Tensor> entries;  // each [N x D_v]
    Grid grid;
    std::vector<Tensor> attn;

    std::size_t depth() const { return entries.empty() ? 0 : entries.size() - 1; }
    std::size_t tokens() const { return entries.empty() ? 0 : entries[0].rows(); }
    std::size_t dim() const { return entries.empty() ? 0 : entries[0].cols(); }
    const Tensor& final_layer() const { return entries.back(); }

    void validate() const;  // homogeneous entries, grid covers tokens, attention rows sum to 1
};

// Toy pre-norm patch transformer. It exists to produce realistic multi-layer
// stacks at desk scale; there is no class token, so N = (H/patch)*(W/patch).
struct EncoderBlock {
    Tensor w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;  // attention, all [D_v x D_v] / [D_v]
    Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
    Tensor w_up, b_up, w_down, b_down;  // MLP, hidden = 4*D_v
};

struct EncoderParams {
    std::size_t patch = 0;
    std::size_t depth = 0;
    std::size_t heads = 0;
    std::size_t dim = 0;  // D_v, divisible by heads
    std::uint64_t seed = 0;
    Tensor patch_weight;  // [(patch*patch*C) x D_v]
    Tensor patch_bias;    // [D_v]
    Tensor pos_embed;     // [N x D_v]
    std::vector<EncoderBlock> blocks;

    // random initialization for an h x w x c image geometry, from `seed`
    static EncoderParams init(std::uint64_t seed, std::size_t patch, std::size_t depth,
                              std::size_t heads, std::size_t dim, std::size_t img_h,
                              std::size_t img_w, std::size_t img_c);
};

// Full forward pass; attention tensors are retained when `retain_attention`.
FeatureStack toy_vit_forward(const Image& img, const EncoderParams& p, bool retain_attention = false);

// Deterministic pseudo-random stack: depth+1 entries of [n x dim], uniform in
// [-1, 1). Same seed gives a bit-identical stack.
FeatureStack synth_stack(std::uint64_t seed, std::size_t depth, std::size_t n, std::size_t dim,
                         Grid grid);

// Head-averaged attention matrix of block `layer` (1-based, 1..depth).
// Requires attention retained at forward time.
Tensor dump_attention(const FeatureStack& s, std::size_t layer);

}  // namespace dc
