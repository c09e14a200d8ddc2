// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/encoder.hpp"

#include <cmath>
#include <string>

#include "dc/ops.hpp"
#include "dc/rng.hpp"

namespace dc {

namespace {

Tensor init_weight(Rng& rng, std::size_t fan_in, std::vector<std::size_t> shape) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

}  // namespace

Image synth_image(std::uint64_t seed, std::size_t h, std::size_t w, std::size_t c) {
    Rng rng(seed);
    Image img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.data = Tensor::uniform({h, w, c}, rng, -1.0, 1.0);
    return img;
}

void FeatureStack::validate() const {
    if (entries.empty()) {
        fail(errc::bad_state, "feature stack has no entries");
    }
    const std::size_t n = entries[0].rows();
    const std::size_t d = entries[0].cols();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].rank() != 2 || entries[i].rows() != n || entries[i].cols() != d) {
            fail(errc::shape_mismatch, "stack entry " + std::to_string(i) + " has shape " +
                                           entries[i].shape_str() + ", expected [" + std::to_string(n) +
                                           "x" + std::to_string(d) + "]");
        }
    }
    if (grid.tokens() != n) {
        fail(errc::grid_mismatch, "grid " + std::to_string(grid.h) + "x" + std::to_string(grid.w) +
                                      " does not cover " + std::to_string(n) + " tokens");
    }
    for (std::size_t l = 0; l < attn.size(); ++l) {
        const Tensor& a = attn[l];
        if (a.rank() != 3 || a.shape[1] != n || a.shape[2] != n) {
            fail(errc::shape_mismatch, "attention tensor " + std::to_string(l) + " has shape " +
                                           a.shape_str());
        }
        for (std::size_t h = 0; h < a.shape[0]; ++h) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    s += a.at3(h, i, j);
                }
                if (std::abs(s - 1.0) > 1e-6) {
                    fail(errc::bad_state, "attention row does not sum to 1 (block " +
                                              std::to_string(l + 1) + ", head " + std::to_string(h) + ")");
                }
            }
        }
    }
}

EncoderParams EncoderParams::init(std::uint64_t seed, std::size_t patch, std::size_t depth,
                                  std::size_t heads, std::size_t dim, std::size_t img_h,
                                  std::size_t img_w, std::size_t img_c) {
    if (patch == 0 || img_h % patch != 0 || img_w % patch != 0) {
        fail(errc::divisibility, "patch size " + std::to_string(patch) + " does not divide image " +
                                     std::to_string(img_h) + "x" + std::to_string(img_w));
    }
    if (heads == 0 || dim % heads != 0) {
        fail(errc::bad_config, "encoder dim " + std::to_string(dim) + " not divisible by heads " +
                                   std::to_string(heads));
    }
    const std::size_t n = (img_h / patch) * (img_w / patch);
    const std::size_t pin = patch * patch * img_c;
    Rng rng(seed);
    EncoderParams p;
    p.patch = patch;
    p.depth = depth;
    p.heads = heads;
    p.dim = dim;
    p.seed = seed;
    p.patch_weight = init_weight(rng, pin, {pin, dim});
    p.patch_bias = Tensor::zeros({dim});
    p.pos_embed = Tensor::uniform({n, dim}, rng, -0.02, 0.02);
    p.blocks.resize(depth);
    const std::size_t hidden = 4 * dim;
    for (auto& blk : p.blocks) {
        blk.w_q = init_weight(rng, dim, {dim, dim});
        blk.b_q = Tensor::zeros({dim});
        blk.w_k = init_weight(rng, dim, {dim, dim});
        blk.b_k = Tensor::zeros({dim});
        blk.w_v = init_weight(rng, dim, {dim, dim});
        blk.b_v = Tensor::zeros({dim});
        blk.w_o = init_weight(rng, dim, {dim, dim});
        blk.b_o = Tensor::zeros({dim});
        blk.ln1_gamma = Tensor::full({dim}, 1.0);
        blk.ln1_beta = Tensor::zeros({dim});
        blk.ln2_gamma = Tensor::full({dim}, 1.0);
        blk.ln2_beta = Tensor::zeros({dim});
        blk.w_up = init_weight(rng, dim, {dim, hidden});
        blk.b_up = Tensor::zeros({hidden});
        blk.w_down = init_weight(rng, hidden, {hidden, dim});
        blk.b_down = Tensor::zeros({dim});
    }
    return p;
}

namespace {

// softmax over the last axis of one row, max-subtracted
void softmax_row(double* row, std::size_t n) {
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) {
        mx = std::max(mx, row[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        row[j] /= sum;
    }
}

// multi-head self-attention on [N x D]; returns output, optionally fills attn [heads x N x N]
Tensor self_attention(const Tensor& x, const EncoderBlock& blk, std::size_t heads, Tensor* attn_out) {
    const std::size_t n = x.rows(), d = x.cols();
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor q = linear_value(x, blk.w_q, blk.b_q);
    Tensor k = linear_value(x, blk.w_k, blk.b_k);
    Tensor v = linear_value(x, blk.w_v, blk.b_v);
    Tensor mixed({n, d});
    if (attn_out) {
        *attn_out = Tensor({heads, n, n});
    }
    std::vector<double> logits(n);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * dh;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                    dot += q.at(i, off + c) * k.at(j, off + c);
                }
                logits[j] = dot * scale;
            }
            softmax_row(logits.data(), n);
            if (attn_out) {
                for (std::size_t j = 0; j < n; ++j) {
                    attn_out->at3(h, i, j) = logits[j];
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                const double a = logits[j];
                for (std::size_t c = 0; c < dh; ++c) {
                    mixed.at(i, off + c) += a * v.at(j, off + c);
                }
            }
        }
    }
    return linear_value(mixed, blk.w_o, blk.b_o);
}

}  // namespace

FeatureStack toy_vit_forward(const Image& img, const EncoderParams& p, bool retain_attention) {
    if (p.patch == 0 || img.height % p.patch != 0 || img.width % p.patch != 0) {
        fail(errc::divisibility, "image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                     " not divisible by patch " + std::to_string(p.patch));
    }
    const std::size_t hp = img.height / p.patch;
    const std::size_t wp = img.width / p.patch;
    const std::size_t n = hp * wp;
    const std::size_t c = img.channels;
    const std::size_t pin = p.patch * p.patch * c;

    // stem: flatten each non-overlapping patch and project, then add positions
    Tensor patches({n, pin});
    for (std::size_t pr = 0; pr < hp; ++pr) {
        for (std::size_t pc = 0; pc < wp; ++pc) {
            const std::size_t tok = pr * wp + pc;
            std::size_t out = 0;
            for (std::size_t dy = 0; dy < p.patch; ++dy) {
                for (std::size_t dx = 0; dx < p.patch; ++dx) {
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        patches.at(tok, out++) =
                            img.data.at3(pr * p.patch + dy, pc * p.patch + dx, ch);
                    }
                }
            }
        }
    }
    require_shape(p.patch_weight, {pin, p.dim}, "patch projection weight");
    require_shape(p.pos_embed, {n, p.dim}, "position embedding");
    Tensor x = linear_value(patches, p.patch_weight, p.patch_bias);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        x.data[i] += p.pos_embed.data[i];
    }

    FeatureStack s;
    s.grid = {hp, wp};
    s.entries.reserve(p.depth + 1);
    s.entries.push_back(x);

    for (const auto& blk : p.blocks) {
        // pre-norm attention sublayer
        Tensor normed = layer_norm_value(x, blk.ln1_gamma, blk.ln1_beta);
        Tensor attn_tensor;
        Tensor att = self_attention(normed, blk, p.heads, retain_attention ? &attn_tensor : nullptr);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            x.data[i] += att.data[i];
        }
        // pre-norm MLP sublayer
        Tensor normed2 = layer_norm_value(x, blk.ln2_gamma, blk.ln2_beta);
        Tensor up = gelu_value(linear_value(normed2, blk.w_up, blk.b_up));
        Tensor down = linear_value(up, blk.w_down, blk.b_down);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            x.data[i] += down.data[i];
        }
        if (retain_attention) {
            s.attn.push_back(std::move(attn_tensor));
        }
        s.entries.push_back(x);
    }
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        require_finite(s.entries[i], "encoder entry " + std::to_string(i));
    }
    return s;
}

FeatureStack synth_stack(std::uint64_t seed, std::size_t depth, std::size_t n, std::size_t dim,
                         Grid grid) {
    if (grid.tokens() != n) {
        fail(errc::grid_mismatch, "synth_stack: grid " + std::to_string(grid.h) + "x" +
                                      std::to_string(grid.w) + " does not cover " + std::to_string(n) +
                                      " tokens");
    }
    Rng rng(seed);
    FeatureStack s;
    s.grid = grid;
    s.entries.reserve(depth + 1);
    for (std::size_t l = 0; l < depth + 1; ++l) {
        s.entries.push_back(Tensor::uniform({n, dim}, rng, -1.0, 1.0));
    }
    return s;
}

Tensor dump_attention(const FeatureStack& s, std::size_t layer) {
    if (layer == 0 || layer > s.depth()) {
        fail(errc::out_of_bounds, "attention layer " + std::to_string(layer) + " outside 1.." +
                                      std::to_string(s.depth()));
    }
    if (s.attn.size() != s.depth()) {
        fail(errc::bad_state, "attention was not retained at forward time");
    }
    const Tensor& a = s.attn[layer - 1];
    const std::size_t heads = a.shape[0], n = a.shape[1];
    Tensor mean({n, n});
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                mean.at(i, j) += a.at3(h, i, j);
            }
        }
    }
    for (auto& v : mean.data) {
        v /= static_cast<double>(heads);
    }
    return mean;
}

}  // namespace dc
