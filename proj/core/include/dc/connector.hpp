// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dc/encoder.hpp"
#include "dc/fstk.hpp"
#include "dc/ops.hpp"

namespace dc {

// The six ways to fuse a multi-layer feature stack into one token sequence.
//   sti        : token-concatenate pooled shallow layers with the final layer
//   sti_conv1d : as sti, pooling replaced by one shared 1-D convolution
//   sci        : channel-concatenate selected layers
//   sci_conv2d : as sci, every selected layer first through one shared 3x3 conv
//   dci        : channel-concatenate grouped layer means with the final layer
//   dci_linear : as dci, grouped entries through shared LayerNorm+Linear first
enum class Variant { sti, sti_conv1d, sci, sci_conv2d, dci, dci_linear };

const char* variant_name(Variant v);
Variant variant_from_string(const std::string& s);  // case-insensitive, errc::bad_config
bool variant_is_token_integration(Variant v);       // sti family
bool variant_is_dense(Variant v);                   // dci family

struct ConnectorConfig {
    Variant variant = Variant::dci;
    // block indices l_1 < ... < l_K with l_K == depth; sparse variants only.
    // Block i produces stack entry i (entry 0 is the stem).
    std::vector<std::size_t> layers;
    std::size_t alpha = 1;             // pooling / conv stride, sti family
    std::size_t groups = 1;            // G, dci family
    std::size_t target_dim = 0;        // D_t
    std::size_t efficient_factor = 1;  // per-axis grid reduction, 1 = off

    // checks the config against a stack geometry; throws errc::bad_config /
    // errc::divisibility / errc::grid_mismatch
    void validate(std::size_t depth, std::size_t tokens, Grid grid) const;

    // projector input width for a stack of `depth` blocks and width d_v
    std::size_t projector_input_dim(std::size_t d_v, std::size_t depth) const;

    // token count after integration and the efficient stage
    std::size_t output_tokens(std::size_t n, Grid grid) const;

    // JSON object with keys: variant, layers, alpha, groups, target_dim,
    // efficient_factor
    static ConnectorConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// Stem-inclusive grouped-entry count for the dci family: all entries except
// the final block output, highest-indexed entries dropped until divisible by G.
std::size_t dci_grouped_entry_count(std::size_t depth, std::size_t groups);

struct ConnectorParams {
    Tensor w1, b1;  // [D_in x D_t], [D_t]
    Tensor w2, b2;  // [D_t x D_t],  [D_t]
    // aux parameters, present only for the parameterized variants; each is a
    // single tensor shared across all processed layers
    std::optional<Tensor> conv1d_w, conv1d_b;            // [D_v x D_v x alpha], [D_v]
    std::optional<Tensor> conv2d_w, conv2d_b;            // [D_v x D_v x 3 x 3], [D_v]
    std::optional<Tensor> norm_gamma, norm_beta;         // [D_v], [D_v]
    std::optional<Tensor> linear_w, linear_b;            // [D_v x D_v], [D_v]

    // weights uniform in +-1/sqrt(fan_in), biases zero, gamma one, drawn from
    // Rng(seed) in inventory order
    static ConnectorParams init(const ConnectorConfig& cfg, std::size_t d_v, std::size_t depth,
                                std::uint64_t seed);

    NamedTensors named() const;  // inventory order, see param_shapes
    static ConnectorParams from_named(const NamedTensors& tensors);
};

// mutable access by inventory name; errc::bad_config for unknown names,
// errc::bad_state when the aux slot is absent
Tensor& param_by_name(ConnectorParams& p, const std::string& name);

struct ParamSpec {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t count = 0;
};

// exact parameter inventory of a variant; total is the sum of counts
std::vector<ParamSpec> param_shapes(const ConnectorConfig& cfg, std::size_t d_v, std::size_t depth);
std::size_t param_total(const ConnectorConfig& cfg, std::size_t d_v, std::size_t depth);

struct VisualEmbedding {
    Tensor tokens;             // [N_out x D_t]
    std::optional<Grid> grid;  // token grid when spatially coherent (absent for sti)
};

// ---- projector ---------------------------------------------------------------

// linear -> gelu -> linear; backward -> {dx, dw1, db1, dw2, db2}
GradPair mlp_project(const Tensor& x, const ConnectorParams& p);
Tensor mlp_project_value(const Tensor& x, const ConnectorParams& p);

// ---- integration passes (forward) ---------------------------------------------

VisualEmbedding sti_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                              const ConnectorParams& p);
VisualEmbedding sti_conv_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                                   const ConnectorParams& p);
VisualEmbedding sci_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                              const ConnectorParams& p);
VisualEmbedding sci_conv_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                                   const ConnectorParams& p);
VisualEmbedding dci_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                              const ConnectorParams& p);
VisualEmbedding dci_linear_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                                     const ConnectorParams& p);

// grouped means GV_g over the stem-inclusive non-final entries, G groups of
// M consecutive entries each
std::vector<Tensor> dci_group(const FeatureStack& s, std::size_t groups);

// parameter-free bilinear downsampling of the token grid by f per axis,
// applied after projection; requires a grid (errc::bad_config for sti outputs)
VisualEmbedding efficient_downsample(const VisualEmbedding& e, std::size_t factor);

// dispatch on cfg.variant, then the efficient stage when factor > 1
VisualEmbedding connector_forward(const FeatureStack& s, const ConnectorConfig& cfg,
                                  const ConnectorParams& p);

// ---- gradients ----------------------------------------------------------------

// Exact adjoint of the full variant pipeline w.r.t. every parameter tensor,
// in inventory order. The stack is frozen: no gradient is produced for its
// entries. `upstream` must match the forward output shape.
NamedTensors connector_grads(const FeatureStack& s, const ConnectorConfig& cfg,
                             const ConnectorParams& p, const Tensor& upstream);

// forward that also returns the parameter adjoint closure; connector_forward
// and this produce bit-identical values
struct ConnectorTape {
    VisualEmbedding out;
    std::function<NamedTensors(const Tensor& upstream)> backward;
};
ConnectorTape connector_forward_with_grads(const FeatureStack& s, const ConnectorConfig& cfg,
                                           const ConnectorParams& p);

}  // namespace dc
