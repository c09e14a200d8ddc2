// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dc/connector.hpp"

namespace dc {

// Stack geometry of a (possibly hypothetical) encoder: entry count is
// stem-inclusive, so depth = entries - 1.
struct StackGeometry {
    std::string name;
    std::size_t entries = 0;
    std::size_t tokens = 0;
    std::size_t dim = 0;  // D_v
    Grid grid;

    std::size_t depth() const { return entries - 1; }
};

// Built-ins: clip-l-336 (25 entries, 576 tokens, D_v=1024),
// siglip-so-384 (28 entries, 729 tokens, D_v=1152; the 27x27 grid assumes a
// 14px patch at 384px), desk (7 entries, 16 tokens, D_v=8).
StackGeometry geometry_by_name(const std::string& name);
std::vector<std::string> geometry_names();

FeatureStack synth_stack_for(const StackGeometry& geo, std::uint64_t seed);

// Analytic stand-in for the downstream decoder: per layer,
// 24*n*d^2 (QKVO + 4x FFN matmuls) + 4*n^2*d (score and mixing matmuls),
// multiply-add counted as two flops.
struct LlmProxy {
    std::size_t layers = 32;
    std::size_t dim = 4096;  // D_t of the proxy
};

std::size_t llm_proxy_flops(std::size_t tokens, const LlmProxy& proxy);

// Exact token/parameter counts from the connector shape laws plus analytic
// flop estimates, each compared against the named baseline: the final-layer
// MLP path (single selected block, no pooling, no downsampling) on the same
// geometry and target_dim.
struct CostReport {
    std::string geometry;
    std::string variant;
    std::size_t tokens_out = 0;
    std::size_t tokens_baseline = 0;
    std::size_t connector_params = 0;
    std::size_t connector_params_baseline = 0;
    std::size_t connector_flops = 0;
    std::size_t connector_flops_baseline = 0;
    std::size_t llm_proxy_flops = 0;
    std::size_t llm_proxy_flops_baseline = 0;
    LlmProxy proxy;
    // both orientations are reported; reduction/speedup are baseline/this
    double token_ratio = 0.0;
    double token_reduction = 0.0;
    double llm_flop_ratio = 0.0;
    double llm_speedup = 0.0;
    // human-readable statements of the closed forms used above
    std::vector<std::string> formulas;
};

CostReport stats(const ConnectorConfig& cfg, const StackGeometry& geo, LlmProxy proxy = {});

// flop estimate for one connector forward pass (stated in CostReport::formulas)
std::size_t connector_flop_estimate(const ConnectorConfig& cfg, const StackGeometry& geo);

}  // namespace dc
