// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/stats.hpp"

namespace dc {

StackGeometry geometry_by_name(const std::string& name) {
    if (name == "clip-l-336") {
        return {"clip-l-336", 25, 576, 1024, {24, 24}};
    }
    if (name == "siglip-so-384") {
        return {"siglip-so-384", 28, 729, 1152, {27, 27}};
    }
    if (name == "desk") {
        return {"desk", 7, 16, 8, {4, 4}};
    }
    fail(errc::bad_config, "geometry: unknown geometry '" + name + "' (expected one of clip-l-336, "
                               "siglip-so-384, desk)");
}

std::vector<std::string> geometry_names() {
    return {"clip-l-336", "siglip-so-384", "desk"};
}

FeatureStack synth_stack_for(const StackGeometry& geo, std::uint64_t seed) {
    return synth_stack(seed, geo.depth(), geo.tokens, geo.dim, geo.grid);
}

std::size_t llm_proxy_flops(std::size_t tokens, const LlmProxy& proxy) {
    const std::size_t d = proxy.dim;
    const std::size_t per_layer = 24 * tokens * d * d + 4 * tokens * tokens * d;
    return proxy.layers * per_layer;
}

std::size_t connector_flop_estimate(const ConnectorConfig& cfg, const StackGeometry& geo) {
    cfg.validate(geo.depth(), geo.tokens, geo.grid);
    const std::size_t n = geo.tokens;
    const std::size_t dv = geo.dim;
    const std::size_t dt = cfg.target_dim;
    const std::size_t d_in = cfg.projector_input_dim(dv, geo.depth());
    std::size_t flops = 0;
    switch (cfg.variant) {
        case Variant::sti:
            // per pooled layer: n*dv adds + (n/alpha)*dv divides
            flops += (cfg.layers.size() - 1) * (n * dv + (n / cfg.alpha) * dv);
            break;
        case Variant::sti_conv1d:
            // per pooled layer: 2*n*dv^2 multiply-adds + (n/alpha)*dv bias adds
            flops += (cfg.layers.size() - 1) * (2 * n * dv * dv + (n / cfg.alpha) * dv);
            break;
        case Variant::sci:
            break;  // concat moves data, no arithmetic
        case Variant::sci_conv2d:
            // per selected layer: 3x3 kernel, 2*9*n*dv^2 + n*dv bias adds
            flops += cfg.layers.size() * (18 * n * dv * dv + n * dv);
            break;
        case Variant::dci: {
            const std::size_t grouped = dci_grouped_entry_count(geo.depth(), cfg.groups);
            const std::size_t m = grouped / cfg.groups;
            // per group: (m-1)*n*dv adds + n*dv divides
            flops += cfg.groups * m * n * dv;
            break;
        }
        case Variant::dci_linear: {
            const std::size_t grouped = dci_grouped_entry_count(geo.depth(), cfg.groups);
            // per grouped entry: layer norm ~8*n*dv, linear 2*n*dv^2 + n*dv
            flops += grouped * (8 * n * dv + 2 * n * dv * dv + n * dv);
            const std::size_t m = grouped / cfg.groups;
            flops += cfg.groups * m * n * dv;
            break;
        }
    }
    // projector on the integrated tokens: two matmuls, biases, gelu
    const std::size_t n_proj = variant_is_token_integration(cfg.variant)
                                   ? n + (cfg.layers.size() - 1) * (n / cfg.alpha)
                                   : n;
    flops += 2 * n_proj * d_in * dt + n_proj * dt;  // first linear
    flops += n_proj * dt;                           // gelu
    flops += 2 * n_proj * dt * dt + n_proj * dt;    // second linear
    if (cfg.efficient_factor > 1) {
        const std::size_t n_out = cfg.output_tokens(n, geo.grid);
        flops += 7 * n_out * dt;  // 4 weights, 3 adds per output element
    }
    return flops;
}

CostReport stats(const ConnectorConfig& cfg, const StackGeometry& geo, LlmProxy proxy) {
    cfg.validate(geo.depth(), geo.tokens, geo.grid);

    ConnectorConfig baseline;
    baseline.variant = Variant::sti;
    baseline.layers = {geo.depth()};
    baseline.alpha = 1;
    baseline.target_dim = cfg.target_dim;
    baseline.efficient_factor = 1;

    CostReport r;
    r.geometry = geo.name;
    r.variant = variant_name(cfg.variant);
    r.proxy = proxy;
    r.tokens_out = cfg.output_tokens(geo.tokens, geo.grid);
    r.tokens_baseline = baseline.output_tokens(geo.tokens, geo.grid);
    r.connector_params = param_total(cfg, geo.dim, geo.depth());
    r.connector_params_baseline = param_total(baseline, geo.dim, geo.depth());
    r.connector_flops = connector_flop_estimate(cfg, geo);
    r.connector_flops_baseline = connector_flop_estimate(baseline, geo);
    r.llm_proxy_flops = llm_proxy_flops(r.tokens_out, proxy);
    r.llm_proxy_flops_baseline = llm_proxy_flops(r.tokens_baseline, proxy);
    r.token_ratio = static_cast<double>(r.tokens_out) / static_cast<double>(r.tokens_baseline);
    r.token_reduction = static_cast<double>(r.tokens_baseline) / static_cast<double>(r.tokens_out);
    r.llm_flop_ratio =
        static_cast<double>(r.llm_proxy_flops) / static_cast<double>(r.llm_proxy_flops_baseline);
    r.llm_speedup =
        static_cast<double>(r.llm_proxy_flops_baseline) / static_cast<double>(r.llm_proxy_flops);
    r.formulas = {
        "llm_proxy_flops = layers * (24*n*d^2 + 4*n^2*d), multiply-add = 2 flops",
        "mlp_flops = 2*n*D_in*D_t + n*D_t + n*D_t + 2*n*D_t^2 + n*D_t",
        "sti tokens = N + (K-1)*N/alpha; channel variants keep N; efficient stage divides the "
        "grid per axis by f",
    };
    return r;
}

}  // namespace dc
