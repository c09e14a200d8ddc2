// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/connector.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "dc/rng.hpp"

namespace dc {

// ---- variant plumbing --------------------------------------------------------

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::sti: return "STI";
        case Variant::sti_conv1d: return "STI_CONV1D";
        case Variant::sci: return "SCI";
        case Variant::sci_conv2d: return "SCI_CONV2D";
        case Variant::dci: return "DCI";
        case Variant::dci_linear: return "DCI_LINEAR";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    std::string u;
    u.reserve(s.size());
    for (char c : s) {
        u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (u == "STI") return Variant::sti;
    if (u == "STI_CONV1D") return Variant::sti_conv1d;
    if (u == "SCI") return Variant::sci;
    if (u == "SCI_CONV2D") return Variant::sci_conv2d;
    if (u == "DCI") return Variant::dci;
    if (u == "DCI_LINEAR") return Variant::dci_linear;
    fail(errc::bad_config, "variant: unknown variant '" + s +
                               "' (expected one of STI, STI_CONV1D, SCI, SCI_CONV2D, DCI, DCI_LINEAR)");
}

bool variant_is_token_integration(Variant v) {
    return v == Variant::sti || v == Variant::sti_conv1d;
}

bool variant_is_dense(Variant v) {
    return v == Variant::dci || v == Variant::dci_linear;
}

// ---- config -------------------------------------------------------------------

std::size_t dci_grouped_entry_count(std::size_t depth, std::size_t groups) {
    // stem-inclusive entries 0..depth-1; drop the highest-indexed non-final
    // entries until the count divides into G equal groups
    std::size_t count = depth;
    count -= count % groups;
    return count;
}

void ConnectorConfig::validate(std::size_t depth, std::size_t tokens, Grid grid) const {
    if (target_dim == 0) {
        fail(errc::bad_config, "target_dim: must be >= 1");
    }
    if (alpha == 0) {
        fail(errc::bad_config, "alpha: must be >= 1");
    }
    if (efficient_factor == 0) {
        fail(errc::bad_config, "efficient_factor: must be >= 1");
    }
    if (variant_is_token_integration(variant) || variant == Variant::sci ||
        variant == Variant::sci_conv2d) {
        if (layers.empty()) {
            fail(errc::bad_config, "layers: sparse variants need at least one selected block");
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (layers[i] < 1 || layers[i] > depth) {
                fail(errc::bad_config, "layers: block index " + std::to_string(layers[i]) +
                                           " outside 1.." + std::to_string(depth));
            }
            if (i > 0 && layers[i] <= layers[i - 1]) {
                fail(errc::bad_config, "layers: selection must be strictly increasing");
            }
        }
        if (layers.back() != depth) {
            fail(errc::bad_config, "layers: the final block " + std::to_string(depth) +
                                       " must be the last selection");
        }
    }
    if (variant_is_token_integration(variant)) {
        if (tokens % alpha != 0) {
            fail(errc::divisibility, "alpha " + std::to_string(alpha) + " does not divide token count " +
                                         std::to_string(tokens));
        }
    }
    if (variant_is_dense(variant)) {
        if (groups == 0) {
            fail(errc::bad_config, "groups: must be >= 1");
        }
        if (groups > depth) {
            fail(errc::bad_config, "groups: G=" + std::to_string(groups) +
                                       " exceeds the grouped entry count " + std::to_string(depth));
        }
    }
    if (efficient_factor > 1) {
        if (variant_is_token_integration(variant)) {
            fail(errc::bad_config,
                 "efficient_factor: token-integration outputs carry no grid to downsample");
        }
        if (grid.h % efficient_factor != 0 || grid.w % efficient_factor != 0) {
            fail(errc::divisibility, "efficient_factor " + std::to_string(efficient_factor) +
                                         " does not divide grid " + std::to_string(grid.h) + "x" +
                                         std::to_string(grid.w));
        }
    }
}

std::size_t ConnectorConfig::projector_input_dim(std::size_t d_v, std::size_t depth) const {
    switch (variant) {
        case Variant::sti:
        case Variant::sti_conv1d:
            return d_v;
        case Variant::sci:
        case Variant::sci_conv2d:
            return layers.size() * d_v;
        case Variant::dci:
        case Variant::dci_linear:
            (void)depth;
            return (groups + 1) * d_v;
    }
    return 0;
}

std::size_t ConnectorConfig::output_tokens(std::size_t n, Grid grid) const {
    if (variant_is_token_integration(variant)) {
        return n + (layers.size() - 1) * (n / alpha);
    }
    if (efficient_factor > 1) {
        return (grid.h / efficient_factor) * (grid.w / efficient_factor);
    }
    return n;
}

ConnectorConfig ConnectorConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(errc::bad_config, std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        fail(errc::bad_config, "config: top level must be an object");
    }
    ConnectorConfig cfg;
    if (!j.contains("variant") || !j["variant"].is_string()) {
        fail(errc::bad_config, "variant: missing or not a string");
    }
    cfg.variant = variant_from_string(j["variant"].get<std::string>());
    auto read_uint = [&](const char* key, std::size_t fallback, bool required) -> std::size_t {
        if (!j.contains(key)) {
            if (required) {
                fail(errc::bad_config, std::string(key) + ": missing");
            }
            return fallback;
        }
        if (!j[key].is_number_unsigned() || j[key].get<std::uint64_t>() == 0) {
            fail(errc::bad_config, std::string(key) + ": must be a positive integer");
        }
        return static_cast<std::size_t>(j[key].get<std::uint64_t>());
    };
    if (j.contains("layers")) {
        if (!j["layers"].is_array()) {
            fail(errc::bad_config, "layers: must be an array of block indices");
        }
        for (const auto& v : j["layers"]) {
            if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
                fail(errc::bad_config, "layers: entries must be positive integers");
            }
            cfg.layers.push_back(static_cast<std::size_t>(v.get<std::uint64_t>()));
        }
    }
    cfg.alpha = read_uint("alpha", 1, false);
    cfg.groups = read_uint("groups", 1, false);
    cfg.target_dim = read_uint("target_dim", 0, true);
    cfg.efficient_factor = read_uint("efficient_factor", 1, false);
    return cfg;
}

std::string ConnectorConfig::to_json_text() const {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(variant);
    j["layers"] = layers;
    j["alpha"] = alpha;
    j["groups"] = groups;
    j["target_dim"] = target_dim;
    j["efficient_factor"] = efficient_factor;
    return j.dump();
}

// ---- parameters -----------------------------------------------------------------

namespace {

Tensor draw_weight(Rng& rng, std::size_t fan_in, std::vector<std::size_t> shape) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

}  // namespace

ConnectorParams ConnectorParams::init(const ConnectorConfig& cfg, std::size_t d_v, std::size_t depth,
                                      std::uint64_t seed) {
    const std::size_t d_in = cfg.projector_input_dim(d_v, depth);
    const std::size_t d_t = cfg.target_dim;
    if (d_t == 0) {
        fail(errc::bad_config, "target_dim: must be >= 1");
    }
    Rng rng(seed);
    ConnectorParams p;
    p.w1 = draw_weight(rng, d_in, {d_in, d_t});
    p.b1 = Tensor::zeros({d_t});
    p.w2 = draw_weight(rng, d_t, {d_t, d_t});
    p.b2 = Tensor::zeros({d_t});
    switch (cfg.variant) {
        case Variant::sti_conv1d:
            p.conv1d_w = draw_weight(rng, d_v * cfg.alpha, {d_v, d_v, cfg.alpha});
            p.conv1d_b = Tensor::zeros({d_v});
            break;
        case Variant::sci_conv2d:
            p.conv2d_w = draw_weight(rng, d_v * 9, {d_v, d_v, 3, 3});
            p.conv2d_b = Tensor::zeros({d_v});
            break;
        case Variant::dci_linear:
            p.norm_gamma = Tensor::full({d_v}, 1.0);
            p.norm_beta = Tensor::zeros({d_v});
            p.linear_w = draw_weight(rng, d_v, {d_v, d_v});
            p.linear_b = Tensor::zeros({d_v});
            break;
        default:
            break;
    }
    return p;
}

NamedTensors ConnectorParams::named() const {
    NamedTensors out;
    out.emplace_back("W1", w1);
    out.emplace_back("b1", b1);
    out.emplace_back("W2", w2);
    out.emplace_back("b2", b2);
    if (conv1d_w) out.emplace_back("conv1d.W", *conv1d_w);
    if (conv1d_b) out.emplace_back("conv1d.b", *conv1d_b);
    if (conv2d_w) out.emplace_back("conv2d.W", *conv2d_w);
    if (conv2d_b) out.emplace_back("conv2d.b", *conv2d_b);
    if (norm_gamma) out.emplace_back("norm.gamma", *norm_gamma);
    if (norm_beta) out.emplace_back("norm.beta", *norm_beta);
    if (linear_w) out.emplace_back("linear.W", *linear_w);
    if (linear_b) out.emplace_back("linear.b", *linear_b);
    return out;
}

ConnectorParams ConnectorParams::from_named(const NamedTensors& tensors) {
    ConnectorParams p;
    bool have_w1 = false, have_b1 = false, have_w2 = false, have_b2 = false;
    for (const auto& [name, t] : tensors) {
        if (name == "W1") {
            p.w1 = t;
            have_w1 = true;
        } else if (name == "b1") {
            p.b1 = t;
            have_b1 = true;
        } else if (name == "W2") {
            p.w2 = t;
            have_w2 = true;
        } else if (name == "b2") {
            p.b2 = t;
            have_b2 = true;
        } else if (name == "conv1d.W") {
            p.conv1d_w = t;
        } else if (name == "conv1d.b") {
            p.conv1d_b = t;
        } else if (name == "conv2d.W") {
            p.conv2d_w = t;
        } else if (name == "conv2d.b") {
            p.conv2d_b = t;
        } else if (name == "norm.gamma") {
            p.norm_gamma = t;
        } else if (name == "norm.beta") {
            p.norm_beta = t;
        } else if (name == "linear.W") {
            p.linear_w = t;
        } else if (name == "linear.b") {
            p.linear_b = t;
        } else {
            fail(errc::bad_config, "unknown parameter tensor '" + name + "'");
        }
    }
    if (!have_w1 || !have_b1 || !have_w2 || !have_b2) {
        fail(errc::bad_config, "parameter container is missing a projector tensor (W1/b1/W2/b2)");
    }
    return p;
}

Tensor& param_by_name(ConnectorParams& p, const std::string& name) {
    auto deref = [&name](std::optional<Tensor>& t) -> Tensor& {
        if (!t) {
            fail(errc::bad_state, "parameter '" + name + "' is not present on this variant");
        }
        return *t;
    };
    if (name == "W1") return p.w1;
    if (name == "b1") return p.b1;
    if (name == "W2") return p.w2;
    if (name == "b2") return p.b2;
    if (name == "conv1d.W") return deref(p.conv1d_w);
    if (name == "conv1d.b") return deref(p.conv1d_b);
    if (name == "conv2d.W") return deref(p.conv2d_w);
    if (name == "conv2d.b") return deref(p.conv2d_b);
    if (name == "norm.gamma") return deref(p.norm_gamma);
    if (name == "norm.beta") return deref(p.norm_beta);
    if (name == "linear.W") return deref(p.linear_w);
    if (name == "linear.b") return deref(p.linear_b);
    fail(errc::bad_config, "unknown parameter tensor '" + name + "'");
}

std::vector<ParamSpec> param_shapes(const ConnectorConfig& cfg, std::size_t d_v, std::size_t depth) {
    const std::size_t d_in = cfg.projector_input_dim(d_v, depth);
    const std::size_t d_t = cfg.target_dim;
    std::vector<ParamSpec> out;
    auto add = [&out](std::string name, std::vector<std::size_t> shape) {
        ParamSpec s;
        s.name = std::move(name);
        s.count = shape_numel(shape);
        s.shape = std::move(shape);
        out.push_back(std::move(s));
    };
    add("W1", {d_in, d_t});
    add("b1", {d_t});
    add("W2", {d_t, d_t});
    add("b2", {d_t});
    switch (cfg.variant) {
        case Variant::sti_conv1d:
            add("conv1d.W", {d_v, d_v, cfg.alpha});
            add("conv1d.b", {d_v});
            break;
        case Variant::sci_conv2d:
            add("conv2d.W", {d_v, d_v, 3, 3});
            add("conv2d.b", {d_v});
            break;
        case Variant::dci_linear:
            add("norm.gamma", {d_v});
            add("norm.beta", {d_v});
            add("linear.W", {d_v, d_v});
            add("linear.b", {d_v});
            break;
        default:
            break;
    }
    return out;
}

std::size_t param_total(const ConnectorConfig& cfg, std::size_t d_v, std::size_t depth) {
    std::size_t total = 0;
    for (const auto& s : param_shapes(cfg, d_v, depth)) {
        total += s.count;
    }
    return total;
}

// ---- projector --------------------------------------------------------------------

Tensor mlp_project_value(const Tensor& x, const ConnectorParams& p) {
    return linear_value(gelu_value(linear_value(x, p.w1, p.b1)), p.w2, p.b2);
}

GradPair mlp_project(const Tensor& x, const ConnectorParams& p) {
    GradPair l1 = linear(x, p.w1, p.b1);
    GradPair act = gelu(l1.value);
    GradPair l2 = linear(act.value, p.w2, p.b2);
    auto bw1 = l1.backward;
    auto bwg = act.backward;
    auto bw2 = l2.backward;
    return {l2.value, [bw1, bwg, bw2](const Tensor& g) {
                std::vector<Tensor> top = bw2(g);     // {dh, dw2, db2}
                std::vector<Tensor> mid = bwg(top[0]);  // {dh1}
                std::vector<Tensor> bot = bw1(mid[0]);  // {dx, dw1, db1}
                return std::vector<Tensor>{std::move(bot[0]), std::move(bot[1]), std::move(bot[2]),
                                           std::move(top[1]), std::move(top[2])};
            }};
}

// ---- shared pipeline plumbing --------------------------------------------------------

namespace {

void require_variant(const ConnectorConfig& cfg, Variant expect, const char* op) {
    if (cfg.variant != expect) {
        fail(errc::bad_config, std::string(op) + " called with variant " + variant_name(cfg.variant));
    }
}

void require_projector_width(const ConnectorConfig& cfg, const ConnectorParams& p, std::size_t d_v,
                             std::size_t depth) {
    const std::size_t d_in = cfg.projector_input_dim(d_v, depth);
    if (p.w1.rank() != 2 || p.w1.rows() != d_in) {
        fail(errc::shape_mismatch, "projector width mismatch: W1 is " + p.w1.shape_str() +
                                       ", variant needs input width " + std::to_string(d_in));
    }
}

const Tensor& require_aux(const std::optional<Tensor>& t, const char* name) {
    if (!t) {
        fail(errc::bad_config, std::string("missing aux parameter '") + name + "'");
    }
    return *t;
}

void require_conv1d_extent(const ConnectorConfig& cfg, const Tensor& kernel) {
    if (kernel.rank() != 3 || kernel.shape[2] != cfg.alpha) {
        fail(errc::bad_config, "conv1d.W tap count " + kernel.shape_str() + " must equal alpha " +
                                   std::to_string(cfg.alpha));
    }
}

// entry indices feeding each pipeline, resolved per the index-mapping rules:
// sparse selections are block indices (block i == entry i, entry 0 is the
// stem); dense grouping covers the stem-inclusive entries 0..depth-1.
struct Plan {
    std::vector<std::size_t> pooled;   // sti family: entries pooled before concat
    std::vector<std::size_t> channel;  // sci family: entries channel-concatenated
    std::vector<std::pair<std::size_t, std::size_t>> group_ranges;  // dci family
    std::size_t final_entry = 0;
};

Plan make_plan(const FeatureStack& s, const ConnectorConfig& cfg) {
    s.validate();
    cfg.validate(s.depth(), s.tokens(), s.grid);
    Plan plan;
    plan.final_entry = s.entries.size() - 1;
    if (variant_is_token_integration(cfg.variant)) {
        for (std::size_t i = 0; i + 1 < cfg.layers.size(); ++i) {
            plan.pooled.push_back(cfg.layers[i]);
        }
    } else if (cfg.variant == Variant::sci || cfg.variant == Variant::sci_conv2d) {
        plan.channel = cfg.layers;
    } else {
        const std::size_t grouped = dci_grouped_entry_count(s.depth(), cfg.groups);
        const std::size_t m = grouped / cfg.groups;
        for (std::size_t g = 0; g < cfg.groups; ++g) {
            plan.group_ranges.emplace_back(g * m, (g + 1) * m);
        }
    }
    return plan;
}

VisualEmbedding finish_value(Tensor projected, const FeatureStack& s, const ConnectorConfig& cfg) {
    VisualEmbedding e;
    e.tokens = std::move(projected);
    if (!variant_is_token_integration(cfg.variant)) {
        e.grid = s.grid;
    }
    if (cfg.efficient_factor > 1) {
        e = efficient_downsample(e, cfg.efficient_factor);
    }
    return e;
}

}  // namespace

// ---- grouped means -------------------------------------------------------------------

std::vector<Tensor> dci_group(const FeatureStack& s, std::size_t groups) {
    s.validate();
    if (groups == 0 || groups > s.depth()) {
        fail(errc::bad_config, "groups: G=" + std::to_string(groups) +
                                   " outside 1.." + std::to_string(s.depth()));
    }
    const std::size_t grouped = dci_grouped_entry_count(s.depth(), groups);
    const std::size_t m = grouped / groups;
    std::vector<Tensor> out;
    out.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        Tensor acc(s.entries[0].shape);
        for (std::size_t e = g * m; e < (g + 1) * m; ++e) {
            const Tensor& src = s.entries[e];
            for (std::size_t i = 0; i < acc.numel(); ++i) {
                acc.data[i] += src.data[i];
            }
        }
        for (auto& v : acc.data) {
            v /= static_cast<double>(m);
        }
        out.push_back(std::move(acc));
    }
    return out;
}

// ---- forward passes ---------------------------------------------------------------------

VisualEmbedding sti_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                              const ConnectorParams& p) {
    require_variant(cfg, Variant::sti, "sti_integrate");
    Plan plan = make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    std::vector<Tensor> parts;
    parts.reserve(plan.pooled.size() + 1);
    for (std::size_t e : plan.pooled) {
        parts.push_back(avg_pool_tokens_value(s.entries[e], cfg.alpha));
    }
    parts.push_back(s.entries[plan.final_entry]);
    return finish_value(mlp_project_value(concat_value(parts, Axis::token), p), s, cfg);
}

VisualEmbedding sti_conv_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                                   const ConnectorParams& p) {
    require_variant(cfg, Variant::sti_conv1d, "sti_conv_integrate");
    Plan plan = make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    const Tensor& kw = require_aux(p.conv1d_w, "conv1d.W");
    const Tensor& kb = require_aux(p.conv1d_b, "conv1d.b");
    require_conv1d_extent(cfg, kw);
    std::vector<Tensor> parts;
    parts.reserve(plan.pooled.size() + 1);
    for (std::size_t e : plan.pooled) {
        parts.push_back(conv1d_tokens_value(s.entries[e], kw, kb));
    }
    parts.push_back(s.entries[plan.final_entry]);
    return finish_value(mlp_project_value(concat_value(parts, Axis::token), p), s, cfg);
}

VisualEmbedding sci_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                              const ConnectorParams& p) {
    require_variant(cfg, Variant::sci, "sci_integrate");
    Plan plan = make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    std::vector<Tensor> parts;
    parts.reserve(plan.channel.size());
    for (std::size_t e : plan.channel) {
        parts.push_back(s.entries[e]);
    }
    return finish_value(mlp_project_value(concat_value(parts, Axis::channel), p), s, cfg);
}

VisualEmbedding sci_conv_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                                   const ConnectorParams& p) {
    require_variant(cfg, Variant::sci_conv2d, "sci_conv_integrate");
    Plan plan = make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    const Tensor& kw = require_aux(p.conv2d_w, "conv2d.W");
    const Tensor& kb = require_aux(p.conv2d_b, "conv2d.b");
    std::vector<Tensor> parts;
    parts.reserve(plan.channel.size());
    for (std::size_t e : plan.channel) {
        parts.push_back(conv2d_grid_value(s.entries[e], s.grid, kw, kb));
    }
    return finish_value(mlp_project_value(concat_value(parts, Axis::channel), p), s, cfg);
}

VisualEmbedding dci_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                              const ConnectorParams& p) {
    require_variant(cfg, Variant::dci, "dci_integrate");
    make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    std::vector<Tensor> parts = dci_group(s, cfg.groups);
    parts.push_back(s.entries.back());
    return finish_value(mlp_project_value(concat_value(parts, Axis::channel), p), s, cfg);
}

VisualEmbedding dci_linear_integrate(const FeatureStack& s, const ConnectorConfig& cfg,
                                     const ConnectorParams& p) {
    require_variant(cfg, Variant::dci_linear, "dci_linear_integrate");
    Plan plan = make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    const Tensor& gamma = require_aux(p.norm_gamma, "norm.gamma");
    const Tensor& beta = require_aux(p.norm_beta, "norm.beta");
    const Tensor& lw = require_aux(p.linear_w, "linear.W");
    const Tensor& lb = require_aux(p.linear_b, "linear.b");
    std::vector<Tensor> parts;
    parts.reserve(plan.group_ranges.size() + 1);
    for (const auto& [begin, end] : plan.group_ranges) {
        Tensor acc;
        for (std::size_t e = begin; e < end; ++e) {
            Tensor mapped = linear_value(layer_norm_value(s.entries[e], gamma, beta), lw, lb);
            if (e == begin) {
                acc = std::move(mapped);
            } else {
                for (std::size_t i = 0; i < acc.numel(); ++i) {
                    acc.data[i] += mapped.data[i];
                }
            }
        }
        const double m = static_cast<double>(end - begin);
        for (auto& v : acc.data) {
            v /= m;
        }
        parts.push_back(std::move(acc));
    }
    parts.push_back(s.entries.back());
    return finish_value(mlp_project_value(concat_value(parts, Axis::channel), p), s, cfg);
}

VisualEmbedding efficient_downsample(const VisualEmbedding& e, std::size_t factor) {
    if (factor == 0) {
        fail(errc::bad_config, "efficient_factor: must be >= 1");
    }
    if (!e.grid) {
        fail(errc::bad_config, "efficient downsampling needs a token grid; this embedding has none");
    }
    const Grid in = *e.grid;
    if (in.h % factor != 0 || in.w % factor != 0) {
        fail(errc::divisibility, "efficient_factor " + std::to_string(factor) + " does not divide grid " +
                                     std::to_string(in.h) + "x" + std::to_string(in.w));
    }
    const Grid out{in.h / factor, in.w / factor};
    VisualEmbedding r;
    r.tokens = bilinear_resize_value(e.tokens, in, out);
    r.grid = out;
    return r;
}

VisualEmbedding connector_forward(const FeatureStack& s, const ConnectorConfig& cfg,
                                  const ConnectorParams& p) {
    VisualEmbedding e;
    switch (cfg.variant) {
        case Variant::sti: e = sti_integrate(s, cfg, p); break;
        case Variant::sti_conv1d: e = sti_conv_integrate(s, cfg, p); break;
        case Variant::sci: e = sci_integrate(s, cfg, p); break;
        case Variant::sci_conv2d: e = sci_conv_integrate(s, cfg, p); break;
        case Variant::dci: e = dci_integrate(s, cfg, p); break;
        case Variant::dci_linear: e = dci_linear_integrate(s, cfg, p); break;
    }
    require_finite(e.tokens, "connector output");
    return e;
}

// ---- gradients ------------------------------------------------------------------------

namespace {

void accumulate(Tensor& into, const Tensor& from) {
    if (into.numel() == 0) {
        into = from;
        return;
    }
    for (std::size_t i = 0; i < into.numel(); ++i) {
        into.data[i] += from.data[i];
    }
}

}  // namespace

ConnectorTape connector_forward_with_grads(const FeatureStack& s, const ConnectorConfig& cfg,
                                           const ConnectorParams& p) {
    Plan plan = make_plan(s, cfg);
    require_projector_width(cfg, p, s.dim(), s.depth());
    const std::size_t d_v = s.dim();

    // stage 1: per-layer processing feeding the concat, tracked per part
    std::vector<Tensor> parts;
    // backward of part i: upstream-part gradient -> aux gradients accumulated
    struct PartTape {
        std::function<std::vector<Tensor>(const Tensor&)> backward;  // raw op backward
        enum class Kind { none, conv1d, conv2d, dci_linear_group } kind = Kind::none;
        std::vector<std::function<std::vector<Tensor>(const Tensor&)>> lin_bw;  // per grouped entry
        std::vector<std::function<std::vector<Tensor>(const Tensor&)>> ln_bw;
        std::size_t group_size = 0;
    };
    std::vector<PartTape> tapes;
    Axis axis = Axis::channel;

    switch (cfg.variant) {
        case Variant::sti: {
            axis = Axis::token;
            for (std::size_t e : plan.pooled) {
                // pooling of a frozen entry: value only, nothing to accumulate
                parts.push_back(avg_pool_tokens_value(s.entries[e], cfg.alpha));
                tapes.push_back({});
            }
            parts.push_back(s.entries[plan.final_entry]);
            tapes.push_back({});
            break;
        }
        case Variant::sti_conv1d: {
            axis = Axis::token;
            const Tensor& kw = require_aux(p.conv1d_w, "conv1d.W");
            const Tensor& kb = require_aux(p.conv1d_b, "conv1d.b");
            require_conv1d_extent(cfg, kw);
            for (std::size_t e : plan.pooled) {
                GradPair g = conv1d_tokens(s.entries[e], kw, kb);
                parts.push_back(g.value);
                PartTape t;
                t.kind = PartTape::Kind::conv1d;
                t.backward = g.backward;
                tapes.push_back(std::move(t));
            }
            parts.push_back(s.entries[plan.final_entry]);
            tapes.push_back({});
            break;
        }
        case Variant::sci: {
            for (std::size_t e : plan.channel) {
                parts.push_back(s.entries[e]);
                tapes.push_back({});
            }
            break;
        }
        case Variant::sci_conv2d: {
            const Tensor& kw = require_aux(p.conv2d_w, "conv2d.W");
            const Tensor& kb = require_aux(p.conv2d_b, "conv2d.b");
            for (std::size_t e : plan.channel) {
                GradPair g = conv2d_grid(s.entries[e], s.grid, kw, kb);
                parts.push_back(g.value);
                PartTape t;
                t.kind = PartTape::Kind::conv2d;
                t.backward = g.backward;
                tapes.push_back(std::move(t));
            }
            break;
        }
        case Variant::dci: {
            std::vector<Tensor> means = dci_group(s, cfg.groups);
            for (auto& m : means) {
                parts.push_back(std::move(m));
                tapes.push_back({});  // group means of frozen entries carry no parameters
            }
            parts.push_back(s.entries.back());
            tapes.push_back({});
            break;
        }
        case Variant::dci_linear: {
            const Tensor& gamma = require_aux(p.norm_gamma, "norm.gamma");
            const Tensor& beta = require_aux(p.norm_beta, "norm.beta");
            const Tensor& lw = require_aux(p.linear_w, "linear.W");
            const Tensor& lb = require_aux(p.linear_b, "linear.b");
            for (const auto& [begin, end] : plan.group_ranges) {
                PartTape t;
                t.kind = PartTape::Kind::dci_linear_group;
                t.group_size = end - begin;
                Tensor acc;
                for (std::size_t e = begin; e < end; ++e) {
                    GradPair ln = layer_norm(s.entries[e], gamma, beta);
                    GradPair lin = linear(ln.value, lw, lb);
                    accumulate(acc, lin.value);
                    t.ln_bw.push_back(ln.backward);
                    t.lin_bw.push_back(lin.backward);
                }
                const double m = static_cast<double>(end - begin);
                for (auto& v : acc.data) {
                    v /= m;
                }
                parts.push_back(std::move(acc));
                tapes.push_back(std::move(t));
            }
            parts.push_back(s.entries.back());
            tapes.push_back({});
            break;
        }
    }

    // stage 2: concat + projector (+ efficient)
    GradPair cat = concat(parts, axis);
    GradPair proj = mlp_project(cat.value, p);
    VisualEmbedding out;
    out.tokens = proj.value;
    if (!variant_is_token_integration(cfg.variant)) {
        out.grid = s.grid;
    }
    std::function<std::vector<Tensor>(const Tensor&)> resize_bw;
    if (cfg.efficient_factor > 1) {
        const Grid in = *out.grid;
        const Grid down{in.h / cfg.efficient_factor, in.w / cfg.efficient_factor};
        GradPair rs = bilinear_resize(out.tokens, in, down);
        out.tokens = rs.value;
        out.grid = down;
        resize_bw = rs.backward;
    }
    require_finite(out.tokens, "connector output");

    const Variant variant = cfg.variant;
    const std::size_t alpha = cfg.alpha;
    auto cat_bw = cat.backward;
    auto proj_bw = proj.backward;
    auto backward = [variant, alpha, d_v, tapes = std::move(tapes), cat_bw, proj_bw,
                     resize_bw](const Tensor& upstream) -> NamedTensors {
        Tensor g = upstream;
        if (resize_bw) {
            g = resize_bw(g)[0];
        }
        std::vector<Tensor> head = proj_bw(g);  // {dcat, dw1, db1, dw2, db2}
        NamedTensors grads;
        grads.emplace_back("W1", std::move(head[1]));
        grads.emplace_back("b1", std::move(head[2]));
        grads.emplace_back("W2", std::move(head[3]));
        grads.emplace_back("b2", std::move(head[4]));
        std::vector<Tensor> dparts = cat_bw(head[0]);

        if (variant == Variant::sti_conv1d) {
            Tensor dkw({d_v, d_v, alpha});
            Tensor dkb({d_v});
            for (std::size_t i = 0; i < tapes.size(); ++i) {
                if (tapes[i].kind != PartTape::Kind::conv1d) {
                    continue;
                }
                std::vector<Tensor> pg = tapes[i].backward(dparts[i]);  // {dx, dw, db}
                accumulate(dkw, pg[1]);
                accumulate(dkb, pg[2]);
            }
            grads.emplace_back("conv1d.W", std::move(dkw));
            grads.emplace_back("conv1d.b", std::move(dkb));
        } else if (variant == Variant::sci_conv2d) {
            Tensor dkw({d_v, d_v, 3, 3});
            Tensor dkb({d_v});
            for (std::size_t i = 0; i < tapes.size(); ++i) {
                if (tapes[i].kind != PartTape::Kind::conv2d) {
                    continue;
                }
                std::vector<Tensor> pg = tapes[i].backward(dparts[i]);
                accumulate(dkw, pg[1]);
                accumulate(dkb, pg[2]);
            }
            grads.emplace_back("conv2d.W", std::move(dkw));
            grads.emplace_back("conv2d.b", std::move(dkb));
        } else if (variant == Variant::dci_linear) {
            Tensor dgamma({d_v});
            Tensor dbeta({d_v});
            Tensor dlw({d_v, d_v});
            Tensor dlb({d_v});
            for (std::size_t i = 0; i < tapes.size(); ++i) {
                if (tapes[i].kind != PartTape::Kind::dci_linear_group) {
                    continue;
                }
                Tensor dmean = dparts[i];
                const double inv_m = 1.0 / static_cast<double>(tapes[i].group_size);
                for (auto& v : dmean.data) {
                    v *= inv_m;
                }
                for (std::size_t e = 0; e < tapes[i].group_size; ++e) {
                    std::vector<Tensor> lg = tapes[i].lin_bw[e](dmean);  // {dln, dlw, dlb}
                    accumulate(dlw, lg[1]);
                    accumulate(dlb, lg[2]);
                    std::vector<Tensor> ng = tapes[i].ln_bw[e](lg[0]);  // {dx, dgamma, dbeta}
                    accumulate(dgamma, ng[1]);
                    accumulate(dbeta, ng[2]);
                }
            }
            grads.emplace_back("norm.gamma", std::move(dgamma));
            grads.emplace_back("norm.beta", std::move(dbeta));
            grads.emplace_back("linear.W", std::move(dlw));
            grads.emplace_back("linear.b", std::move(dlb));
        }
        return grads;
    };
    return {std::move(out), std::move(backward)};
}

NamedTensors connector_grads(const FeatureStack& s, const ConnectorConfig& cfg,
                             const ConnectorParams& p, const Tensor& upstream) {
    ConnectorTape tape = connector_forward_with_grads(s, cfg, p);
    require_shape(upstream, tape.out.tokens.shape, "connector upstream gradient");
    return tape.backward(upstream);
}

}  // namespace dc
