// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "dc/connector.hpp"
#include "dc/stats.hpp"

using namespace dc;

namespace {

ConnectorConfig variant_cfg(Variant v, std::size_t depth, std::size_t target_dim) {
    ConnectorConfig cfg;
    cfg.variant = v;
    cfg.target_dim = target_dim;
    if (variant_is_token_integration(v) || v == Variant::sci || v == Variant::sci_conv2d) {
        cfg.layers = {depth / 3, 2 * depth / 3, depth};
    }
    if (variant_is_token_integration(v)) {
        cfg.alpha = 4;
    }
    if (variant_is_dense(v)) {
        cfg.groups = 2;
    }
    return cfg;
}

void BM_ConnectorForwardDesk(benchmark::State& state) {
    const Variant v = static_cast<Variant>(state.range(0));
    const StackGeometry geo = geometry_by_name("desk");
    FeatureStack s = synth_stack_for(geo, 1);
    ConnectorConfig cfg = variant_cfg(v, geo.depth(), 12);
    ConnectorParams p = ConnectorParams::init(cfg, geo.dim, geo.depth(), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(connector_forward(s, cfg, p).tokens.data.data());
    }
}

void BM_ConnectorGradsDesk(benchmark::State& state) {
    const Variant v = static_cast<Variant>(state.range(0));
    const StackGeometry geo = geometry_by_name("desk");
    FeatureStack s = synth_stack_for(geo, 1);
    ConnectorConfig cfg = variant_cfg(v, geo.depth(), 12);
    ConnectorParams p = ConnectorParams::init(cfg, geo.dim, geo.depth(), 2);
    const Tensor upstream = connector_forward(s, cfg, p).tokens;
    for (auto _ : state) {
        benchmark::DoNotOptimize(connector_grads(s, cfg, p, upstream));
    }
}

// clip-l token geometry with a slim feature width: exercises the full token
// counts without the 100MB stack
void BM_DciForwardWideGrid(benchmark::State& state) {
    FeatureStack s = synth_stack(3, 12, 576, 64, {24, 24});
    ConnectorConfig cfg;
    cfg.variant = Variant::dci;
    cfg.groups = 2;
    cfg.target_dim = 64;
    cfg.efficient_factor = static_cast<std::size_t>(state.range(0));
    ConnectorParams p = ConnectorParams::init(cfg, 64, 12, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(connector_forward(s, cfg, p).tokens.data.data());
    }
}

void BM_BilinearHalve(benchmark::State& state) {
    const std::size_t side = static_cast<std::size_t>(state.range(0));
    Tensor x({side * side, 64});
    for (std::size_t i = 0; i < x.numel(); ++i) {
        x.data[i] = static_cast<double>(i % 97) / 97.0;
    }
    const Grid in{side, side};
    const Grid out{side / 2, side / 2};
    for (auto _ : state) {
        benchmark::DoNotOptimize(bilinear_resize_value(x, in, out).data.data());
    }
}

void BM_MlpProject(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    ConnectorConfig cfg;
    cfg.variant = Variant::sti;
    cfg.layers = {1};
    cfg.target_dim = 128;
    ConnectorParams p = ConnectorParams::init(cfg, 96, 1, 5);
    Tensor x({n, 96});
    for (std::size_t i = 0; i < x.numel(); ++i) {
        x.data[i] = static_cast<double>(i % 31) / 31.0 - 0.5;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(mlp_project_value(x, p).data.data());
    }
}

}  // namespace

BENCHMARK(BM_ConnectorForwardDesk)->DenseRange(0, 5)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConnectorGradsDesk)->DenseRange(0, 5)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DciForwardWideGrid)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilinearHalve)->Arg(24)->Arg(48)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MlpProject)->Arg(144)->Arg(576)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
