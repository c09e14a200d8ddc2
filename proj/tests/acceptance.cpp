// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks, one pass/fail line per criterion. Exits nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "dc/connector.hpp"
#include "dc/fstk.hpp"
#include "dc/gradcheck.hpp"
#include "dc/rng.hpp"
#include "dc/stats.hpp"
#include "dc/train.hpp"
#include "dc/video.hpp"

using namespace dc;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

#define ACCEPT_REQUIRE(cond, msg)                                   \
    do {                                                            \
        if (!(cond)) {                                              \
            g_notes.push_back(std::string("    requirement failed: ") + msg); \
            return false;                                           \
        }                                                           \
    } while (0)

void run_criterion(int number, const std::string& title, const std::function<bool()>& body) {
    g_notes.clear();
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    std::string what;
    try {
        ok = body();
    } catch (const std::exception& e) {
        ok = false;
        what = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.2fs)\n", ok ? "PASS" : "FAIL", number, title.c_str(),
                secs);
    if (!ok) {
        ++g_failures;
        for (const auto& note : g_notes) {
            std::printf("%s\n", note.c_str());
        }
        if (!what.empty()) {
            std::printf("    exception: %s\n", what.c_str());
        }
    }
    std::fflush(stdout);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

ConnectorConfig desk_cfg(Variant v) {
    ConnectorConfig cfg;
    cfg.variant = v;
    cfg.target_dim = 12;
    if (variant_is_token_integration(v) || v == Variant::sci || v == Variant::sci_conv2d) {
        cfg.layers = {2, 4, 6};
    }
    if (variant_is_token_integration(v)) {
        cfg.alpha = 4;
    }
    if (variant_is_dense(v)) {
        cfg.groups = 2;
    }
    return cfg;
}

const Variant kAllVariants[] = {Variant::sti,        Variant::sti_conv1d, Variant::sci,
                                Variant::sci_conv2d, Variant::dci,        Variant::dci_linear};

// ---- criterion bodies ------------------------------------------------------

bool shape_law_suite() {
    // full clip-l-336 geometry; a narrow target dim keeps the projections cheap
    const StackGeometry clip = geometry_by_name("clip-l-336");
    FeatureStack stack = synth_stack_for(clip, 7);

    ConnectorConfig sti;
    sti.variant = Variant::sti;
    sti.layers = {8, 16, 24};
    sti.alpha = 8;
    sti.target_dim = 16;
    ConnectorParams sti_p = ConnectorParams::init(sti, clip.dim, clip.depth(), 1);
    ACCEPT_REQUIRE(sti_integrate(stack, sti, sti_p).tokens.rows() == 720,
                   "sti {8,16,24} alpha=8 must emit 720 tokens");

    ConnectorConfig sci;
    sci.variant = Variant::sci;
    sci.layers = {8, 16, 24};
    sci.target_dim = 16;
    ConnectorParams sci_p = ConnectorParams::init(sci, clip.dim, clip.depth(), 2);
    ACCEPT_REQUIRE(sci_integrate(stack, sci, sci_p).tokens.rows() == 576,
                   "sci must keep 576 tokens");

    ConnectorConfig dci;
    dci.variant = Variant::dci;
    dci.groups = 2;
    dci.target_dim = 16;
    ConnectorParams dci_p = ConnectorParams::init(dci, clip.dim, clip.depth(), 3);
    ACCEPT_REQUIRE(dci_integrate(stack, dci, dci_p).tokens.rows() == 576,
                   "dci must keep 576 tokens");

    ConnectorConfig dci_f2 = dci;
    dci_f2.efficient_factor = 2;
    VisualEmbedding down = connector_forward(stack, dci_f2, dci_p);
    ACCEPT_REQUIRE(down.tokens.rows() == 144, "dci with f=2 must emit 144 tokens");
    ACCEPT_REQUIRE(down.grid && down.grid->h == 12 && down.grid->w == 12,
                   "downsampled grid must be 12x12");

    // desk-geometry sweep must complete within one second
    const auto start = std::chrono::steady_clock::now();
    const StackGeometry desk = geometry_by_name("desk");
    FeatureStack small = synth_stack_for(desk, 11);
    for (Variant v : kAllVariants) {
        ConnectorConfig cfg = desk_cfg(v);
        ConnectorParams p = ConnectorParams::init(cfg, desk.dim, desk.depth(), 5);
        const std::size_t got = connector_forward(small, cfg, p).tokens.rows();
        const std::size_t want = cfg.output_tokens(desk.tokens, desk.grid);
        ACCEPT_REQUIRE(got == want, "desk shape law mismatch");
    }
    const double desk_secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ACCEPT_REQUIRE(desk_secs < 1.0, "desk-geometry suite exceeded 1s");
    return true;
}

bool degeneracy_suite() {
    FeatureStack s = synth_stack(21, 6, 16, 8, {4, 4});

    // dci with singleton groups == sci over the same entry list
    ConnectorConfig dcfg;
    dcfg.variant = Variant::dci;
    dcfg.groups = 6;
    dcfg.target_dim = 12;
    ConnectorParams shared = ConnectorParams::init(dcfg, 8, 6, 23);
    VisualEmbedding dci_out = dci_integrate(s, dcfg, shared);
    FeatureStack shifted;
    shifted.grid = s.grid;
    shifted.entries.push_back(Tensor::zeros({16, 8}));
    for (const auto& e : s.entries) {
        shifted.entries.push_back(e);
    }
    ConnectorConfig scfg;
    scfg.variant = Variant::sci;
    scfg.layers = {1, 2, 3, 4, 5, 6, 7};
    scfg.target_dim = 12;
    VisualEmbedding sci_out = sci_integrate(shifted, scfg, shared);
    ACCEPT_REQUIRE(max_abs_diff(dci_out.tokens, sci_out.tokens) <= 1e-12,
                   "dci singleton groups must equal sci over the same entries");

    // K=1 sparse selections == the plain final-layer projector path
    ConnectorConfig k1;
    k1.variant = Variant::sti;
    k1.layers = {6};
    k1.target_dim = 12;
    ConnectorParams k1_p = ConnectorParams::init(k1, 8, 6, 25);
    Tensor baseline = mlp_project_value(s.final_layer(), k1_p);
    ACCEPT_REQUIRE(max_abs_diff(sti_integrate(s, k1, k1_p).tokens, baseline) <= 1e-12,
                   "sti K=1 must equal the final-layer path");
    ConnectorConfig k1_sci = k1;
    k1_sci.variant = Variant::sci;
    ACCEPT_REQUIRE(max_abs_diff(sci_integrate(s, k1_sci, k1_p).tokens, baseline) <= 1e-12,
                   "sci K=1 must equal the final-layer path");

    // averaging kernel reduces sti_conv1d to sti
    ConnectorConfig conv1 = desk_cfg(Variant::sti_conv1d);
    ConnectorParams conv1_p = ConnectorParams::init(conv1, 8, 6, 27);
    *conv1_p.conv1d_w = Tensor::zeros({8, 8, 4});
    for (std::size_t c = 0; c < 8; ++c) {
        for (std::size_t t = 0; t < 4; ++t) {
            conv1_p.conv1d_w->at3(c, c, t) = 0.25;
        }
    }
    *conv1_p.conv1d_b = Tensor::zeros({8});
    ConnectorConfig pool = desk_cfg(Variant::sti);
    ACCEPT_REQUIRE(max_abs_diff(sti_conv_integrate(s, conv1, conv1_p).tokens,
                                sti_integrate(s, pool, conv1_p).tokens) <= 1e-12,
                   "averaging conv1d kernel must reproduce sti");

    // center-tap kernel reduces sci_conv2d to sci
    ConnectorConfig conv2 = desk_cfg(Variant::sci_conv2d);
    ConnectorParams conv2_p = ConnectorParams::init(conv2, 8, 6, 29);
    *conv2_p.conv2d_w = Tensor::zeros({8, 8, 3, 3});
    for (std::size_t c = 0; c < 8; ++c) {
        conv2_p.conv2d_w->at4(c, c, 1, 1) = 1.0;
    }
    *conv2_p.conv2d_b = Tensor::zeros({8});
    ConnectorConfig plain_sci = desk_cfg(Variant::sci);
    ACCEPT_REQUIRE(max_abs_diff(sci_conv_integrate(s, conv2, conv2_p).tokens,
                                sci_integrate(s, plain_sci, conv2_p).tokens) <= 1e-12,
                   "center-tap conv2d kernel must reproduce sci");
    return true;
}

bool gradient_audit() {
    for (Variant v : kAllVariants) {
        for (std::uint64_t seed : {1, 2, 3}) {
            GradCheckConfig gc;
            gc.connector = desk_cfg(v);
            gc.depth = 6;
            gc.tokens = 16;
            gc.dim = 8;
            gc.grid = {4, 4};
            gc.connector.target_dim = 12;
            gc.seed = seed;
            gc.eps = 1e-4;
            gc.tol = 1e-4;
            GradReport r = gradcheck(gc);
            if (!r.pass) {
                g_notes.push_back("    " + std::string(variant_name(v)) + " seed " +
                                  std::to_string(seed) + " max rel err " +
                                  std::to_string(r.global_max_rel_err));
                return false;
            }
        }
    }
    return true;
}

bool group_mean_oracle() {
    Rng seeds(99);
    for (int round = 0; round < 4; ++round) {
        const std::size_t depth = 4 + (seeds.next_u64() % 24);
        const std::size_t groups = 1 + (seeds.next_u64() % depth);
        FeatureStack s = synth_stack(seeds.next_u64(), depth, 12, 5, {3, 4});
        std::vector<Tensor> gv = dci_group(s, groups);
        const std::size_t grouped = dci_grouped_entry_count(depth, groups);
        const std::size_t m = grouped / groups;
        for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t i = 0; i < gv[g].numel(); ++i) {
                double acc = 0.0;
                for (std::size_t e = g * m; e < (g + 1) * m; ++e) {
                    acc += s.entries[e].data[i];
                }
                ACCEPT_REQUIRE(std::abs(gv[g].data[i] - acc / static_cast<double>(m)) <= 1e-12,
                               "group mean deviates from the brute-force oracle");
            }
        }
    }
    return true;
}

bool interpolation_correctness() {
    Rng rng(5);
    Tensor x = Tensor::uniform({24, 3}, rng, -1.0, 1.0);
    Tensor same = bilinear_resize_value(x, {4, 6}, {4, 6});
    ACCEPT_REQUIRE(x.data == same.data, "equal grids must be the exact identity");

    // affine channels reproduce exactly at several factors, up and down
    const Grid in{12, 8};
    Tensor affine({in.tokens(), 1});
    for (std::size_t r = 0; r < in.h; ++r) {
        for (std::size_t c = 0; c < in.w; ++c) {
            affine.at(r * in.w + c, 0) =
                0.75 - 1.25 * static_cast<double>(r) + 0.5 * static_cast<double>(c);
        }
    }
    for (Grid out : {Grid{6, 4}, Grid{3, 2}, Grid{12, 8}, Grid{24, 16}, Grid{4, 8}}) {
        Tensor y = bilinear_resize_value(affine, in, out);
        for (std::size_t r = 0; r < out.h; ++r) {
            for (std::size_t c = 0; c < out.w; ++c) {
                auto src = [](std::size_t i, std::size_t ni, std::size_t no) {
                    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(ni) /
                                   static_cast<double>(no) -
                               0.5;
                    return std::clamp(s, 0.0, static_cast<double>(ni - 1));
                };
                const double expect =
                    0.75 - 1.25 * src(r, in.h, out.h) + 0.5 * src(c, in.w, out.w);
                ACCEPT_REQUIRE(std::abs(y.at(r * out.w + c, 0) - expect) <= 1e-9,
                               "grid-affine channel not reproduced exactly");
            }
        }
    }

    Tensor grid576({576, 2});
    ACCEPT_REQUIRE(bilinear_resize_value(grid576, {24, 24}, {12, 12}).rows() == 144,
                   "24x24 -> 12x12 must give 144 tokens");
    return true;
}

bool multilayer_advantage() {
    ToyTaskSpec task;
    task.seed = 42;
    task.rule = TargetRule::stem_layer_linear;

    ConnectorConfig baseline;
    baseline.variant = Variant::sti;
    baseline.layers = {task.depth};
    baseline.target_dim = 24;
    TrainResult base = train_toy(task, baseline);

    ConnectorConfig dci;
    dci.variant = Variant::dci;
    dci.groups = 2;
    dci.target_dim = 24;
    TrainResult fused = train_toy(task, dci);

    const double floor = base.analytic_floor;
    ACCEPT_REQUIRE(floor > 0.0, "stem task must have a positive analytic floor");
    g_notes.push_back("    floor " + std::to_string(floor) + ", baseline " +
                      std::to_string(base.final_loss) + ", dci " + std::to_string(fused.final_loss));
    ACCEPT_REQUIRE(base.final_loss >= 0.9 * floor && base.final_loss <= 1.1 * floor,
                   "baseline must settle within 10% of the least-squares floor");
    ACCEPT_REQUIRE(fused.final_loss <= 0.1 * floor,
                   "dci(G=2) must reach a tenth of the baseline floor");
    return true;
}

bool cost_model_check() {
    const StackGeometry clip = geometry_by_name("clip-l-336");
    ConnectorConfig dci_f2;
    dci_f2.variant = Variant::dci;
    dci_f2.groups = 2;
    dci_f2.target_dim = 4096;
    dci_f2.efficient_factor = 2;
    CostReport r = stats(dci_f2, clip);
    ACCEPT_REQUIRE(r.tokens_out == 144 && r.tokens_baseline == 576, "token counts");
    ACCEPT_REQUIRE(r.token_reduction == 4.0, "576/144 must be exactly 4.0");
    ACCEPT_REQUIRE(r.llm_speedup >= 3.0, "llm proxy speedup must be at least 3x");

    // quadratic-term dominance: per layer the proxy costs 24 n d^2 + 4 n^2 d,
    // so speedup = 4 * (6d + 576) / (6d + 144) >= 4 for every d >= 1 and any
    // layer count; spot-check the closed form across proxy sizes
    for (std::size_t layers : {std::size_t{1}, std::size_t{8}, std::size_t{80}}) {
        for (std::size_t dim : {std::size_t{1}, std::size_t{256}, std::size_t{8192}}) {
            CostReport probe = stats(dci_f2, clip, LlmProxy{layers, dim});
            const double d = static_cast<double>(dim);
            const double closed = 4.0 * (6.0 * d + 576.0) / (6.0 * d + 144.0);
            ACCEPT_REQUIRE(std::abs(probe.llm_speedup - closed) <= 1e-9 * closed,
                           "speedup deviates from the closed form");
            ACCEPT_REQUIRE(probe.llm_speedup >= 3.0, "speedup fell below 3x");
        }
    }
    return true;
}

bool video_contract() {
    ACCEPT_REQUIRE(sample_frame_indices(16, 4) == std::vector<std::size_t>({2, 6, 10, 14}),
                   "frame sampling convention");

    VideoStack v;
    for (std::uint64_t i = 0; i < 5; ++i) {
        v.frames.push_back(synth_stack(900 + i, 6, 16, 8, {4, 4}));
    }
    ConnectorConfig cfg;
    cfg.variant = Variant::dci;
    cfg.groups = 2;
    cfg.target_dim = 12;
    ConnectorParams p = ConnectorParams::init(cfg, 8, 6, 31);
    VideoEmbedding emb = video_embed(v, cfg, p);
    for (std::size_t i = 0; i < v.frames.size(); ++i) {
        VisualEmbedding single = connector_forward(v.frames[i], cfg, p);
        ACCEPT_REQUIRE(emb.per_frame[i].tokens.data == single.tokens.data,
                       "per-frame embedding differs from the image path");
    }

    VideoStack one;
    one.frames.push_back(v.frames[2]);
    VideoEmbedding single = video_embed(one, cfg, p);
    ACCEPT_REQUIRE(single.per_frame[0].tokens.data ==
                       connector_forward(v.frames[2], cfg, p).tokens.data,
                   "T=1 must equal the image path");
    ACCEPT_REQUIRE(single.total_tokens() == 16, "total token accounting");
    return true;
}

bool format_roundtrip() {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "dc_acceptance";
    fs::create_directories(dir);

    FeatureStack s = synth_stack(77, 4, 16, 6, {4, 4});
    const std::string p64 = (dir / "a64.fstk").string();
    save_stack(s, p64, Dtype::f64);
    FeatureStack b64 = load_stack(p64);
    for (std::size_t e = 0; e < s.entries.size(); ++e) {
        ACCEPT_REQUIRE(b64.entries[e].data == s.entries[e].data, "f64 round-trip must be lossless");
    }

    const std::string p32 = (dir / "a32.fstk").string();
    save_stack(s, p32, Dtype::f32);
    FeatureStack b32 = load_stack(p32);
    for (std::size_t e = 0; e < s.entries.size(); ++e) {
        for (std::size_t i = 0; i < s.entries[e].numel(); ++i) {
            const double a = s.entries[e].data[i];
            const double b = b32.entries[e].data[i];
            ACCEPT_REQUIRE(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)),
                           "f32 round-trip out of tolerance");
        }
    }

    // distinct named errors for each corruption
    auto corrupt = [&](const char* name, std::size_t offset, char value) {
        const std::string path = (dir / name).string();
        save_stack(s, path, Dtype::f64);
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(static_cast<std::streamoff>(offset));
        f.write(&value, 1);
        return path;
    };
    errc seen[4] = {};
    try {
        load_stack(corrupt("m.fstk", 0, 'Z'));
    } catch (const error& e) {
        seen[0] = e.code();
    }
    try {
        load_stack(corrupt("v.fstk", 4, 9));
    } catch (const error& e) {
        seen[1] = e.code();
    }
    {
        const std::string path = (dir / "t.fstk").string();
        save_stack(s, path, Dtype::f64);
        fs::resize_file(path, fs::file_size(path) / 2);
        try {
            load_stack(path);
        } catch (const error& e) {
            seen[2] = e.code();
        }
    }
    {
        const std::string path = (dir / "n.fstk").string();
        save_stack(s, path, Dtype::f64);
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(26);  // first payload byte after the 26-byte header
        const std::uint64_t nan_bits = 0x7ff8000000000000ULL;
        f.write(reinterpret_cast<const char*>(&nan_bits), 8);
        f.close();
        try {
            load_stack(path);
        } catch (const error& e) {
            seen[3] = e.code();
        }
    }
    ACCEPT_REQUIRE(seen[0] == errc::bad_magic, "corrupted magic must raise bad magic");
    ACCEPT_REQUIRE(seen[1] == errc::bad_version, "corrupted version must raise bad version");
    ACCEPT_REQUIRE(seen[2] == errc::truncated, "truncation must raise truncated");
    ACCEPT_REQUIRE(seen[3] == errc::non_finite, "NaN payload must raise non-finite");
    ACCEPT_REQUIRE(seen[0] != seen[1] && seen[1] != seen[2] && seen[2] != seen[3],
                   "corruption errors must be distinct");
    return true;
}

}  // namespace

int main() {
    run_criterion(1, "shape laws: 720 / 576 / 144 tokens on clip-l-336", shape_law_suite);
    run_criterion(2, "degeneracy oracles: dci==sci==baseline, kernel reductions", degeneracy_suite);
    run_criterion(3, "gradient audit: six variants, seeds 1-3, tol 1e-4", gradient_audit);
    run_criterion(4, "group-mean brute-force oracle", group_mean_oracle);
    run_criterion(5, "bilinear interpolation correctness", interpolation_correctness);
    run_criterion(6, "multi-layer advantage on the stem task", multilayer_advantage);
    run_criterion(7, "cost model: 4x tokens, >=3x llm-proxy flops", cost_model_check);
    run_criterion(8, "video contract: per-frame equality and sampling", video_contract);
    run_criterion(9, "fstk container round-trips and named corruption errors", format_roundtrip);

    if (g_failures != 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
