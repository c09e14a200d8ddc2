// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0
//
// dctool: forward passes, cost accounting, gradient audits, toy training,
// attention dumps, and video embedding over FSTK stacks.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "dc/connector.hpp"
#include "dc/fstk.hpp"
#include "dc/gradcheck.hpp"
#include "dc/stats.hpp"
#include "dc/train.hpp"
#include "dc/video.hpp"
#include "summary.hpp"

using namespace dc;
using dctool::Json;

namespace {

int exit_code_for(const error& e) {
    switch (e.code()) {
        case errc::bad_config:
        case errc::bad_argument:
        case errc::out_of_bounds:
        case errc::shape_mismatch:
        case errc::divisibility:
        case errc::grid_mismatch:
            return 2;
        default:
            return 1;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(errc::bad_argument, path + ": cannot open for reading");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ConnectorConfig load_config(const std::string& path) {
    return ConnectorConfig::from_json_text(read_file(path));
}

// --geometry plus per-field overrides; the built-in token/grid assumptions
// (notably the siglip 27x27 grid) can be overridden without a custom name
struct GeometryFlags {
    std::string name = "desk";
    std::size_t tokens = 0;
    std::size_t dim = 0;
    std::size_t entries = 0;
    std::string grid;

    void attach(CLI::App* cmd) {
        cmd->add_option("--geometry", name, "built-in stack geometry: clip-l-336, siglip-so-384, desk")
            ->capture_default_str();
        cmd->add_option("--tokens", tokens, "override the token count");
        cmd->add_option("--dv", dim, "override the feature dimension D_v");
        cmd->add_option("--entries", entries, "override the stem-inclusive entry count");
        cmd->add_option("--grid", grid, "override the token grid, e.g. 24x24");
    }

    StackGeometry resolve() const {
        StackGeometry geo = geometry_by_name(name);
        if (tokens) geo.tokens = tokens;
        if (dim) geo.dim = dim;
        if (entries) geo.entries = entries;
        if (!grid.empty()) {
            const auto x = grid.find('x');
            if (x == std::string::npos) {
                fail(errc::bad_argument, "grid: expected HxW, got '" + grid + "'");
            }
            geo.grid.h = std::stoul(grid.substr(0, x));
            geo.grid.w = std::stoul(grid.substr(x + 1));
        }
        if (geo.grid.tokens() != geo.tokens) {
            fail(errc::grid_mismatch, "grid " + std::to_string(geo.grid.h) + "x" +
                                          std::to_string(geo.grid.w) + " does not cover " +
                                          std::to_string(geo.tokens) + " tokens");
        }
        if (geo.entries < 2) {
            fail(errc::bad_argument, "entries: need the stem plus at least one block");
        }
        return geo;
    }
};

Json shape_json(const std::vector<std::size_t>& shape) {
    Json arr = Json::array();
    for (std::size_t d : shape) {
        arr.push(Json::num(d));
    }
    return arr;
}

void print_summary(const Json& j) {
    std::cout << j.dump() << "\n";
}

// ---- subcommand bodies -------------------------------------------------------

struct ForwardArgs {
    std::string config;
    std::string stack;
    GeometryFlags geo;
    std::uint64_t seed = 0;
    std::string params;
    std::string out;
    std::string save_params;
};

int run_forward(const ForwardArgs& a) {
    ConnectorConfig cfg = load_config(a.config);
    FeatureStack s;
    std::string source;
    if (!a.stack.empty()) {
        s = load_stack(a.stack);
        source = a.stack;
    } else {
        StackGeometry geo = a.geo.resolve();
        s = synth_stack_for(geo, a.seed);
        source = "synth:" + geo.name;
    }
    ConnectorParams p = a.params.empty()
                            ? ConnectorParams::init(cfg, s.dim(), s.depth(), a.seed)
                            : ConnectorParams::from_named(load_tensors(a.params));
    VisualEmbedding e = connector_forward(s, cfg, p);
    if (!a.save_params.empty()) {
        save_tensors(p.named(), a.save_params);
    }
    if (!a.out.empty()) {
        save_tensors({{"tokens", e.tokens}}, a.out);
    }
    Json j = Json::object();
    j.set("command", Json::str("forward"));
    j.set("variant", Json::str(variant_name(cfg.variant)));
    j.set("stack", Json::str(source));
    j.set("tokens", Json::num(e.tokens.rows()));
    j.set("dim", Json::num(e.tokens.cols()));
    if (e.grid) {
        j.set("grid", Json::array().push(Json::num(e.grid->h)).push(Json::num(e.grid->w)));
    }
    if (!a.out.empty()) {
        j.set("out", Json::str(a.out));
    }
    print_summary(j);
    return 0;
}

struct StatsArgs {
    std::string config;
    GeometryFlags geo;
    std::size_t proxy_layers = 32;
    std::size_t proxy_dim = 4096;
};

int run_stats(const StatsArgs& a) {
    ConnectorConfig cfg = load_config(a.config);
    StackGeometry geo = a.geo.resolve();
    CostReport r = stats(cfg, geo, LlmProxy{a.proxy_layers, a.proxy_dim});
    Json j = Json::object();
    j.set("command", Json::str("stats"));
    j.set("variant", Json::str(r.variant));
    j.set("geometry", Json::str(r.geometry));
    j.set("tokens", Json::num(r.tokens_out));
    j.set("tokens_baseline", Json::num(r.tokens_baseline));
    j.set("token_ratio", Json::num(r.token_ratio));
    j.set("token_reduction", Json::num(r.token_reduction));
    j.set("connector_params", Json::num(r.connector_params));
    j.set("connector_params_baseline", Json::num(r.connector_params_baseline));
    j.set("connector_flops", Json::num(r.connector_flops));
    j.set("connector_flops_baseline", Json::num(r.connector_flops_baseline));
    j.set("llm_proxy_flops", Json::num(r.llm_proxy_flops));
    j.set("llm_proxy_flops_baseline", Json::num(r.llm_proxy_flops_baseline));
    j.set("llm_flop_ratio", Json::num(r.llm_flop_ratio));
    j.set("llm_speedup", Json::num(r.llm_speedup));
    j.set("proxy", Json::object()
                       .set("layers", Json::num(r.proxy.layers))
                       .set("dim", Json::num(r.proxy.dim)));
    Json formulas = Json::array();
    for (const auto& f : r.formulas) {
        formulas.push(Json::str(f));
    }
    j.set("formulas", std::move(formulas));
    print_summary(j);
    return 0;
}

struct GradcheckArgs {
    std::string config;
    GeometryFlags geo;
    std::uint64_t seed = 42;
    double eps = 1e-4;
    double tol = 1e-4;
};

int run_gradcheck(const GradcheckArgs& a) {
    GradCheckConfig gc;
    gc.connector = load_config(a.config);
    StackGeometry geo = a.geo.resolve();
    gc.depth = geo.depth();
    gc.tokens = geo.tokens;
    gc.dim = geo.dim;
    gc.grid = geo.grid;
    gc.seed = a.seed;
    gc.eps = a.eps;
    gc.tol = a.tol;
    GradReport r = gradcheck(gc);
    Json j = Json::object();
    j.set("command", Json::str("gradcheck"));
    j.set("variant", Json::str(variant_name(gc.connector.variant)));
    j.set("geometry", Json::str(geo.name));
    j.set("seed", Json::num(static_cast<std::uint64_t>(a.seed)));
    j.set("eps", Json::num(a.eps));
    j.set("tol", Json::num(a.tol));
    Json params = Json::array();
    for (const auto& pc : r.params) {
        params.push(Json::object()
                        .set("name", Json::str(pc.name))
                        .set("shape", shape_json(pc.shape))
                        .set("max_rel_err", Json::num(pc.max_rel_err)));
    }
    j.set("params", std::move(params));
    j.set("global_max_rel_err", Json::num(r.global_max_rel_err));
    j.set("pass", Json::boolean(r.pass));
    print_summary(j);
    if (!r.pass) {
        std::cerr << "error: gradient audit failed: max relative error "
                  << r.global_max_rel_err << " exceeds tolerance " << r.tol << "\n";
        return 1;
    }
    return 0;
}

struct TrainArgs {
    std::string config;
    GeometryFlags geo;
    std::string rule = "final-layer-linear";
    std::uint64_t seed = 42;
    std::size_t steps = ToyTaskSpec{}.steps;
    double lr = ToyTaskSpec{}.learning_rate;
    std::size_t batch = ToyTaskSpec{}.batch;
    std::string out;
};

int run_train(const TrainArgs& a) {
    ConnectorConfig cfg = load_config(a.config);
    StackGeometry geo = a.geo.resolve();
    ToyTaskSpec task;
    task.seed = a.seed;
    task.depth = geo.depth();
    task.tokens = geo.tokens;
    task.dim = geo.dim;
    task.grid = geo.grid;
    task.rule = target_rule_from_string(a.rule);
    task.steps = a.steps;
    task.learning_rate = a.lr;
    task.batch = a.batch;
    TrainResult r = train_toy(task, cfg);
    if (!a.out.empty()) {
        Tensor curve({r.losses.size()}, r.losses);
        save_tensors({{"losses", curve}}, a.out);
    }
    Json j = Json::object();
    j.set("command", Json::str("train-toy"));
    j.set("variant", Json::str(variant_name(cfg.variant)));
    j.set("rule", Json::str(a.rule));
    j.set("seed", Json::num(static_cast<std::uint64_t>(a.seed)));
    j.set("steps", Json::num(a.steps));
    j.set("learning_rate", Json::num(a.lr));
    j.set("batch", Json::num(a.batch));
    j.set("initial_loss", Json::num(r.losses.empty() ? r.final_loss : r.losses.front()));
    j.set("final_loss", Json::num(r.final_loss));
    if (task.rule == TargetRule::stem_layer_linear) {
        j.set("analytic_floor", Json::num(r.analytic_floor));
    }
    Json losses = Json::array();
    for (double l : r.losses) {
        losses.push(Json::num(l));
    }
    j.set("losses", std::move(losses));
    if (!a.out.empty()) {
        j.set("out", Json::str(a.out));
    }
    print_summary(j);
    return 0;
}

struct DumpAttnArgs {
    std::size_t layer = 0;
    std::uint64_t seed = 42;
    std::size_t img = 32;
    std::size_t patch = 8;
    std::size_t depth = 6;
    std::size_t heads = 2;
    std::size_t dim = 16;
    std::size_t channels = 3;
    std::string out;
};

int run_dump_attn(const DumpAttnArgs& a) {
    Image img = synth_image(a.seed, a.img, a.img, a.channels);
    EncoderParams p =
        EncoderParams::init(a.seed, a.patch, a.depth, a.heads, a.dim, a.img, a.img, a.channels);
    FeatureStack s = toy_vit_forward(img, p, true);
    Tensor attn = dump_attention(s, a.layer);
    if (!a.out.empty()) {
        save_tensors({{"attention", attn}}, a.out);
    }
    Json j = Json::object();
    j.set("command", Json::str("dump-attn"));
    j.set("layer", Json::num(a.layer));
    j.set("tokens", Json::num(attn.rows()));
    j.set("heads", Json::num(a.heads));
    j.set("depth", Json::num(a.depth));
    if (!a.out.empty()) {
        j.set("out", Json::str(a.out));
    }
    print_summary(j);
    return 0;
}

struct VideoArgs {
    std::string config;
    std::string stack;
    GeometryFlags geo;
    std::uint64_t seed = 0;
    std::size_t total_frames = 0;
    std::size_t frames = 0;  // T, required
    std::string out;
};

int run_video(const VideoArgs& a) {
    ConnectorConfig cfg = load_config(a.config);
    std::vector<FeatureStack> all;
    std::string source;
    if (!a.stack.empty()) {
        all = load_stack_sequence(a.stack);
        source = a.stack;
    } else {
        if (a.total_frames == 0) {
            fail(errc::bad_argument, "video: need --stack or --total-frames for a synthetic clip");
        }
        StackGeometry geo = a.geo.resolve();
        for (std::size_t f = 0; f < a.total_frames; ++f) {
            all.push_back(synth_stack_for(geo, a.seed + f));
        }
        source = "synth:" + geo.name;
    }
    const std::vector<std::size_t> indices = sample_frame_indices(all.size(), a.frames);
    VideoStack v;
    for (std::size_t idx : indices) {
        v.frames.push_back(all[idx]);
    }
    ConnectorParams p = ConnectorParams::init(cfg, v.frames[0].dim(), v.frames[0].depth(), a.seed);
    VideoEmbedding emb = video_embed(v, cfg, p);
    if (!a.out.empty()) {
        NamedTensors frames;
        char name[32];
        for (std::size_t i = 0; i < emb.per_frame.size(); ++i) {
            std::snprintf(name, sizeof(name), "frame_%04zu", i);
            frames.emplace_back(name, emb.per_frame[i].tokens);
        }
        save_tensors(frames, a.out);
    }
    Json j = Json::object();
    j.set("command", Json::str("video"));
    j.set("variant", Json::str(variant_name(cfg.variant)));
    j.set("stack", Json::str(source));
    j.set("frames_available", Json::num(all.size()));
    j.set("frames_sampled", Json::num(indices.size()));
    Json idx = Json::array();
    for (std::size_t i : indices) {
        idx.push(Json::num(i));
    }
    j.set("indices", std::move(idx));
    j.set("tokens_per_frame", Json::num(emb.per_frame[0].tokens.rows()));
    j.set("total_tokens", Json::num(emb.total_tokens()));
    if (!a.out.empty()) {
        j.set("out", Json::str(a.out));
    }
    print_summary(j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-layer visual-feature fusion toolkit"};
    app.require_subcommand(1);

    ForwardArgs fwd;
    CLI::App* forward = app.add_subcommand("forward", "fuse a feature stack into visual tokens");
    forward->add_option("--config", fwd.config, "connector config JSON")->required();
    forward->add_option("--stack", fwd.stack, "input FSTK stack (default: synthetic)");
    fwd.geo.attach(forward);
    forward->add_option("--seed", fwd.seed, "seed for synthetic stacks and parameter init")
        ->capture_default_str();
    forward->add_option("--params", fwd.params, "load parameters from an FSTK tensor container");
    forward->add_option("--out", fwd.out, "write the embedding as an FSTK tensor container");
    forward->add_option("--save-params", fwd.save_params, "write the parameters used");

    StatsArgs st;
    CLI::App* stats_cmd = app.add_subcommand("stats", "token/parameter/flop accounting");
    stats_cmd->add_option("--config", st.config, "connector config JSON")->required();
    st.geo.attach(stats_cmd);
    stats_cmd->add_option("--proxy-layers", st.proxy_layers, "analytic decoder proxy layer count")
        ->capture_default_str();
    stats_cmd->add_option("--proxy-dim", st.proxy_dim, "analytic decoder proxy hidden size")
        ->capture_default_str();

    GradcheckArgs gc;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "audit analytic gradients against finite differences");
    gradcheck_cmd->add_option("--config", gc.config, "connector config JSON")->required();
    gc.geo.attach(gradcheck_cmd);
    gradcheck_cmd->add_option("--seed", gc.seed, "stack and parameter seed")->capture_default_str();
    gradcheck_cmd->add_option("--eps", gc.eps, "central-difference step")->capture_default_str();
    gradcheck_cmd->add_option("--tol", gc.tol, "max relative error allowed")->capture_default_str();

    TrainArgs tr;
    CLI::App* train_cmd =
        app.add_subcommand("train-toy", "full-batch gradient descent on a synthetic task");
    train_cmd->add_option("--config", tr.config, "connector config JSON")->required();
    tr.geo.attach(train_cmd);
    train_cmd->add_option("--rule", tr.rule, "target rule: final-layer-linear or stem-layer-linear")
        ->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "task seed")->capture_default_str();
    train_cmd->add_option("--steps", tr.steps, "gradient descent steps")->capture_default_str();
    train_cmd->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
    train_cmd->add_option("--batch", tr.batch, "synthetic stacks per batch")->capture_default_str();
    train_cmd->add_option("--out", tr.out, "write the loss curve as an FSTK tensor container");

    DumpAttnArgs da;
    CLI::App* dump_cmd =
        app.add_subcommand("dump-attn", "head-averaged attention map of one toy-encoder block");
    dump_cmd->add_option("--layer", da.layer, "block index, 1-based")->required();
    dump_cmd->add_option("--seed", da.seed, "image and encoder seed")->capture_default_str();
    dump_cmd->add_option("--img-size", da.img, "square image size in pixels")->capture_default_str();
    dump_cmd->add_option("--patch", da.patch, "patch size")->capture_default_str();
    dump_cmd->add_option("--depth", da.depth, "encoder depth")->capture_default_str();
    dump_cmd->add_option("--heads", da.heads, "attention heads")->capture_default_str();
    dump_cmd->add_option("--dv", da.dim, "encoder width D_v")->capture_default_str();
    dump_cmd->add_option("--channels", da.channels, "image channels")->capture_default_str();
    dump_cmd->add_option("--out", da.out, "write the attention matrix");

    VideoArgs vid;
    CLI::App* video_cmd =
        app.add_subcommand("video", "embed uniformly sampled frames with the image connector");
    video_cmd->add_option("--config", vid.config, "connector config JSON")->required();
    video_cmd->add_option("--stack", vid.stack,
                          "frame source: directory of .fstk files or one concatenated container");
    vid.geo.attach(video_cmd);
    video_cmd->add_option("--seed", vid.seed, "seed for synthetic frames and parameters")
        ->capture_default_str();
    video_cmd->add_option("--total-frames", vid.total_frames,
                          "synthetic clip length when no --stack is given");
    video_cmd->add_option("--frames", vid.frames, "number of frames T to sample")->required();
    video_cmd->add_option("--out", vid.out, "write per-frame embeddings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (forward->parsed()) return run_forward(fwd);
        if (stats_cmd->parsed()) return run_stats(st);
        if (gradcheck_cmd->parsed()) return run_gradcheck(gc);
        if (train_cmd->parsed()) return run_train(tr);
        if (dump_cmd->parsed()) return run_dump_attn(da);
        if (video_cmd->parsed()) return run_video(vid);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
