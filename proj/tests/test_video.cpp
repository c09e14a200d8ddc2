// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "dc/video.hpp"
#include "test_util.hpp"

using namespace dc;
using dctest::bitwise_equal;

namespace {

ConnectorConfig dci_cfg(std::size_t f = 1) {
    ConnectorConfig cfg;
    cfg.variant = Variant::dci;
    cfg.groups = 2;
    cfg.target_dim = 12;
    cfg.efficient_factor = f;
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("video");

TEST_CASE("sample_frame_indices: full coverage when counts match") {
    CHECK(sample_frame_indices(5, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("sample_frame_indices: documented center-of-bin values") {
    CHECK(sample_frame_indices(16, 4) == std::vector<std::size_t>{2, 6, 10, 14});
}

TEST_CASE("sample_frame_indices: repeats when the clip is short") {
    CHECK(sample_frame_indices(3, 5) == std::vector<std::size_t>{0, 0, 1, 2, 2});
}

TEST_CASE("sample_frame_indices: zero counts are rejected") {
    for (auto [f, t] : {std::pair<std::size_t, std::size_t>{0, 3}, {3, 0}}) {
        try {
            sample_frame_indices(f, t);
            FAIL("expected argument error");
        } catch (const error& e) {
            CHECK(e.code() == errc::bad_argument);
        }
    }
}

TEST_CASE("video_embed: per-frame outputs equal the image path bitwise") {
    VideoStack v;
    for (std::uint64_t s = 0; s < 4; ++s) {
        v.frames.push_back(synth_stack(200 + s, 6, 16, 8, {4, 4}));
    }
    ConnectorConfig cfg = dci_cfg();
    ConnectorParams p = ConnectorParams::init(cfg, 8, 6, 7);
    VideoEmbedding emb = video_embed(v, cfg, p);
    REQUIRE(emb.per_frame.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        VisualEmbedding single = connector_forward(v.frames[i], cfg, p);
        CHECK(bitwise_equal(emb.per_frame[i].tokens, single.tokens));
    }
    CHECK(emb.total_tokens() == 4 * 16);
}

TEST_CASE("video_embed: one frame equals the image path") {
    VideoStack v;
    v.frames.push_back(synth_stack(300, 6, 16, 8, {4, 4}));
    ConnectorConfig cfg = dci_cfg();
    ConnectorParams p = ConnectorParams::init(cfg, 8, 6, 9);
    VideoEmbedding emb = video_embed(v, cfg, p);
    REQUIRE(emb.per_frame.size() == 1);
    CHECK(bitwise_equal(emb.per_frame[0].tokens, connector_forward(v.frames[0], cfg, p).tokens));
}

TEST_CASE("video_embed: eight downsampled 24x24 frames give 1152 tokens") {
    // the 576 -> 144 grid reduction composes with T frames; a shallow narrow
    // stack keeps the full-geometry token grid while staying desk-fast
    VideoStack v;
    for (std::uint64_t s = 0; s < 8; ++s) {
        v.frames.push_back(synth_stack(400 + s, 2, 576, 4, {24, 24}));
    }
    ConnectorConfig cfg = dci_cfg(2);
    ConnectorParams p = ConnectorParams::init(cfg, 4, 2, 11);
    VideoEmbedding emb = video_embed(v, cfg, p);
    for (const auto& f : emb.per_frame) {
        CHECK(f.tokens.rows() == 144);
    }
    CHECK(emb.total_tokens() == 1152);
}

TEST_CASE("video_embed: reordering frames reorders outputs, values unchanged") {
    VideoStack v;
    for (std::uint64_t s = 0; s < 3; ++s) {
        v.frames.push_back(synth_stack(500 + s, 6, 16, 8, {4, 4}));
    }
    ConnectorConfig cfg = dci_cfg();
    ConnectorParams p = ConnectorParams::init(cfg, 8, 6, 13);
    VideoEmbedding base = video_embed(v, cfg, p);
    VideoStack swapped;
    swapped.frames = {v.frames[2], v.frames[0], v.frames[1]};
    VideoEmbedding moved = video_embed(swapped, cfg, p);
    CHECK(bitwise_equal(moved.per_frame[0].tokens, base.per_frame[2].tokens));
    CHECK(bitwise_equal(moved.per_frame[1].tokens, base.per_frame[0].tokens));
    CHECK(bitwise_equal(moved.per_frame[2].tokens, base.per_frame[1].tokens));
}

TEST_CASE("video_embed: results are bit-identical across thread schedules") {
    VideoStack v;
    for (std::uint64_t s = 0; s < 8; ++s) {
        v.frames.push_back(synth_stack(800 + s, 6, 16, 8, {4, 4}));
    }
    ConnectorConfig cfg = dci_cfg();
    ConnectorParams p = ConnectorParams::init(cfg, 8, 6, 15);
    setenv("DC_THREADS", "0", 1);  // serial
    VideoEmbedding serial = video_embed(v, cfg, p);
    setenv("DC_THREADS", "4", 1);
    VideoEmbedding threaded = video_embed(v, cfg, p);
    unsetenv("DC_THREADS");
    for (std::size_t i = 0; i < v.frames.size(); ++i) {
        CHECK(bitwise_equal(serial.per_frame[i].tokens, threaded.per_frame[i].tokens));
    }
}

TEST_CASE("video stack geometry must be homogeneous") {
    VideoStack v;
    v.frames.push_back(synth_stack(600, 6, 16, 8, {4, 4}));
    v.frames.push_back(synth_stack(601, 6, 16, 4, {4, 4}));
    try {
        v.validate();
        FAIL("expected shape mismatch");
    } catch (const error& e) {
        CHECK(e.code() == errc::shape_mismatch);
    }
}

TEST_SUITE_END();
