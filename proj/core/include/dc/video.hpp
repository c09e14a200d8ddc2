// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dc/connector.hpp"

namespace dc {

// Ordered frames sharing one stack geometry. No temporal mixing anywhere:
// the image connector is applied to each frame independently.
struct VideoStack {
    std::vector<FeatureStack> frames;

    void validate() const;  // nonempty, homogeneous geometry
};

struct VideoEmbedding {
    std::vector<VisualEmbedding> per_frame;

    std::size_t total_tokens() const;
};

// Uniform center-of-bin sampling: idx_i = floor((i+0.5)*total/target) for
// i in 0..target-1. Nondecreasing; indices repeat when target > total.
std::vector<std::size_t> sample_frame_indices(std::size_t total, std::size_t target);

// Per-frame connector_forward with identical parameters, output in frame
// order. Frames may be processed concurrently (see DC_THREADS); the result
// is bit-identical regardless of schedule.
VideoEmbedding video_embed(const VideoStack& v, const ConnectorConfig& cfg,
                           const ConnectorParams& p);

}  // namespace dc
