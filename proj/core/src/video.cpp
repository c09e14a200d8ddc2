// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/video.hpp"

#include <string>

#include "dc/parallel.hpp"

namespace dc {

void VideoStack::validate() const {
    if (frames.empty()) {
        fail(errc::bad_argument, "video stack needs at least one frame");
    }
    frames[0].validate();
    const std::size_t entries = frames[0].entries.size();
    const std::size_t n = frames[0].tokens();
    const std::size_t d = frames[0].dim();
    const Grid grid = frames[0].grid;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        frames[i].validate();
        if (frames[i].entries.size() != entries || frames[i].tokens() != n ||
            frames[i].dim() != d || !(frames[i].grid == grid)) {
            fail(errc::shape_mismatch, "frame " + std::to_string(i) +
                                           " geometry differs from frame 0");
        }
    }
}

std::size_t VideoEmbedding::total_tokens() const {
    std::size_t total = 0;
    for (const auto& e : per_frame) {
        total += e.tokens.rows();
    }
    return total;
}

std::vector<std::size_t> sample_frame_indices(std::size_t total, std::size_t target) {
    if (total == 0 || target == 0) {
        fail(errc::bad_argument, "sample_frame_indices: frame counts must be >= 1");
    }
    std::vector<std::size_t> idx(target);
    for (std::size_t i = 0; i < target; ++i) {
        const double center = (static_cast<double>(i) + 0.5) * static_cast<double>(total) /
                              static_cast<double>(target);
        std::size_t v = static_cast<std::size_t>(center);
        if (v >= total) {
            v = total - 1;
        }
        idx[i] = v;
    }
    return idx;
}

VideoEmbedding video_embed(const VideoStack& v, const ConnectorConfig& cfg,
                           const ConnectorParams& p) {
    v.validate();
    VideoEmbedding out;
    out.per_frame.resize(v.frames.size());
    parallel_for(v.frames.size(), [&](std::size_t i) {
        out.per_frame[i] = connector_forward(v.frames[i], cfg, p);
    });
    return out;
}

}  // namespace dc
