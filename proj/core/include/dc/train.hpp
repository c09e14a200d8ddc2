// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dc/connector.hpp"

namespace dc {

// Synthetic regression target for the desk-scale training demo.
//   final_layer_linear: targets are a fixed linear map of the final layer;
//     the stack is fully i.i.d., so the final-layer baseline can realize it.
//   stem_layer_linear: targets are a fixed linear map of the stem; non-final
//     blocks are per-layer scalar multiples of the stem, while the final layer
//     is drawn independently — the baseline sees nothing but noise, a grouped
//     connector sees the stem through its group means.
enum class TargetRule { final_layer_linear, stem_layer_linear };

const char* target_rule_name(TargetRule r);
TargetRule target_rule_from_string(const std::string& s);

struct ToyTaskSpec {
    std::uint64_t seed = 42;
    std::size_t depth = 6;
    std::size_t tokens = 16;
    std::size_t dim = 8;  // D_v
    Grid grid{4, 4};
    TargetRule rule = TargetRule::final_layer_linear;
    std::size_t steps = 2000;
    double learning_rate = 3.0;
    std::size_t batch = 64;
};

struct TrainResult {
    std::vector<double> losses;  // full-batch MSE entering each step
    double final_loss = 0.0;     // MSE after the last update
    // population least-squares floor of the final-layer baseline; exact for
    // stem_layer_linear (target variance), zero for the realizable rule
    double analytic_floor = 0.0;
};

// Full-batch gradient descent on the MSE between the connector output and the
// task targets, updating every parameter of the variant. Deterministic given
// the spec; aborts with errc::diverged when the loss exceeds 1e6.
TrainResult train_toy(const ToyTaskSpec& task, const ConnectorConfig& cfg);

}  // namespace dc
