// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dc/connector.hpp"

namespace dc {

// Audit setup: a connector variant on a synthetic desk-scale stack with
// randomly initialized parameters, objective L = 0.5 * sum(out^2).
struct GradCheckConfig {
    ConnectorConfig connector;
    std::size_t depth = 6;
    std::size_t tokens = 16;
    std::size_t dim = 8;  // D_v
    Grid grid{4, 4};
    std::uint64_t seed = 42;
    double eps = 1e-4;
    double tol = 1e-4;
    // disagreements below this count as exact: central differences carry
    // O(eps^2) truncation noise that would otherwise dominate near-zero
    // coordinates, while a wrong adjoint errs at the gradient's own scale
    double abs_escape = 1e-8;
};

struct ParamCheck {
    std::string name;
    std::vector<std::size_t> shape;
    double max_rel_err = 0.0;
};

struct GradReport {
    std::vector<ParamCheck> params;  // one entry per parameter tensor, inventory order
    double global_max_rel_err = 0.0;
    double tol = 0.0;
    bool pass = false;
};

// Checks every parameter tensor of the variant against central finite
// differences. Relative error per coordinate is |a-n| / max(|a|,|n|,1e-6).
GradReport gradcheck(const GradCheckConfig& cfg);

}  // namespace dc
