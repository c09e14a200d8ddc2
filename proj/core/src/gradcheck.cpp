// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dc/parallel.hpp"

namespace dc {

namespace {

double half_sum_squares(const Tensor& t) {
    double acc = 0.0;
    for (double x : t.data) {
        acc += x * x;
    }
    return 0.5 * acc;
}

}  // namespace

GradReport gradcheck(const GradCheckConfig& cfg) {
    const FeatureStack stack = synth_stack(cfg.seed, cfg.depth, cfg.tokens, cfg.dim, cfg.grid);
    const ConnectorParams params =
        ConnectorParams::init(cfg.connector, cfg.dim, cfg.depth, cfg.seed);

    // analytic side: with L = 0.5*sum(out^2) the upstream gradient is out itself
    ConnectorTape tape = connector_forward_with_grads(stack, cfg.connector, params);
    const NamedTensors analytic = connector_grads(stack, cfg.connector, params, tape.out.tokens);

    const std::vector<ParamSpec> inventory = param_shapes(cfg.connector, cfg.dim, cfg.depth);
    if (analytic.size() != inventory.size()) {
        fail(errc::bad_state, "gradient inventory does not match param_shapes");
    }

    GradReport report;
    report.tol = cfg.tol;
    report.params.resize(inventory.size());

    parallel_for(inventory.size(), [&](std::size_t idx) {
        const ParamSpec& spec = inventory[idx];
        if (analytic[idx].first != spec.name) {
            fail(errc::bad_state, "gradient order mismatch at '" + spec.name + "'");
        }
        // numeric side: perturb one parameter tensor, full forward each probe
        auto loss_at = [&](const Tensor& probe) {
            ConnectorParams perturbed = params;
            param_by_name(perturbed, spec.name) = probe;
            return half_sum_squares(connector_forward(stack, cfg.connector, perturbed).tokens);
        };
        const Tensor& current = param_by_name(const_cast<ConnectorParams&>(params), spec.name);
        const Tensor numeric = finite_diff_gradient(loss_at, current, cfg.eps);
        const Tensor& exact = analytic[idx].second;
        double max_rel = 0.0;
        for (std::size_t i = 0; i < numeric.numel(); ++i) {
            const double a = exact.data[i];
            const double n = numeric.data[i];
            if (std::abs(a - n) <= cfg.abs_escape) {
                continue;
            }
            const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
            max_rel = std::max(max_rel, std::abs(a - n) / denom);
        }
        report.params[idx] = {spec.name, spec.shape, max_rel};
    });

    for (const auto& pc : report.params) {
        report.global_max_rel_err = std::max(report.global_max_rel_err, pc.max_rel_err);
    }
    report.pass = report.global_max_rel_err <= report.tol;
    return report;
}

}  // namespace dc
