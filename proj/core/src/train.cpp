// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/train.hpp"

#include <cmath>
#include <string>

#include "dc/parallel.hpp"
#include "dc/rng.hpp"

namespace dc {

const char* target_rule_name(TargetRule r) {
    return r == TargetRule::final_layer_linear ? "final-layer-linear" : "stem-layer-linear";
}

TargetRule target_rule_from_string(const std::string& s) {
    if (s == "final-layer-linear") return TargetRule::final_layer_linear;
    if (s == "stem-layer-linear") return TargetRule::stem_layer_linear;
    fail(errc::bad_config, "rule: unknown target rule '" + s +
                               "' (expected final-layer-linear or stem-layer-linear)");
}

namespace {

struct ToyData {
    std::vector<FeatureStack> stacks;   // one per batch item
    std::vector<Tensor> targets;        // [N x D_t] each
    Tensor map;                         // [D_v x D_t]
    double floor = 0.0;
};

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor y({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = a.at(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                y.at(i, j) += av * b.at(k, j);
            }
        }
    }
    return y;
}

ToyData make_toy_data(const ToyTaskSpec& task, std::size_t target_dim) {
    if (task.batch == 0) {
        fail(errc::bad_config, "batch: must be >= 1");
    }
    if (task.grid.tokens() != task.tokens) {
        fail(errc::grid_mismatch, "task grid does not cover the token count");
    }
    ToyData data;
    const Rng root(task.seed);

    // fixed target map, scaled so targets stay O(1)
    Rng map_rng = root.fork(1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(task.dim));
    data.map = Tensor::uniform({task.dim, target_dim}, map_rng, -bound, bound);

    // per-layer scales tying non-final blocks to the stem (stem rule only)
    Rng scale_rng = root.fork(2);
    std::vector<double> scales(task.depth >= 1 ? task.depth - 1 : 0);
    for (auto& s : scales) {
        s = scale_rng.uniform(0.6, 1.4);
    }

    data.stacks.resize(task.batch);
    data.targets.resize(task.batch);
    for (std::size_t b = 0; b < task.batch; ++b) {
        Rng item_rng = root.fork(100 + b);
        FeatureStack s;
        s.grid = task.grid;
        s.entries.reserve(task.depth + 1);
        if (task.rule == TargetRule::final_layer_linear) {
            for (std::size_t l = 0; l < task.depth + 1; ++l) {
                s.entries.push_back(Tensor::uniform({task.tokens, task.dim}, item_rng, -1.0, 1.0));
            }
            data.targets[b] = matmul(s.entries.back(), data.map);
        } else {
            Tensor stem = Tensor::uniform({task.tokens, task.dim}, item_rng, -1.0, 1.0);
            s.entries.push_back(stem);
            for (std::size_t l = 1; l < task.depth; ++l) {
                Tensor scaled = stem;
                for (auto& v : scaled.data) {
                    v *= scales[l - 1];
                }
                s.entries.push_back(std::move(scaled));
            }
            s.entries.push_back(Tensor::uniform({task.tokens, task.dim}, item_rng, -1.0, 1.0));
            data.targets[b] = matmul(stem, data.map);
        }
        data.stacks[b] = std::move(s);
    }

    if (task.rule == TargetRule::stem_layer_linear) {
        // best predictor of the target from an independent final layer is its
        // mean (zero), so the reachable floor is the target variance:
        // Var(target_ij) = sum_k map[k,j]^2 * Var(U(-1,1)), averaged over j
        double acc = 0.0;
        for (double v : data.map.data) {
            acc += v * v;
        }
        data.floor = acc / (3.0 * static_cast<double>(target_dim));
    }
    return data;
}

}  // namespace

TrainResult train_toy(const ToyTaskSpec& task, const ConnectorConfig& cfg) {
    ToyData data = make_toy_data(task, cfg.target_dim);
    ConnectorParams params = ConnectorParams::init(cfg, task.dim, task.depth, task.seed);
    const std::vector<ParamSpec> inventory = param_shapes(cfg, task.dim, task.depth);

    const std::size_t batch = task.batch;
    const double norm =
        static_cast<double>(batch) * static_cast<double>(task.tokens) * static_cast<double>(cfg.target_dim);

    struct ItemResult {
        double sq_err = 0.0;
        NamedTensors grads;
    };

    auto evaluate = [&](bool with_grads) {
        std::vector<ItemResult> items(batch);
        parallel_for(batch, [&](std::size_t b) {
            ItemResult& item = items[b];
            if (with_grads) {
                ConnectorTape tape = connector_forward_with_grads(data.stacks[b], cfg, params);
                Tensor diff = tape.out.tokens;
                for (std::size_t i = 0; i < diff.numel(); ++i) {
                    diff.data[i] -= data.targets[b].data[i];
                    item.sq_err += diff.data[i] * diff.data[i];
                }
                Tensor upstream = diff;
                for (auto& v : upstream.data) {
                    v *= 2.0 / norm;
                }
                item.grads = tape.backward(upstream);
            } else {
                const VisualEmbedding out = connector_forward(data.stacks[b], cfg, params);
                for (std::size_t i = 0; i < out.tokens.numel(); ++i) {
                    const double d = out.tokens.data[i] - data.targets[b].data[i];
                    item.sq_err += d * d;
                }
            }
        });
        return items;
    };

    TrainResult result;
    result.analytic_floor = data.floor;
    result.losses.reserve(task.steps);

    for (std::size_t step = 0; step < task.steps; ++step) {
        std::vector<ItemResult> items = evaluate(true);
        double loss = 0.0;
        for (const auto& item : items) {
            loss += item.sq_err;
        }
        loss /= norm;
        if (!std::isfinite(loss) || loss > 1e6) {
            fail(errc::diverged, "toy training diverged at step " + std::to_string(step) +
                                     " (loss " + std::to_string(loss) + ")");
        }
        result.losses.push_back(loss);

        // reduce gradients in batch order, then one plain GD step
        for (std::size_t slot = 0; slot < inventory.size(); ++slot) {
            Tensor total(items[0].grads[slot].second.shape);
            for (std::size_t b = 0; b < batch; ++b) {
                const Tensor& g = items[b].grads[slot].second;
                for (std::size_t i = 0; i < total.numel(); ++i) {
                    total.data[i] += g.data[i];
                }
            }
            Tensor& target = param_by_name(params, inventory[slot].name);
            for (std::size_t i = 0; i < target.numel(); ++i) {
                target.data[i] -= task.learning_rate * total.data[i];
            }
        }
    }

    std::vector<ItemResult> last = evaluate(false);
    double final_loss = 0.0;
    for (const auto& item : last) {
        final_loss += item.sq_err;
    }
    result.final_loss = final_loss / norm;
    if (!std::isfinite(result.final_loss) || result.final_loss > 1e6) {
        fail(errc::diverged, "toy training diverged after the last update");
    }
    return result;
}

}  // namespace dc
