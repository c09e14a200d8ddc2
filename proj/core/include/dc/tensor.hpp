// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dc/error.hpp"

namespace dc {

class Rng;

// Dense row-major f64 tensor. The invariant product(shape) == data.size()
// holds for every constructed value; constructors enforce it.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    // zero-filled
    explicit Tensor(std::vector<std::size_t> s);

    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<std::size_t> s, double value);
    static Tensor uniform(std::vector<std::size_t> s, Rng& rng, double lo, double hi);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    // 2-D accessors; most of the connector math lives on [tokens x channels]
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    std::string shape_str() const;
};

std::string shape_str(const std::vector<std::size_t>& shape);
std::size_t shape_numel(const std::vector<std::size_t>& shape);

// throws errc::shape_mismatch naming `what` when shapes differ
void require_shape(const Tensor& t, const std::vector<std::size_t>& expect, const std::string& what);

// throws errc::non_finite naming `what` when a NaN/Inf is present
void require_finite(const Tensor& t, const std::string& what);

// Spatial arrangement of patch tokens, row-major: token index = r*w + c.
struct Grid {
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t tokens() const { return h * w; }
    bool operator==(const Grid&) const = default;
};

}  // namespace dc
