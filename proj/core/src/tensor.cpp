// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "dc/rng.hpp"

namespace dc {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    for (std::size_t d : shape) {
        if (d == 0) {
            fail(errc::shape_mismatch, "zero extent in shape " + dc::shape_str(shape));
        }
    }
    data.assign(shape_numel(shape), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size()) {
        fail(errc::shape_mismatch, "shape " + dc::shape_str(shape) + " expects " +
                                       std::to_string(shape_numel(shape)) + " values, got " +
                                       std::to_string(data.size()));
    }
}

Tensor Tensor::full(std::vector<std::size_t> s, double value) {
    Tensor t(std::move(s));
    for (auto& x : t.data) {
        x = value;
    }
    return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> s, Rng& rng, double lo, double hi) {
    Tensor t(std::move(s));
    for (auto& x : t.data) {
        x = rng.uniform(lo, hi);
    }
    return t;
}

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

std::string Tensor::shape_str() const {
    return dc::shape_str(shape);
}

void require_shape(const Tensor& t, const std::vector<std::size_t>& expect, const std::string& what) {
    if (t.shape != expect) {
        fail(errc::shape_mismatch,
             what + ": expected " + dc::shape_str(expect) + ", got " + t.shape_str());
    }
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) {
        fail(errc::non_finite, what + " contains a non-finite value");
    }
}

const char* errc_name(errc c) {
    switch (c) {
        case errc::shape_mismatch: return "shape mismatch";
        case errc::divisibility: return "divisibility";
        case errc::grid_mismatch: return "grid mismatch";
        case errc::bad_magic: return "bad magic";
        case errc::bad_version: return "bad version";
        case errc::truncated: return "truncated";
        case errc::non_finite: return "non-finite";
        case errc::bad_state: return "bad state";
        case errc::bad_config: return "bad config";
        case errc::out_of_bounds: return "out of bounds";
        case errc::bad_argument: return "bad argument";
        case errc::diverged: return "diverged";
    }
    return "unknown";
}

}  // namespace dc
