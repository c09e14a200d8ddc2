// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/ops.hpp"

#include <algorithm>
#include <cmath>

namespace dc {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double norm_cdf(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2));
}

double norm_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void require_2d(const Tensor& t, const std::string& what) {
    if (t.rank() != 2) {
        fail(errc::shape_mismatch, what + " must be 2-D, got " + t.shape_str());
    }
}

}  // namespace

// ---- linear -----------------------------------------------------------------

Tensor linear_value(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_2d(x, "linear input");
    require_2d(w, "linear weight");
    if (x.cols() != w.rows()) {
        fail(errc::shape_mismatch, "linear: input channel axis " + x.shape_str() +
                                       " does not match weight input axis " + w.shape_str());
    }
    if (b.shape != std::vector<std::size_t>{w.cols()}) {
        fail(errc::shape_mismatch, "linear: bias " + b.shape_str() + " does not match weight output axis " +
                                       w.shape_str());
    }
    const std::size_t n = x.rows(), din = x.cols(), dout = w.cols();
    Tensor y({n, dout});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < din; ++k) {
            const double xv = x.at(i, k);
            const double* wr = &w.data[k * dout];
            double* yr = &y.data[i * dout];
            for (std::size_t j = 0; j < dout; ++j) {
                yr[j] += xv * wr[j];
            }
        }
        for (std::size_t j = 0; j < dout; ++j) {
            y.at(i, j) += b.data[j];
        }
    }
    return y;
}

GradPair linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = linear_value(x, w, b);
    return {std::move(y), [x, w](const Tensor& g) {
                const std::size_t n = x.rows(), din = x.cols(), dout = w.cols();
                require_shape(g, {n, dout}, "linear upstream");
                Tensor dx({n, din});
                Tensor dw({din, dout});
                Tensor db({dout});
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < dout; ++j) {
                        const double gv = g.at(i, j);
                        db.data[j] += gv;
                        for (std::size_t k = 0; k < din; ++k) {
                            dx.at(i, k) += gv * w.at(k, j);
                            dw.at(k, j) += x.at(i, k) * gv;
                        }
                    }
                }
                return std::vector<Tensor>{std::move(dx), std::move(dw), std::move(db)};
            }};
}

// ---- gelu ------------------------------------------------------------------

Tensor gelu_value(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data) {
        v = v * norm_cdf(v);
    }
    return y;
}

GradPair gelu(const Tensor& x) {
    Tensor y = gelu_value(x);
    return {std::move(y), [x](const Tensor& g) {
                require_shape(g, x.shape, "gelu upstream");
                Tensor dx = x;
                for (std::size_t i = 0; i < dx.numel(); ++i) {
                    const double v = x.data[i];
                    dx.data[i] = g.data[i] * (norm_cdf(v) + v * norm_pdf(v));
                }
                return std::vector<Tensor>{std::move(dx)};
            }};
}

// ---- layer norm ------------------------------------------------------------

Tensor layer_norm_value(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_2d(x, "layer_norm input");
    const std::size_t n = x.rows(), d = x.cols();
    require_shape(gamma, {d}, "layer_norm gamma");
    require_shape(beta, {d}, "layer_norm beta");
    Tensor y({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mean += x.at(i, j);
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            y.at(i, j) = (x.at(i, j) - mean) * inv * gamma.data[j] + beta.data[j];
        }
    }
    return y;
}

GradPair layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    Tensor y = layer_norm_value(x, gamma, beta, eps);
    return {std::move(y), [x, gamma, eps](const Tensor& g) {
                const std::size_t n = x.rows(), d = x.cols();
                require_shape(g, {n, d}, "layer_norm upstream");
                Tensor dx({n, d});
                Tensor dgamma({d});
                Tensor dbeta({d});
                std::vector<double> xhat(d);
                for (std::size_t i = 0; i < n; ++i) {
                    double mean = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        mean += x.at(i, j);
                    }
                    mean /= static_cast<double>(d);
                    double var = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double c = x.at(i, j) - mean;
                        var += c * c;
                    }
                    var /= static_cast<double>(d);
                    const double inv = 1.0 / std::sqrt(var + eps);
                    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        xhat[j] = (x.at(i, j) - mean) * inv;
                        const double dxh = g.at(i, j) * gamma.data[j];
                        mean_dxhat += dxh;
                        mean_dxhat_xhat += dxh * xhat[j];
                        dgamma.data[j] += g.at(i, j) * xhat[j];
                        dbeta.data[j] += g.at(i, j);
                    }
                    mean_dxhat /= static_cast<double>(d);
                    mean_dxhat_xhat /= static_cast<double>(d);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dxh = g.at(i, j) * gamma.data[j];
                        dx.at(i, j) = inv * (dxh - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                    }
                }
                return std::vector<Tensor>{std::move(dx), std::move(dgamma), std::move(dbeta)};
            }};
}

// ---- token pooling ----------------------------------------------------------

Tensor avg_pool_tokens_value(const Tensor& x, std::size_t alpha) {
    require_2d(x, "avg_pool_tokens input");
    if (alpha == 0) {
        fail(errc::bad_argument, "avg_pool_tokens: stride must be >= 1");
    }
    const std::size_t n = x.rows(), d = x.cols();
    if (n % alpha != 0) {
        fail(errc::divisibility, "avg_pool_tokens: stride " + std::to_string(alpha) +
                                     " does not divide token count " + std::to_string(n));
    }
    const std::size_t m = n / alpha;
    Tensor y({m, d});
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < alpha; ++t) {
            for (std::size_t c = 0; c < d; ++c) {
                y.at(j, c) += x.at(j * alpha + t, c);
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            y.at(j, c) /= static_cast<double>(alpha);
        }
    }
    return y;
}

GradPair avg_pool_tokens(const Tensor& x, std::size_t alpha) {
    Tensor y = avg_pool_tokens_value(x, alpha);
    const std::vector<std::size_t> xshape = x.shape;
    return {std::move(y), [xshape, alpha](const Tensor& g) {
                const std::size_t m = xshape[0] / alpha, d = xshape[1];
                require_shape(g, {m, d}, "avg_pool_tokens upstream");
                Tensor dx(xshape);
                const double scale = 1.0 / static_cast<double>(alpha);
                for (std::size_t j = 0; j < m; ++j) {
                    for (std::size_t t = 0; t < alpha; ++t) {
                        for (std::size_t c = 0; c < d; ++c) {
                            dx.at(j * alpha + t, c) = g.at(j, c) * scale;
                        }
                    }
                }
                return std::vector<Tensor>{std::move(dx)};
            }};
}

// ---- 1-D token convolution (stride == kernel) --------------------------------

Tensor conv1d_tokens_value(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_2d(x, "conv1d_tokens input");
    if (w.rank() != 3) {
        fail(errc::shape_mismatch, "conv1d_tokens kernel must be [D_out x D_in x k], got " + w.shape_str());
    }
    const std::size_t n = x.rows(), d = x.cols();
    const std::size_t dout = w.shape[0], din = w.shape[1], k = w.shape[2];
    if (din != d) {
        fail(errc::shape_mismatch, "conv1d_tokens: kernel input channels " + w.shape_str() +
                                       " do not match input " + x.shape_str());
    }
    require_shape(b, {dout}, "conv1d_tokens bias");
    if (k == 0 || n % k != 0) {
        fail(errc::divisibility, "conv1d_tokens: kernel size " + std::to_string(k) +
                                     " does not divide token count " + std::to_string(n));
    }
    const std::size_t m = n / k;
    Tensor y({m, dout});
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t o = 0; o < dout; ++o) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) {
                for (std::size_t i = 0; i < din; ++i) {
                    acc += x.at(j * k + t, i) * w.at3(o, i, t);
                }
            }
            y.at(j, o) = acc + b.data[o];
        }
    }
    return y;
}

GradPair conv1d_tokens(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = conv1d_tokens_value(x, w, b);
    return {std::move(y), [x, w](const Tensor& g) {
                const std::size_t dout = w.shape[0], din = w.shape[1], k = w.shape[2];
                const std::size_t m = x.rows() / k;
                require_shape(g, {m, dout}, "conv1d_tokens upstream");
                Tensor dx(x.shape);
                Tensor dw(w.shape);
                Tensor db({dout});
                for (std::size_t j = 0; j < m; ++j) {
                    for (std::size_t o = 0; o < dout; ++o) {
                        const double gv = g.at(j, o);
                        db.data[o] += gv;
                        for (std::size_t t = 0; t < k; ++t) {
                            for (std::size_t i = 0; i < din; ++i) {
                                dx.at(j * k + t, i) += gv * w.at3(o, i, t);
                                dw.at3(o, i, t) += gv * x.at(j * k + t, i);
                            }
                        }
                    }
                }
                return std::vector<Tensor>{std::move(dx), std::move(dw), std::move(db)};
            }};
}

// ---- 3x3 grid convolution ----------------------------------------------------

Tensor conv2d_grid_value(const Tensor& x, Grid grid, const Tensor& w, const Tensor& b) {
    require_2d(x, "conv2d_grid input");
    if (grid.tokens() != x.rows()) {
        fail(errc::grid_mismatch, "conv2d_grid: grid " + std::to_string(grid.h) + "x" +
                                      std::to_string(grid.w) + " does not cover " +
                                      std::to_string(x.rows()) + " tokens");
    }
    if (w.rank() != 4 || w.shape[2] != 3 || w.shape[3] != 3) {
        fail(errc::shape_mismatch, "conv2d_grid kernel must be [D_out x D_in x 3 x 3], got " + w.shape_str());
    }
    const std::size_t dout = w.shape[0], din = w.shape[1], d = x.cols();
    if (din != d) {
        fail(errc::shape_mismatch, "conv2d_grid: kernel input channels " + w.shape_str() +
                                       " do not match input " + x.shape_str());
    }
    require_shape(b, {dout}, "conv2d_grid bias");
    const std::size_t hp = grid.h, wp = grid.w;
    Tensor y({hp * wp, dout});
    for (std::size_t r = 0; r < hp; ++r) {
        for (std::size_t c = 0; c < wp; ++c) {
            for (std::size_t o = 0; o < dout; ++o) {
                double acc = 0.0;
                for (std::size_t dr = 0; dr < 3; ++dr) {
                    for (std::size_t dcidx = 0; dcidx < 3; ++dcidx) {
                        // zero padding of one pixel on every side
                        const long rr = static_cast<long>(r) + static_cast<long>(dr) - 1;
                        const long cc = static_cast<long>(c) + static_cast<long>(dcidx) - 1;
                        if (rr < 0 || cc < 0 || rr >= static_cast<long>(hp) || cc >= static_cast<long>(wp)) {
                            continue;
                        }
                        const std::size_t src = static_cast<std::size_t>(rr) * wp + static_cast<std::size_t>(cc);
                        for (std::size_t i = 0; i < din; ++i) {
                            acc += x.at(src, i) * w.at4(o, i, dr, dcidx);
                        }
                    }
                }
                y.at(r * wp + c, o) = acc + b.data[o];
            }
        }
    }
    return y;
}

GradPair conv2d_grid(const Tensor& x, Grid grid, const Tensor& w, const Tensor& b) {
    Tensor y = conv2d_grid_value(x, grid, w, b);
    return {std::move(y), [x, grid, w](const Tensor& g) {
                const std::size_t dout = w.shape[0], din = w.shape[1];
                const std::size_t hp = grid.h, wp = grid.w;
                require_shape(g, {hp * wp, dout}, "conv2d_grid upstream");
                Tensor dx(x.shape);
                Tensor dw(w.shape);
                Tensor db({dout});
                for (std::size_t r = 0; r < hp; ++r) {
                    for (std::size_t c = 0; c < wp; ++c) {
                        for (std::size_t o = 0; o < dout; ++o) {
                            const double gv = g.at(r * wp + c, o);
                            db.data[o] += gv;
                            for (std::size_t dr = 0; dr < 3; ++dr) {
                                for (std::size_t dcidx = 0; dcidx < 3; ++dcidx) {
                                    const long rr = static_cast<long>(r) + static_cast<long>(dr) - 1;
                                    const long cc = static_cast<long>(c) + static_cast<long>(dcidx) - 1;
                                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(hp) ||
                                        cc >= static_cast<long>(wp)) {
                                        continue;
                                    }
                                    const std::size_t src =
                                        static_cast<std::size_t>(rr) * wp + static_cast<std::size_t>(cc);
                                    for (std::size_t i = 0; i < din; ++i) {
                                        dx.at(src, i) += gv * w.at4(o, i, dr, dcidx);
                                        dw.at4(o, i, dr, dcidx) += gv * x.at(src, i);
                                    }
                                }
                            }
                        }
                    }
                }
                return std::vector<Tensor>{std::move(dx), std::move(dw), std::move(db)};
            }};
}

// ---- bilinear resize ----------------------------------------------------------

namespace {

struct Tap {
    std::size_t lo;
    std::size_t hi;
    double frac;  // weight of hi; lo gets 1-frac
};

// half-pixel-center source coordinate, clamped to the valid range
Tap resize_tap(std::size_t i, std::size_t in_extent, std::size_t out_extent) {
    const double scale = static_cast<double>(in_extent) / static_cast<double>(out_extent);
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_extent - 1));
    const double fl = std::floor(src);
    Tap t;
    t.lo = static_cast<std::size_t>(fl);
    t.hi = std::min(t.lo + 1, in_extent - 1);
    t.frac = src - fl;
    return t;
}

}  // namespace

Tensor bilinear_resize_value(const Tensor& x, Grid grid_in, Grid grid_out) {
    require_2d(x, "bilinear_resize input");
    if (grid_in.tokens() != x.rows()) {
        fail(errc::grid_mismatch, "bilinear_resize: input grid " + std::to_string(grid_in.h) + "x" +
                                      std::to_string(grid_in.w) + " does not cover " +
                                      std::to_string(x.rows()) + " tokens");
    }
    if (grid_in.h == 0 || grid_in.w == 0 || grid_out.h == 0 || grid_out.w == 0) {
        fail(errc::grid_mismatch, "bilinear_resize: grid extents must be >= 1");
    }
    const std::size_t d = x.cols();
    Tensor y({grid_out.tokens(), d});
    for (std::size_t r = 0; r < grid_out.h; ++r) {
        const Tap tr = resize_tap(r, grid_in.h, grid_out.h);
        for (std::size_t c = 0; c < grid_out.w; ++c) {
            const Tap tc = resize_tap(c, grid_in.w, grid_out.w);
            const double w00 = (1.0 - tr.frac) * (1.0 - tc.frac);
            const double w01 = (1.0 - tr.frac) * tc.frac;
            const double w10 = tr.frac * (1.0 - tc.frac);
            const double w11 = tr.frac * tc.frac;
            const std::size_t i00 = tr.lo * grid_in.w + tc.lo;
            const std::size_t i01 = tr.lo * grid_in.w + tc.hi;
            const std::size_t i10 = tr.hi * grid_in.w + tc.lo;
            const std::size_t i11 = tr.hi * grid_in.w + tc.hi;
            for (std::size_t ch = 0; ch < d; ++ch) {
                y.at(r * grid_out.w + c, ch) = w00 * x.at(i00, ch) + w01 * x.at(i01, ch) +
                                               w10 * x.at(i10, ch) + w11 * x.at(i11, ch);
            }
        }
    }
    return y;
}

GradPair bilinear_resize(const Tensor& x, Grid grid_in, Grid grid_out) {
    Tensor y = bilinear_resize_value(x, grid_in, grid_out);
    const std::vector<std::size_t> xshape = x.shape;
    return {std::move(y), [xshape, grid_in, grid_out](const Tensor& g) {
                const std::size_t d = xshape[1];
                require_shape(g, {grid_out.tokens(), d}, "bilinear_resize upstream");
                Tensor dx(xshape);
                for (std::size_t r = 0; r < grid_out.h; ++r) {
                    const Tap tr = resize_tap(r, grid_in.h, grid_out.h);
                    for (std::size_t c = 0; c < grid_out.w; ++c) {
                        const Tap tc = resize_tap(c, grid_in.w, grid_out.w);
                        const double w00 = (1.0 - tr.frac) * (1.0 - tc.frac);
                        const double w01 = (1.0 - tr.frac) * tc.frac;
                        const double w10 = tr.frac * (1.0 - tc.frac);
                        const double w11 = tr.frac * tc.frac;
                        const std::size_t i00 = tr.lo * grid_in.w + tc.lo;
                        const std::size_t i01 = tr.lo * grid_in.w + tc.hi;
                        const std::size_t i10 = tr.hi * grid_in.w + tc.lo;
                        const std::size_t i11 = tr.hi * grid_in.w + tc.hi;
                        for (std::size_t ch = 0; ch < d; ++ch) {
                            const double gv = g.at(r * grid_out.w + c, ch);
                            dx.at(i00, ch) += w00 * gv;
                            dx.at(i01, ch) += w01 * gv;
                            dx.at(i10, ch) += w10 * gv;
                            dx.at(i11, ch) += w11 * gv;
                        }
                    }
                }
                return std::vector<Tensor>{std::move(dx)};
            }};
}

// ---- concatenation -------------------------------------------------------------

Tensor concat_value(const std::vector<Tensor>& parts, Axis axis) {
    if (parts.empty()) {
        fail(errc::bad_argument, "concat: needs at least one part");
    }
    for (const auto& p : parts) {
        require_2d(p, "concat part");
    }
    const std::size_t fixed = axis == Axis::token ? parts[0].cols() : parts[0].rows();
    std::size_t total = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::size_t f = axis == Axis::token ? parts[i].cols() : parts[i].rows();
        if (f != fixed) {
            fail(errc::shape_mismatch, "concat: part " + std::to_string(i) + " has " +
                                           parts[i].shape_str() + ", expected " +
                                           (axis == Axis::token ? "channel" : "token") + " extent " +
                                           std::to_string(fixed));
        }
        total += axis == Axis::token ? parts[i].rows() : parts[i].cols();
    }
    if (axis == Axis::token) {
        Tensor y({total, fixed});
        std::size_t row = 0;
        for (const auto& p : parts) {
            std::copy(p.data.begin(), p.data.end(), y.data.begin() + row * fixed);
            row += p.rows();
        }
        return y;
    }
    Tensor y({fixed, total});
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < fixed; ++i) {
            std::copy(p.data.begin() + i * p.cols(), p.data.begin() + (i + 1) * p.cols(),
                      y.data.begin() + i * total + off);
        }
        off += p.cols();
    }
    return y;
}

GradPair concat(const std::vector<Tensor>& parts, Axis axis) {
    Tensor y = concat_value(parts, axis);
    std::vector<std::vector<std::size_t>> shapes;
    shapes.reserve(parts.size());
    for (const auto& p : parts) {
        shapes.push_back(p.shape);
    }
    const std::vector<std::size_t> yshape = y.shape;
    return {std::move(y), [shapes, yshape, axis](const Tensor& g) {
                require_shape(g, yshape, "concat upstream");
                std::vector<Tensor> grads;
                grads.reserve(shapes.size());
                if (axis == Axis::token) {
                    std::size_t row = 0;
                    const std::size_t d = yshape[1];
                    for (const auto& s : shapes) {
                        Tensor dp(s);
                        std::copy(g.data.begin() + row * d, g.data.begin() + (row + s[0]) * d,
                                  dp.data.begin());
                        row += s[0];
                        grads.push_back(std::move(dp));
                    }
                } else {
                    std::size_t off = 0;
                    const std::size_t total = yshape[1], n = yshape[0];
                    for (const auto& s : shapes) {
                        Tensor dp(s);
                        for (std::size_t i = 0; i < n; ++i) {
                            std::copy(g.data.begin() + i * total + off,
                                      g.data.begin() + i * total + off + s[1],
                                      dp.data.begin() + i * s[1]);
                        }
                        off += s[1];
                        grads.push_back(std::move(dp));
                    }
                }
                return grads;
            }};
}

// ---- finite differences ----------------------------------------------------------

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double eps) {
    Tensor grad(x.shape);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + eps;
        const double fp = f(probe);
        probe.data[i] = orig - eps;
        const double fm = f(probe);
        probe.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            fail(errc::non_finite, "finite_diff_gradient: objective produced a non-finite value");
        }
        grad.data[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

}  // namespace dc
