#pragma once

#include <atomic>
#include <cmath>
#include <cstring>
#include <vector>

#include "artauth/core/kdispatch.hpp"
#include "artauth/core/tensor.hpp"

// Differentiable operation library. Each op validates shapes, runs the
// forward through the kernel layer and wires a backward closure that
// accumulates into the gradients of inputs that track them.

namespace artauth::core {

namespace detail {

template <typename T>
std::int64_t rows_for_last_axis(const Tensor<T>& x) {
    const std::int64_t c = x.shape().back();
    return c == 0 ? 0 : x.numel() / c;
}

template <typename T>
bool wants_grad(const Tensor<T>& t) {
    return t.requires_grad();
}

}  // namespace detail

// ---- matrix products -------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto y = Tensor<T>::result({m, n}, "matmul", {a, b});
    kp::gemm_nn(m, n, k, a.data().data(), b.data().data(), y.mutable_data().data(), false);
    if (y.requires_grad()) {
        y.set_backward([a, b, m, n, k](typename Tensor<T>::Node& node) {
            const T* g = node.grad.data();
            if (a.requires_grad()) {
                auto ga = const_cast<Tensor<T>&>(a).mutable_grad();
                kp::gemm_nt(m, k, n, g, b.data().data(), ga.data(), true);
            }
            if (b.requires_grad()) {
                auto gb = const_cast<Tensor<T>&>(b).mutable_grad();
                kp::gemm_tn(k, n, m, a.data().data(), g, gb.data(), true);
            }
        });
    }
    return y;
}

// y[i] = a[i] * b[i]  (batched, both [B,m,k] and [B,k,n])
template <typename T>
Tensor<T> bmm_nn(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1))
        throw ShapeError("bmm_nn shape mismatch: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::int64_t bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    auto y = Tensor<T>::result({bs, m, n}, "bmm_nn", {a, b});
    for (std::int64_t i = 0; i < bs; ++i) {
        kp::gemm_nn(m, n, k, a.data().data() + i * m * k, b.data().data() + i * k * n,
                    y.mutable_data().data() + i * m * n, false);
    }
    if (y.requires_grad()) {
        y.set_backward([a, b, bs, m, n, k](typename Tensor<T>::Node& node) {
            for (std::int64_t i = 0; i < bs; ++i) {
                const T* g = node.grad.data() + i * m * n;
                if (a.requires_grad()) {
                    auto ga = const_cast<Tensor<T>&>(a).mutable_grad();
                    kp::gemm_nt(m, k, n, g, b.data().data() + i * k * n,
                                ga.data() + i * m * k, true);
                }
                if (b.requires_grad()) {
                    auto gb = const_cast<Tensor<T>&>(b).mutable_grad();
                    kp::gemm_tn(k, n, m, a.data().data() + i * m * k, g,
                                gb.data() + i * k * n, true);
                }
            }
        });
    }
    return y;
}

// y[i] = a[i] * b[i]^T  (a [B,m,k], b [B,n,k])
template <typename T>
Tensor<T> bmm_nt(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
        throw ShapeError("bmm_nt shape mismatch: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::int64_t bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(1);
    auto y = Tensor<T>::result({bs, m, n}, "bmm_nt", {a, b});
    for (std::int64_t i = 0; i < bs; ++i) {
        kp::gemm_nt(m, n, k, a.data().data() + i * m * k, b.data().data() + i * n * k,
                    y.mutable_data().data() + i * m * n, false);
    }
    if (y.requires_grad()) {
        y.set_backward([a, b, bs, m, n, k](typename Tensor<T>::Node& node) {
            for (std::int64_t i = 0; i < bs; ++i) {
                const T* g = node.grad.data() + i * m * n;
                if (a.requires_grad()) {
                    auto ga = const_cast<Tensor<T>&>(a).mutable_grad();
                    kp::gemm_nn(m, k, n, g, b.data().data() + i * n * k,
                                ga.data() + i * m * k, true);
                }
                if (b.requires_grad()) {
                    auto gb = const_cast<Tensor<T>&>(b).mutable_grad();
                    kp::gemm_tn(n, k, m, g, a.data().data() + i * m * k,
                                gb.data() + i * n * k, true);
                }
            }
        });
    }
    return y;
}

// Affine map over the last axis, broadcast over leading axes.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
    if (w.rank() != 2 || x.shape().back() != w.dim(0))
        throw ShapeError("linear shape mismatch: x " + shape_str(x.shape()) + ", W " +
                         shape_str(w.shape()));
    const std::int64_t din = w.dim(0), dout = w.dim(1);
    const std::int64_t rows = x.numel() / din;
    const bool with_bias = bias.defined();
    if (with_bias && (bias.rank() != 1 || bias.dim(0) != dout))
        throw ShapeError("linear bias shape " + shape_str(bias.shape()) +
                         " does not match output width " + std::to_string(dout));
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    out_shape.push_back(dout);
    auto y = with_bias ? Tensor<T>::result(std::move(out_shape), "linear", {x, w, bias})
                       : Tensor<T>::result(std::move(out_shape), "linear", {x, w});
    T* yd = y.mutable_data().data();
    kp::gemm_nn(rows, dout, din, x.data().data(), w.data().data(), yd, false);
    if (with_bias) {
        const T* bd = bias.data().data();
        for (std::int64_t r = 0; r < rows; ++r) kp::add(dout, yd + r * dout, bd, yd + r * dout);
    }
    if (y.requires_grad()) {
        y.set_backward([x, w, bias, rows, din, dout, with_bias](typename Tensor<T>::Node& node) {
            const T* g = node.grad.data();
            if (x.requires_grad()) {
                auto gx = const_cast<Tensor<T>&>(x).mutable_grad();
                kp::gemm_nt(rows, din, dout, g, w.data().data(), gx.data(), true);
            }
            if (w.requires_grad()) {
                auto gw = const_cast<Tensor<T>&>(w).mutable_grad();
                kp::gemm_tn(din, dout, rows, x.data().data(), g, gw.data(), true);
            }
            if (with_bias && bias.requires_grad()) {
                auto gb = const_cast<Tensor<T>&>(bias).mutable_grad();
                for (std::int64_t r = 0; r < rows; ++r)
                    kp::add(dout, gb.data(), g + r * dout, gb.data());
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w) {
    return linear(x, w, Tensor<T>{});
}

// ---- elementwise -----------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("add shape mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    auto y = Tensor<T>::result(a.shape(), "add", {a, b});
    kp::add(a.numel(), a.data().data(), b.data().data(), y.mutable_data().data());
    if (y.requires_grad()) {
        y.set_backward([a, b](typename Tensor<T>::Node& node) {
            const auto n = static_cast<std::int64_t>(node.grad.size());
            if (a.requires_grad())
                kp::axpy(n, T(1), node.grad.data(),
                         const_cast<Tensor<T>&>(a).mutable_grad().data());
            if (b.requires_grad())
                kp::axpy(n, T(1), node.grad.data(),
                         const_cast<Tensor<T>&>(b).mutable_grad().data());
        });
    }
    return y;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul shape mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    auto y = Tensor<T>::result(a.shape(), "mul", {a, b});
    kp::mul(a.numel(), a.data().data(), b.data().data(), y.mutable_data().data());
    if (y.requires_grad()) {
        y.set_backward([a, b](typename Tensor<T>::Node& node) {
            const auto n = static_cast<std::int64_t>(node.grad.size());
            std::vector<T> tmp(n);
            if (a.requires_grad()) {
                kp::mul(n, node.grad.data(), b.data().data(), tmp.data());
                kp::axpy(n, T(1), tmp.data(),
                         const_cast<Tensor<T>&>(a).mutable_grad().data());
            }
            if (b.requires_grad()) {
                kp::mul(n, node.grad.data(), a.data().data(), tmp.data());
                kp::axpy(n, T(1), tmp.data(),
                         const_cast<Tensor<T>&>(b).mutable_grad().data());
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T alpha) {
    auto y = Tensor<T>::result(x.shape(), "scale", {x});
    kp::scale(x.numel(), alpha, x.data().data(), y.mutable_data().data());
    if (y.requires_grad()) {
        y.set_backward([x, alpha](typename Tensor<T>::Node& node) {
            if (x.requires_grad())
                kp::axpy(static_cast<std::int64_t>(node.grad.size()), alpha,
                         node.grad.data(), const_cast<Tensor<T>&>(x).mutable_grad().data());
        });
    }
    return y;
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_op(const Tensor<T>& x, const char* name, Fwd fwd, Bwd bwd) {
    auto y = Tensor<T>::result(x.shape(), name, {x});
    fwd(x.numel(), x.data().data(), y.mutable_data().data());
    if (y.requires_grad()) {
        y.set_backward([x, bwd](typename Tensor<T>::Node& node) {
            if (x.requires_grad())
                bwd(static_cast<std::int64_t>(node.grad.size()), x.data().data(),
                    node.grad.data(), const_cast<Tensor<T>&>(x).mutable_grad().data());
        });
    }
    return y;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return unary_op(
        x, "relu", [](std::int64_t n, const T* a, T* b) { kp::relu_fwd(n, a, b); },
        [](std::int64_t n, const T* a, const T* g, T* gx) { kp::relu_bwd(n, a, g, gx); });
}

// x * Phi(x), tanh approximation
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    return unary_op(
        x, "gelu", [](std::int64_t n, const T* a, T* b) { kp::gelu_fwd(n, a, b); },
        [](std::int64_t n, const T* a, const T* g, T* gx) { kp::gelu_bwd(n, a, g, gx); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    auto y = Tensor<T>::result(x.shape(), "sigmoid", {x});
    kp::sigmoid(x.numel(), x.data().data(), y.mutable_data().data());
    if (y.requires_grad()) {
        // ds/dx = s(1-s); the saved output is the node's own buffer
        y.set_backward([x](typename Tensor<T>::Node& node) {
            if (!x.requires_grad()) return;
            auto gx = const_cast<Tensor<T>&>(x).mutable_grad();
            const T* s = node.data();
            const T* g = node.grad.data();
            for (std::size_t i = 0; i < node.grad.size(); ++i)
                gx[i] += g[i] * s[i] * (T(1) - s[i]);
        });
    }
    return y;
}

// ---- softmax / normalization -----------------------------------------------

template <typename T>
Tensor<T> softmax_lastaxis(const Tensor<T>& x) {
    const std::int64_t c = x.shape().back();
    if (c == 0) throw ShapeError("softmax over empty axis, shape " + shape_str(x.shape()));
    if (!kp::all_finite(x.numel(), x.data().data()))
        throw NumericError("softmax input contains non-finite values");
    const std::int64_t rows = x.numel() / c;
    auto y = Tensor<T>::result(x.shape(), "softmax", {x});
    kp::softmax_rows(rows, c, x.data().data(), y.mutable_data().data());
    if (y.requires_grad()) {
        y.set_backward([x, rows, c](typename Tensor<T>::Node& node) {
            if (x.requires_grad())
                kp::softmax_bwd_rows(rows, c, node.data(), node.grad.data(),
                                     const_cast<Tensor<T>&>(x).mutable_grad().data());
        });
    }
    return y;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<std::int64_t> index,
                      std::int64_t row_width, Shape out_shape);

// softmax along any axis; non-terminal axes go through an index permutation.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
    const int r = static_cast<int>(x.rank());
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        throw ShapeError("softmax axis " + std::to_string(axis) + " out of range for " +
                         shape_str(x.shape()));
    if (axis == r - 1) return softmax_lastaxis(x);
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < r; ++i) inner *= x.dim(i);
    const std::int64_t len = x.dim(axis);
    std::vector<std::int64_t> fwd(static_cast<std::size_t>(outer * inner * len));
    std::vector<std::int64_t> rev(fwd.size());
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < inner; ++i)
            for (std::int64_t l = 0; l < len; ++l) {
                const std::int64_t src = (o * len + l) * inner + i;
                const std::int64_t dst = (o * inner + i) * len + l;
                fwd[static_cast<std::size_t>(dst)] = src;
                rev[static_cast<std::size_t>(src)] = dst;
            }
    auto moved = gather_rows(x, std::move(fwd), 1, {outer * inner, len});
    auto sm = softmax_lastaxis(moved);
    return gather_rows(sm, std::move(rev), 1, x.shape());
}

// Normalizes the last axis to zero mean / unit variance, then applies the
// learned affine. eps sits inside the square root, so constant rows map to
// beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5)) {
    const std::int64_t c = x.shape().back();
    if (c == 0) throw ShapeError("layer_norm over empty axis, shape " + shape_str(x.shape()));
    if (gamma.numel() != c || beta.numel() != c)
        throw ShapeError("layer_norm affine size mismatch: gamma " +
                         shape_str(gamma.shape()) + ", beta " + shape_str(beta.shape()) +
                         ", axis extent " + std::to_string(c));
    const std::int64_t rows = x.numel() / c;
    auto y = Tensor<T>::result(x.shape(), "layer_norm", {x, gamma, beta});
    auto mean = std::make_shared<std::vector<T>>(rows);
    auto rstd = std::make_shared<std::vector<T>>(rows);
    kp::layernorm_fwd(rows, c, x.data().data(), gamma.data().data(), beta.data().data(),
                      eps, y.mutable_data().data(), mean->data(), rstd->data());
    if (y.requires_grad()) {
        y.set_backward([x, gamma, beta, mean, rstd, rows, c](typename Tensor<T>::Node& node) {
            // The kernel writes all three accumulators; route unused ones to
            // scratch when a tensor does not track gradients.
            std::vector<T> scratch_x, scratch_g, scratch_b;
            T* gx;
            T* gg;
            T* gb;
            if (x.requires_grad()) {
                gx = const_cast<Tensor<T>&>(x).mutable_grad().data();
            } else {
                scratch_x.assign(static_cast<std::size_t>(rows * c), T(0));
                gx = scratch_x.data();
            }
            if (gamma.requires_grad()) {
                gg = const_cast<Tensor<T>&>(gamma).mutable_grad().data();
            } else {
                scratch_g.assign(static_cast<std::size_t>(c), T(0));
                gg = scratch_g.data();
            }
            if (beta.requires_grad()) {
                gb = const_cast<Tensor<T>&>(beta).mutable_grad().data();
            } else {
                scratch_b.assign(static_cast<std::size_t>(c), T(0));
                gb = scratch_b.data();
            }
            kp::layernorm_bwd(rows, c, x.data().data(), gamma.data().data(), mean->data(),
                              rstd->data(), node.grad.data(), gx, gg, gb);
        });
    }
    return y;
}

// Per-channel normalization over the middle (spatial) axis of [B, R, C],
// batch-independent by construction.
template <typename T>
Tensor<T> channel_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       T eps = T(1e-5)) {
    if (x.rank() != 3)
        throw ShapeError("channel_norm expects [batch, positions, channels], got " +
                         shape_str(x.shape()));
    const std::int64_t bs = x.dim(0), rows = x.dim(1), c = x.dim(2);
    if (rows == 0) throw ShapeError("channel_norm over empty spatial axis");
    if (gamma.numel() != c || beta.numel() != c)
        throw ShapeError("channel_norm affine size mismatch for " + shape_str(x.shape()));
    auto y = Tensor<T>::result(x.shape(), "channel_norm", {x, gamma, beta});
    auto mean = std::make_shared<std::vector<T>>(static_cast<std::size_t>(bs * c));
    auto rstd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(bs * c));
    const T* xd = x.data().data();
    const T* gd = gamma.data().data();
    const T* bd = beta.data().data();
    T* yd = y.mutable_data().data();
    for (std::int64_t b = 0; b < bs; ++b) {
        const T* xb = xd + b * rows * c;
        T* yb = yd + b * rows * c;
        for (std::int64_t j = 0; j < c; ++j) {
            T mu = T(0);
            for (std::int64_t r = 0; r < rows; ++r) mu += xb[r * c + j];
            mu /= T(rows);
            T var = T(0);
            for (std::int64_t r = 0; r < rows; ++r) {
                const T d = xb[r * c + j] - mu;
                var += d * d;
            }
            var /= T(rows);
            const T rs = T(1) / std::sqrt(var + eps);
            (*mean)[static_cast<std::size_t>(b * c + j)] = mu;
            (*rstd)[static_cast<std::size_t>(b * c + j)] = rs;
            for (std::int64_t r = 0; r < rows; ++r)
                yb[r * c + j] = (xb[r * c + j] - mu) * rs * gd[j] + bd[j];
        }
    }
    if (y.requires_grad()) {
        y.set_backward([x, gamma, beta, mean, rstd, bs, rows, c](typename Tensor<T>::Node& node) {
            const T* xd = x.data().data();
            const T* gd = gamma.data().data();
            const T* g = node.grad.data();
            T* gx = x.requires_grad() ? const_cast<Tensor<T>&>(x).mutable_grad().data()
                                      : nullptr;
            T* gg = gamma.requires_grad()
                        ? const_cast<Tensor<T>&>(gamma).mutable_grad().data()
                        : nullptr;
            T* gb = beta.requires_grad()
                        ? const_cast<Tensor<T>&>(beta).mutable_grad().data()
                        : nullptr;
            const T inv_r = T(1) / T(rows);
            for (std::int64_t b = 0; b < bs; ++b) {
                const T* xb = xd + b * rows * c;
                const T* gyb = g + b * rows * c;
                for (std::int64_t j = 0; j < c; ++j) {
                    const T mu = (*mean)[static_cast<std::size_t>(b * c + j)];
                    const T rs = (*rstd)[static_cast<std::size_t>(b * c + j)];
                    T sum_g = T(0), sum_gx = T(0), sum_raw = T(0), sum_rawx = T(0);
                    for (std::int64_t r = 0; r < rows; ++r) {
                        const T xhat = (xb[r * c + j] - mu) * rs;
                        const T gv = gyb[r * c + j];
                        sum_raw += gv;
                        sum_rawx += gv * xhat;
                        const T ggv = gv * gd[j];
                        sum_g += ggv;
                        sum_gx += ggv * xhat;
                    }
                    if (gg) gg[j] += sum_rawx;
                    if (gb) gb[j] += sum_raw;
                    if (gx) {
                        for (std::int64_t r = 0; r < rows; ++r) {
                            const T xhat = (xb[r * c + j] - mu) * rs;
                            const T ggv = gyb[r * c + j] * gd[j];
                            gx[b * rows * c + r * c + j] +=
                                (ggv - sum_g * inv_r - xhat * sum_gx * inv_r) * rs;
                        }
                    }
                }
            }
        });
    }
    return y;
}

// ---- data movement ---------------------------------------------------------

// y[i, :] = x[index[i], :] with x viewed as [numel/row_width, row_width].
// Covers window partitioning, cyclic shifts, patch flattening and merging.
// An index of -1 emits a zero row (padding); such rows drop their gradient.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<std::int64_t> index,
                      std::int64_t row_width, Shape out_shape) {
    if (row_width <= 0 || x.numel() % row_width != 0)
        throw ShapeError("gather_rows width " + std::to_string(row_width) +
                         " does not divide " + shape_str(x.shape()));
    const std::int64_t out_rows = static_cast<std::int64_t>(index.size());
    if (shape_numel(out_shape) != out_rows * row_width)
        throw ShapeError("gather_rows output shape " + shape_str(out_shape) +
                         " does not hold " + std::to_string(out_rows) + " rows");
    auto idx = std::make_shared<std::vector<std::int64_t>>(std::move(index));
    auto y = Tensor<T>::result(std::move(out_shape), "gather_rows", {x});
    const T* xd = x.data().data();
    T* yd = y.mutable_data().data();
    for (std::int64_t i = 0; i < out_rows; ++i) {
        const std::int64_t src = (*idx)[static_cast<std::size_t>(i)];
        if (src < 0) {
            std::memset(yd + i * row_width, 0, static_cast<std::size_t>(row_width) * sizeof(T));
        } else {
            std::memcpy(yd + i * row_width, xd + src * row_width,
                        static_cast<std::size_t>(row_width) * sizeof(T));
        }
    }
    if (y.requires_grad()) {
        y.set_backward([x, idx, row_width, out_rows](typename Tensor<T>::Node& node) {
            if (!x.requires_grad()) return;
            auto gx = const_cast<Tensor<T>&>(x).mutable_grad();
            const T* g = node.grad.data();
            for (std::int64_t i = 0; i < out_rows; ++i) {
                const std::int64_t src = (*idx)[static_cast<std::size_t>(i)];
                if (src >= 0)
                    kp::axpy(row_width, T(1), g + i * row_width, gx.data() + src * row_width);
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    auto y = Tensor<T>::alias(x, std::move(shape), "reshape");
    if (y.requires_grad()) {
        y.set_backward([x](typename Tensor<T>::Node& node) {
            if (x.requires_grad())
                kp::axpy(static_cast<std::int64_t>(node.grad.size()), T(1), node.grad.data(),
                         const_cast<Tensor<T>&>(x).mutable_grad().data());
        });
    }
    return y;
}

// ---- reductions ------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    auto y = Tensor<T>::result({1}, "sum", {x});
    y.mutable_data()[0] = kp::sum(x.numel(), x.data().data());
    if (y.requires_grad()) {
        y.set_backward([x](typename Tensor<T>::Node& node) {
            if (!x.requires_grad()) return;
            auto gx = const_cast<Tensor<T>&>(x).mutable_grad();
            const T g = node.grad[0];
            for (auto& v : gx) v += g;
        });
    }
    return y;
}

// [B, R, C] -> [B, C], arithmetic mean over the middle axis.
template <typename T>
Tensor<T> mean_middle(const Tensor<T>& x) {
    if (x.rank() != 3) throw ShapeError("mean_middle expects rank-3, got " + shape_str(x.shape()));
    const std::int64_t bs = x.dim(0), rows = x.dim(1), c = x.dim(2);
    if (rows == 0) throw ShapeError("mean_middle over empty axis");
    auto y = Tensor<T>::result({bs, c}, "mean_middle", {x});
    const T* xd = x.data().data();
    T* yd = y.mutable_data().data();
    const T inv = T(1) / T(rows);
    for (std::int64_t b = 0; b < bs; ++b) {
        T* yb = yd + b * c;
        for (std::int64_t j = 0; j < c; ++j) yb[j] = T(0);
        for (std::int64_t r = 0; r < rows; ++r)
            kp::axpy(c, inv, xd + (b * rows + r) * c, yb);
    }
    if (y.requires_grad()) {
        y.set_backward([x, bs, rows, c, inv](typename Tensor<T>::Node& node) {
            if (!x.requires_grad()) return;
            auto gx = const_cast<Tensor<T>&>(x).mutable_grad();
            const T* g = node.grad.data();
            for (std::int64_t b = 0; b < bs; ++b)
                for (std::int64_t r = 0; r < rows; ++r)
                    kp::axpy(c, inv, g + b * c, gx.data() + (b * rows + r) * c);
        });
    }
    return y;
}

// ---- convolution -----------------------------------------------------------

namespace detail {

template <typename T>
void im2col(const T* x, std::int64_t h, std::int64_t w, std::int64_t cin,
            std::int64_t kh, std::int64_t kw, std::int64_t stride, std::int64_t pad,
            std::int64_t oh, std::int64_t ow, T* col) {
    for (std::int64_t oy = 0; oy < oh; ++oy) {
        for (std::int64_t ox = 0; ox < ow; ++ox) {
            T* row = col + (oy * ow + ox) * kh * kw * cin;
            for (std::int64_t ky = 0; ky < kh; ++ky) {
                const std::int64_t iy = oy * stride + ky - pad;
                for (std::int64_t kx = 0; kx < kw; ++kx) {
                    const std::int64_t ix = ox * stride + kx - pad;
                    T* dst = row + (ky * kw + kx) * cin;
                    if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                        std::memcpy(dst, x + (iy * w + ix) * cin,
                                    static_cast<std::size_t>(cin) * sizeof(T));
                    } else {
                        for (std::int64_t ci = 0; ci < cin; ++ci) dst[ci] = T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, std::int64_t h, std::int64_t w, std::int64_t cin,
                std::int64_t kh, std::int64_t kw, std::int64_t stride, std::int64_t pad,
                std::int64_t oh, std::int64_t ow, T* gx) {
    for (std::int64_t oy = 0; oy < oh; ++oy) {
        for (std::int64_t ox = 0; ox < ow; ++ox) {
            const T* row = col + (oy * ow + ox) * kh * kw * cin;
            for (std::int64_t ky = 0; ky < kh; ++ky) {
                const std::int64_t iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= h) continue;
                for (std::int64_t kx = 0; kx < kw; ++kx) {
                    const std::int64_t ix = ox * stride + kx - pad;
                    if (ix < 0 || ix >= w) continue;
                    kp::axpy(cin, T(1), row + (ky * kw + kx) * cin,
                             gx + (iy * w + ix) * cin);
                }
            }
        }
    }
}

}  // namespace detail

// Cross-correlation, NHWC activations, HWIO kernels.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 std::int64_t stride, std::int64_t pad) {
    if (x.rank() != 4 || w.rank() != 4)
        throw ShapeError("conv2d expects NHWC input and HWIO kernels, got " +
                         shape_str(x.shape()) + " and " + shape_str(w.shape()));
    const std::int64_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), cin = x.dim(3);
    const std::int64_t kh = w.dim(0), kw = w.dim(1), cout = w.dim(3);
    if (w.dim(2) != cin)
        throw ShapeError("conv2d channel mismatch: input " + shape_str(x.shape()) +
                         ", kernels " + shape_str(w.shape()));
    if (h + 2 * pad < kh || wd + 2 * pad < kw)
        throw ShapeError("conv2d kernel " + shape_str(w.shape()) +
                         " larger than padded input " + shape_str(x.shape()));
    if (bias.defined() && bias.numel() != cout)
        throw ShapeError("conv2d bias size mismatch");
    const std::int64_t oh = (h + 2 * pad - kh) / stride + 1;
    const std::int64_t ow = (wd + 2 * pad - kw) / stride + 1;
    const std::int64_t kk = kh * kw * cin;
    auto y = bias.defined()
                 ? Tensor<T>::result({n, oh, ow, cout}, "conv2d", {x, w, bias})
                 : Tensor<T>::result({n, oh, ow, cout}, "conv2d", {x, w});
    std::vector<T> col(static_cast<std::size_t>(oh * ow * kk));
    T* yd = y.mutable_data().data();
    for (std::int64_t i = 0; i < n; ++i) {
        detail::im2col(x.data().data() + i * h * wd * cin, h, wd, cin, kh, kw, stride,
                       pad, oh, ow, col.data());
        T* yi = yd + i * oh * ow * cout;
        kp::gemm_nn(oh * ow, cout, kk, col.data(), w.data().data(), yi, false);
        if (bias.defined()) {
            const T* bd = bias.data().data();
            for (std::int64_t r = 0; r < oh * ow; ++r)
                kp::add(cout, yi + r * cout, bd, yi + r * cout);
        }
    }
    if (y.requires_grad()) {
        y.set_backward([x, w, bias, n, h, wd, cin, kh, kw, cout, stride, pad, oh, ow,
                        kk](typename Tensor<T>::Node& node) {
            std::vector<T> col(static_cast<std::size_t>(oh * ow * kk));
            std::vector<T> gcol(col.size());
            for (std::int64_t i = 0; i < n; ++i) {
                const T* g = node.grad.data() + i * oh * ow * cout;
                if (w.requires_grad() || x.requires_grad()) {
                    detail::im2col(x.data().data() + i * h * wd * cin, h, wd, cin, kh,
                                   kw, stride, pad, oh, ow, col.data());
                }
                if (w.requires_grad()) {
                    auto gw = const_cast<Tensor<T>&>(w).mutable_grad();
                    kp::gemm_tn(kk, cout, oh * ow, col.data(), g, gw.data(), true);
                }
                if (x.requires_grad()) {
                    kp::gemm_nt(oh * ow, kk, cout, g, w.data().data(), gcol.data(), false);
                    auto gx = const_cast<Tensor<T>&>(x).mutable_grad();
                    detail::col2im_add(gcol.data(), h, wd, cin, kh, kw, stride, pad, oh,
                                       ow, gx.data() + i * h * wd * cin);
                }
                if (bias.defined() && bias.requires_grad()) {
                    auto gb = const_cast<Tensor<T>&>(bias).mutable_grad();
                    for (std::int64_t r = 0; r < oh * ow; ++r)
                        kp::add(cout, gb.data(), g + r * cout, gb.data());
                }
            }
        });
    }
    return y;
}

// ---- attention helpers -----------------------------------------------------

// scores [G, t, t] with G = windows*heads (head fastest); adds the learned
// relative-position bias table[pair_index[i*t+j], head].
template <typename T>
Tensor<T> add_rel_pos_bias(const Tensor<T>& scores, const Tensor<T>& table,
                           std::shared_ptr<const std::vector<std::int64_t>> pair_index,
                           std::int64_t heads) {
    if (scores.rank() != 3 || scores.dim(1) != scores.dim(2))
        throw ShapeError("add_rel_pos_bias expects square score matrices, got " +
                         shape_str(scores.shape()));
    const std::int64_t g = scores.dim(0), t = scores.dim(1);
    if (g % heads != 0) throw ShapeError("score batch not divisible by head count");
    if (table.rank() != 2 || table.dim(1) != heads)
        throw ShapeError("bias table shape " + shape_str(table.shape()) +
                         " does not match head count " + std::to_string(heads));
    if (static_cast<std::int64_t>(pair_index->size()) != t * t)
        throw ShapeError("pair index size mismatch");
    auto y = Tensor<T>::result(scores.shape(), "rel_pos_bias", {scores, table});
    const T* sd = scores.data().data();
    const T* td = table.data().data();
    T* yd = y.mutable_data().data();
    for (std::int64_t b = 0; b < g; ++b) {
        const std::int64_t head = b % heads;
        const T* sb = sd + b * t * t;
        T* yb = yd + b * t * t;
        for (std::int64_t ij = 0; ij < t * t; ++ij)
            yb[ij] = sb[ij] + td[(*pair_index)[static_cast<std::size_t>(ij)] * heads + head];
    }
    if (y.requires_grad()) {
        y.set_backward([scores, table, pair_index, g, t, heads](typename Tensor<T>::Node& node) {
            const T* gd = node.grad.data();
            if (scores.requires_grad())
                kp::axpy(g * t * t, T(1), gd,
                         const_cast<Tensor<T>&>(scores).mutable_grad().data());
            if (table.requires_grad()) {
                auto gt = const_cast<Tensor<T>&>(table).mutable_grad();
                for (std::int64_t b = 0; b < g; ++b) {
                    const std::int64_t head = b % heads;
                    const T* gb = gd + b * t * t;
                    for (std::int64_t ij = 0; ij < t * t; ++ij)
                        gt[(*pair_index)[static_cast<std::size_t>(ij)] * heads + head] += gb[ij];
                }
            }
        });
    }
    return y;
}

// scores [G, t, t], mask [windows_per_image, t, t]; the mask carries no
// gradient.
template <typename T>
Tensor<T> add_window_mask(const Tensor<T>& scores, const Tensor<T>& mask,
                          std::int64_t heads) {
    if (scores.rank() != 3 || mask.rank() != 3 || scores.dim(1) != mask.dim(1) ||
        scores.dim(2) != mask.dim(2))
        throw ShapeError("mask shape " + shape_str(mask.shape()) +
                         " incompatible with scores " + shape_str(scores.shape()));
    const std::int64_t g = scores.dim(0), t = scores.dim(1), nw = mask.dim(0);
    if (g % (heads * nw) != 0)
        throw ShapeError("score batch not divisible by windows*heads");
    auto y = Tensor<T>::result(scores.shape(), "window_mask", {scores});
    const T* sd = scores.data().data();
    const T* md = mask.data().data();
    T* yd = y.mutable_data().data();
    for (std::int64_t b = 0; b < g; ++b) {
        const std::int64_t wi = (b / heads) % nw;
        kp::add(t * t, sd + b * t * t, md + wi * t * t, yd + b * t * t);
    }
    if (y.requires_grad()) {
        y.set_backward([scores](typename Tensor<T>::Node& node) {
            if (scores.requires_grad())
                kp::axpy(static_cast<std::int64_t>(node.grad.size()), T(1), node.grad.data(),
                         const_cast<Tensor<T>&>(scores).mutable_grad().data());
        });
    }
    return y;
}

// ---- loss ------------------------------------------------------------------

// Per-thread, so parallel experiment runs keep independent counts.
std::uint64_t bce_clamp_events();
void reset_bce_clamp_events();
namespace detail {
std::uint64_t& bce_clamp_counter();
}

enum class BceReduction {
    weighted_mean,  // sum(w * loss) / sum(w) -- the batch form
    weighted_sum,   // sum(w * loss) -- the per-sample definition
};

// Per sample: -w * [y ln s + (1-y) ln(1-s)]. Scores at exactly 0 or 1 are
// clamped to eps and counted.
template <typename T>
Tensor<T> weighted_bce(const Tensor<T>& scores, std::vector<T> targets,
                       std::vector<T> weights, T eps = T(1e-7),
                       BceReduction reduction = BceReduction::weighted_mean) {
    const std::int64_t n = scores.numel();
    if (static_cast<std::int64_t>(targets.size()) != n ||
        static_cast<std::int64_t>(weights.size()) != n)
        throw ShapeError("weighted_bce: " + std::to_string(n) + " scores vs " +
                         std::to_string(targets.size()) + " targets / " +
                         std::to_string(weights.size()) + " weights");
    auto tg = std::make_shared<std::vector<T>>(std::move(targets));
    auto wt = std::make_shared<std::vector<T>>(std::move(weights));
    T wsum = T(0);
    for (T w : *wt) {
        if (!(w > T(0))) throw UsageError("weighted_bce requires positive weights");
        wsum += w;
    }
    const T norm = reduction == BceReduction::weighted_mean ? wsum : T(1);
    auto clamped = std::make_shared<std::vector<bool>>(static_cast<std::size_t>(n), false);
    auto y = Tensor<T>::result({1}, "weighted_bce", {scores});
    const T* s = scores.data().data();
    T loss = T(0);
    for (std::int64_t i = 0; i < n; ++i) {
        T si = s[i];
        if (!(si >= eps)) {
            si = eps;
            (*clamped)[static_cast<std::size_t>(i)] = true;
        } else if (si > T(1) - eps) {
            si = T(1) - eps;
            (*clamped)[static_cast<std::size_t>(i)] = true;
        }
        const T yi = (*tg)[static_cast<std::size_t>(i)];
        loss -= (*wt)[static_cast<std::size_t>(i)] *
                (yi * std::log(si) + (T(1) - yi) * std::log(T(1) - si));
    }
    for (bool c : *clamped)
        if (c) detail::bce_clamp_counter() += 1;
    y.mutable_data()[0] = loss / norm;
    if (y.requires_grad()) {
        y.set_backward([scores, tg, wt, clamped, norm, n](typename Tensor<T>::Node& node) {
            if (!scores.requires_grad()) return;
            auto gx = const_cast<Tensor<T>&>(scores).mutable_grad();
            const T g = node.grad[0];
            const T* s = scores.data().data();
            for (std::int64_t i = 0; i < n; ++i) {
                if ((*clamped)[static_cast<std::size_t>(i)]) continue;
                const T si = s[i];
                const T yi = (*tg)[static_cast<std::size_t>(i)];
                gx[i] += g * (*wt)[static_cast<std::size_t>(i)] * (si - yi) /
                         (si * (T(1) - si) * norm);
            }
        });
    }
    return y;
}

}  // namespace artauth::core
