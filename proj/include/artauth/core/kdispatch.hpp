#pragma once

#include <cmath>

#include "artauth/kernels/kernels.hpp"

// Precision portal between the templated op library and the kernel layer.
// float routes through the runtime-dispatched table; double routes through
// the scalar reference path (the verification precision).

namespace artauth::core::kp {

inline void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
                    const float* a, const float* b, float* c, bool acc) {
    kernels::active().gemm_nn(m, n, k, a, b, c, acc);
}
inline void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
                    const double* a, const double* b, double* c, bool acc) {
    kernels::ref64::gemm_nn(m, n, k, a, b, c, acc);
}
inline void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
                    const float* a, const float* b, float* c, bool acc) {
    kernels::active().gemm_nt(m, n, k, a, b, c, acc);
}
inline void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
                    const double* a, const double* b, double* c, bool acc) {
    kernels::ref64::gemm_nt(m, n, k, a, b, c, acc);
}
inline void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
                    const float* a, const float* b, float* c, bool acc) {
    kernels::active().gemm_tn(m, n, k, a, b, c, acc);
}
inline void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
                    const double* a, const double* b, double* c, bool acc) {
    kernels::ref64::gemm_tn(m, n, k, a, b, c, acc);
}

inline void add(std::int64_t n, const float* a, const float* b, float* y) {
    kernels::active().add(n, a, b, y);
}
inline void add(std::int64_t n, const double* a, const double* b, double* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}
inline void mul(std::int64_t n, const float* a, const float* b, float* y) {
    kernels::active().mul(n, a, b, y);
}
inline void mul(std::int64_t n, const double* a, const double* b, double* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}
inline void axpy(std::int64_t n, float alpha, const float* x, float* y) {
    kernels::active().axpy(n, alpha, x, y);
}
inline void axpy(std::int64_t n, double alpha, const double* x, double* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
inline void scale(std::int64_t n, float alpha, const float* x, float* y) {
    kernels::active().scale(n, alpha, x, y);
}
inline void scale(std::int64_t n, double alpha, const double* x, double* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}
inline float sum(std::int64_t n, const float* x) { return kernels::active().sum(n, x); }
inline double sum(std::int64_t n, const double* x) {
    double s = 0;
    for (std::int64_t i = 0; i < n; ++i) s += x[i];
    return s;
}
inline bool all_finite(std::int64_t n, const float* x) {
    return kernels::active().all_finite(n, x);
}
inline bool all_finite(std::int64_t n, const double* x) {
    for (std::int64_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

inline void sigmoid(std::int64_t n, const float* x, float* y) {
    kernels::active().sigmoid(n, x, y);
}
inline void sigmoid(std::int64_t n, const double* x, double* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}
inline void relu_fwd(std::int64_t n, const float* x, float* y) {
    kernels::active().relu_fwd(n, x, y);
}
inline void relu_fwd(std::int64_t n, const double* x, double* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0 ? x[i] : 0;
}
inline void relu_bwd(std::int64_t n, const float* x, const float* gy, float* gx) {
    kernels::active().relu_bwd(n, x, gy, gx);
}
inline void relu_bwd(std::int64_t n, const double* x, const double* gy, double* gx) {
    for (std::int64_t i = 0; i < n; ++i)
        if (x[i] > 0) gx[i] += gy[i];
}

namespace detail {
constexpr double kGeluC0 = 0.7978845608028654;
constexpr double kGeluC1 = 0.044715;
}  // namespace detail

inline void gelu_fwd(std::int64_t n, const float* x, float* y) {
    kernels::active().gelu_fwd(n, x, y);
}
inline void gelu_fwd(std::int64_t n, const double* x, double* y) {
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = detail::kGeluC0 * (x[i] + detail::kGeluC1 * x[i] * x[i] * x[i]);
        y[i] = 0.5 * x[i] * (1.0 + std::tanh(u));
    }
}
inline void gelu_bwd(std::int64_t n, const float* x, const float* gy, float* gx) {
    kernels::active().gelu_bwd(n, x, gy, gx);
}
inline void gelu_bwd(std::int64_t n, const double* x, const double* gy, double* gx) {
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = detail::kGeluC0 * (x[i] + detail::kGeluC1 * x[i] * x[i] * x[i]);
        const double t = std::tanh(u);
        const double du = detail::kGeluC0 * (1.0 + 3.0 * detail::kGeluC1 * x[i] * x[i]);
        gx[i] += gy[i] * (0.5 * (1.0 + t) + 0.5 * x[i] * (1.0 - t * t) * du);
    }
}

inline void softmax_rows(std::int64_t r, std::int64_t c, const float* x, float* y) {
    kernels::active().softmax_rows(r, c, x, y);
}
inline void softmax_rows(std::int64_t r, std::int64_t c, const double* x, double* y) {
    kernels::ref64::softmax_rows(r, c, x, y);
}
inline void softmax_bwd_rows(std::int64_t r, std::int64_t c, const float* y,
                             const float* gy, float* gx) {
    kernels::active().softmax_bwd_rows(r, c, y, gy, gx);
}
inline void softmax_bwd_rows(std::int64_t r, std::int64_t c, const double* y,
                             const double* gy, double* gx) {
    kernels::ref64::softmax_bwd_rows(r, c, y, gy, gx);
}

inline void layernorm_fwd(std::int64_t r, std::int64_t c, const float* x,
                          const float* g, const float* b, float eps, float* y,
                          float* mean, float* rstd) {
    kernels::active().layernorm_fwd(r, c, x, g, b, eps, y, mean, rstd);
}
inline void layernorm_fwd(std::int64_t r, std::int64_t c, const double* x,
                          const double* g, const double* b, double eps, double* y,
                          double* mean, double* rstd) {
    kernels::ref64::layernorm_fwd(r, c, x, g, b, eps, y, mean, rstd);
}
inline void layernorm_bwd(std::int64_t r, std::int64_t c, const float* x,
                          const float* gamma, const float* mean, const float* rstd,
                          const float* gy, float* gx, float* ggamma, float* gbeta) {
    kernels::active().layernorm_bwd(r, c, x, gamma, mean, rstd, gy, gx, ggamma, gbeta);
}
inline void layernorm_bwd(std::int64_t r, std::int64_t c, const double* x,
                          const double* gamma, const double* mean, const double* rstd,
                          const double* gy, double* gx, double* ggamma, double* gbeta) {
    kernels::ref64::layernorm_bwd(r, c, x, gamma, mean, rstd, gy, gx, ggamma, gbeta);
}

inline void adam_update(std::int64_t n, float* p, const float* g, float* m, float* v,
                        float lr, float b1, float b2, float eps, float bc1, float bc2) {
    kernels::active().adam_update(n, p, g, m, v, lr, b1, b2, eps, bc1, bc2);
}
inline void adam_update(std::int64_t n, double* p, const double* g, double* m, double* v,
                        double lr, double b1, double b2, double eps, double bc1,
                        double bc2) {
    kernels::ref64::adam_update(n, p, g, m, v, lr, b1, b2, eps, bc1, bc2);
}

}  // namespace artauth::core::kp
