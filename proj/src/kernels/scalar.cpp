#include "artauth/kernels/kernels.hpp"

#include <cmath>

namespace artauth::kernels {

namespace {

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

template <typename T>
void gemm_nn_impl(std::int64_t m, std::int64_t n, std::int64_t k,
                  const T* a, const T* b, T* c, bool accumulate) {
    for (std::int64_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        if (!accumulate) {
            for (std::int64_t j = 0; j < n; ++j) crow[j] = T(0);
        }
        const T* arow = a + i * k;
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const T av = arow[kk];
            const T* brow = b + kk * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void gemm_nt_impl(std::int64_t m, std::int64_t n, std::int64_t k,
                  const T* a, const T* b, T* c, bool accumulate) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::int64_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T acc = T(0);
            for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    }
}

template <typename T>
void gemm_tn_impl(std::int64_t m, std::int64_t n, std::int64_t k,
                  const T* a, const T* b, T* c, bool accumulate) {
    if (!accumulate) {
        for (std::int64_t i = 0; i < m * n; ++i) c[i] = T(0);
    }
    for (std::int64_t kk = 0; kk < k; ++kk) {
        const T* arow = a + kk * m;
        const T* brow = b + kk * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void s_add(std::int64_t n, const float* a, const float* b, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}
void s_mul(std::int64_t n, const float* a, const float* b, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}
void s_axpy(std::int64_t n, float alpha, const float* x, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
void s_scale(std::int64_t n, float alpha, const float* x, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}
float s_sum(std::int64_t n, const float* x) {
    float acc = 0.0f;
    for (std::int64_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}
float s_dot(std::int64_t n, const float* x, const float* y) {
    float acc = 0.0f;
    for (std::int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}
float s_max(std::int64_t n, const float* x) {
    float m = x[0];
    for (std::int64_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}
bool s_all_finite(std::int64_t n, const float* x) {
    for (std::int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

void s_vexp(std::int64_t n, const float* x, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}
void s_sigmoid(std::int64_t n, const float* x, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
}
void s_relu_fwd(std::int64_t n, const float* x, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}
void s_relu_bwd(std::int64_t n, const float* x, const float* gy, float* gx) {
    for (std::int64_t i = 0; i < n; ++i) {
        if (x[i] > 0.0f) gx[i] += gy[i];
    }
}

template <typename T>
T gelu_scalar(T x) {
    const T u = T(kGeluC0) * (x + T(kGeluC1) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
}
template <typename T>
T gelu_grad_scalar(T x) {
    const T u = T(kGeluC0) * (x + T(kGeluC1) * x * x * x);
    const T t = std::tanh(u);
    const T du = T(kGeluC0) * (T(1) + T(3) * T(kGeluC1) * x * x);
    return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
}

void s_gelu_fwd(std::int64_t n, const float* x, float* y) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}
void s_gelu_bwd(std::int64_t n, const float* x, const float* gy, float* gx) {
    for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * gelu_grad_scalar(x[i]);
}

template <typename T>
void softmax_rows_impl(std::int64_t rows, std::int64_t cols, const T* x, T* y) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * cols;
        T* yr = y + r * cols;
        T m = xr[0];
        for (std::int64_t j = 1; j < cols; ++j) m = xr[j] > m ? xr[j] : m;
        T denom = T(0);
        for (std::int64_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - m);
            denom += yr[j];
        }
        const T inv = T(1) / denom;
        for (std::int64_t j = 0; j < cols; ++j) yr[j] *= inv;
    }
}

template <typename T>
void softmax_bwd_rows_impl(std::int64_t rows, std::int64_t cols,
                           const T* y, const T* gy, T* gx) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* yr = y + r * cols;
        const T* gr = gy + r * cols;
        T* gxr = gx + r * cols;
        T inner = T(0);
        for (std::int64_t j = 0; j < cols; ++j) inner += yr[j] * gr[j];
        for (std::int64_t j = 0; j < cols; ++j) gxr[j] += yr[j] * (gr[j] - inner);
    }
}

template <typename T>
void layernorm_fwd_impl(std::int64_t rows, std::int64_t cols, const T* x,
                        const T* gamma, const T* beta, T eps,
                        T* y, T* mean, T* rstd) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * cols;
        T* yr = y + r * cols;
        T mu = T(0);
        for (std::int64_t j = 0; j < cols; ++j) mu += xr[j];
        mu /= T(cols);
        T var = T(0);
        for (std::int64_t j = 0; j < cols; ++j) {
            const T d = xr[j] - mu;
            var += d * d;
        }
        var /= T(cols);
        const T rs = T(1) / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        for (std::int64_t j = 0; j < cols; ++j) {
            yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
        }
    }
}

// gx += (gy*gamma - mean(gy*gamma) - xhat * mean(gy*gamma*xhat)) * rstd
template <typename T>
void layernorm_bwd_impl(std::int64_t rows, std::int64_t cols, const T* x,
                        const T* gamma, const T* mean, const T* rstd,
                        const T* gy, T* gx, T* ggamma, T* gbeta) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * cols;
        const T* gr = gy + r * cols;
        T* gxr = gx + r * cols;
        const T mu = mean[r];
        const T rs = rstd[r];
        T sum_g = T(0), sum_gx = T(0);
        for (std::int64_t j = 0; j < cols; ++j) {
            const T xhat = (xr[j] - mu) * rs;
            const T gg = gr[j] * gamma[j];
            sum_g += gg;
            sum_gx += gg * xhat;
            ggamma[j] += gr[j] * xhat;
            gbeta[j] += gr[j];
        }
        const T inv_c = T(1) / T(cols);
        for (std::int64_t j = 0; j < cols; ++j) {
            const T xhat = (xr[j] - mu) * rs;
            const T gg = gr[j] * gamma[j];
            gxr[j] += (gg - sum_g * inv_c - xhat * sum_gx * inv_c) * rs;
        }
    }
}

template <typename T>
void adam_update_impl(std::int64_t n, T* p, const T* g, T* m, T* v,
                      T lr, T beta1, T beta2, T eps, T bias1, T bias2) {
    for (std::int64_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        const T mhat = m[i] / bias1;
        const T vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void s_gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
               const float* a, const float* b, float* c, bool acc) {
    gemm_nn_impl(m, n, k, a, b, c, acc);
}
void s_gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
               const float* a, const float* b, float* c, bool acc) {
    gemm_nt_impl(m, n, k, a, b, c, acc);
}
void s_gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
               const float* a, const float* b, float* c, bool acc) {
    gemm_tn_impl(m, n, k, a, b, c, acc);
}
void s_softmax_rows(std::int64_t rows, std::int64_t cols, const float* x, float* y) {
    softmax_rows_impl(rows, cols, x, y);
}
void s_softmax_bwd_rows(std::int64_t rows, std::int64_t cols,
                        const float* y, const float* gy, float* gx) {
    softmax_bwd_rows_impl(rows, cols, y, gy, gx);
}
void s_layernorm_fwd(std::int64_t rows, std::int64_t cols, const float* x,
                     const float* gamma, const float* beta, float eps,
                     float* y, float* mean, float* rstd) {
    layernorm_fwd_impl(rows, cols, x, gamma, beta, eps, y, mean, rstd);
}
void s_layernorm_bwd(std::int64_t rows, std::int64_t cols, const float* x,
                     const float* gamma, const float* mean, const float* rstd,
                     const float* gy, float* gx, float* ggamma, float* gbeta) {
    layernorm_bwd_impl(rows, cols, x, gamma, mean, rstd, gy, gx, ggamma, gbeta);
}
void s_adam_update(std::int64_t n, float* p, const float* g, float* m, float* v,
                   float lr, float beta1, float beta2, float eps,
                   float bias1, float bias2) {
    adam_update_impl(n, p, g, m, v, lr, beta1, beta2, eps, bias1, bias2);
}

}  // namespace

namespace scalar {
const Table table = {
    s_gemm_nn,  s_gemm_nt,  s_gemm_tn,
    s_add,      s_mul,      s_axpy,     s_scale,
    s_sum,      s_dot,      s_max,      s_all_finite,
    s_vexp,     s_sigmoid,
    s_relu_fwd, s_relu_bwd, s_gelu_fwd, s_gelu_bwd,
    s_softmax_rows, s_softmax_bwd_rows,
    s_layernorm_fwd, s_layernorm_bwd,
    s_adam_update,
};
}  // namespace scalar

namespace ref64 {
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
             const double* a, const double* b, double* c, bool acc) {
    gemm_nn_impl(m, n, k, a, b, c, acc);
}
void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
             const double* a, const double* b, double* c, bool acc) {
    gemm_nt_impl(m, n, k, a, b, c, acc);
}
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
             const double* a, const double* b, double* c, bool acc) {
    gemm_tn_impl(m, n, k, a, b, c, acc);
}
void softmax_rows(std::int64_t rows, std::int64_t cols, const double* x, double* y) {
    softmax_rows_impl(rows, cols, x, y);
}
void softmax_bwd_rows(std::int64_t rows, std::int64_t cols,
                      const double* y, const double* gy, double* gx) {
    softmax_bwd_rows_impl(rows, cols, y, gy, gx);
}
void layernorm_fwd(std::int64_t rows, std::int64_t cols, const double* x,
                   const double* gamma, const double* beta, double eps,
                   double* y, double* mean, double* rstd) {
    layernorm_fwd_impl(rows, cols, x, gamma, beta, eps, y, mean, rstd);
}
void layernorm_bwd(std::int64_t rows, std::int64_t cols, const double* x,
                   const double* gamma, const double* mean, const double* rstd,
                   const double* gy, double* gx, double* ggamma, double* gbeta) {
    layernorm_bwd_impl(rows, cols, x, gamma, mean, rstd, gy, gx, ggamma, gbeta);
}
void adam_update(std::int64_t n, double* p, const double* g, double* m, double* v,
                 double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2) {
    adam_update_impl(n, p, g, m, v, lr, beta1, beta2, eps, bias1, bias2);
}
}  // namespace ref64

}  // namespace artauth::kernels
