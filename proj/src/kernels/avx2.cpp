#if defined(__x86_64__) || defined(_M_X64)

#include "artauth/kernels/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace artauth::kernels {

namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_movehdup_ps(lo);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

inline float hmax256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_max_ps(lo, sh);
    sh = _mm_movehdup_ps(lo);
    lo = _mm_max_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

// Polynomial exp after Cephes, as commonly batched for AVX. Max observed
// relative error vs libm is ~2 ulp over the clamped range.
inline __m256 vexp256(__m256 x) {
    const __m256 exp_hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 exp_lo = _mm256_set1_ps(-87.3365478515625f);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    const __m256 c1 = _mm256_set1_ps(0.693359375f);
    const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
    const __m256 p0 = _mm256_set1_ps(1.9875691500e-4f);
    const __m256 p1 = _mm256_set1_ps(1.3981999507e-3f);
    const __m256 p2 = _mm256_set1_ps(8.3334519073e-3f);
    const __m256 p3 = _mm256_set1_ps(4.1665795894e-2f);
    const __m256 p4 = _mm256_set1_ps(1.6666665459e-1f);
    const __m256 p5 = _mm256_set1_ps(5.0000001201e-1f);
    const __m256 one = _mm256_set1_ps(1.0f);

    x = _mm256_min_ps(x, exp_hi);
    x = _mm256_max_ps(x, exp_lo);

    __m256 fx = _mm256_mul_ps(x, log2e);
    fx = _mm256_round_ps(fx, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);

    x = _mm256_fnmadd_ps(fx, c1, x);
    x = _mm256_fnmadd_ps(fx, c2, x);

    __m256 x2 = _mm256_mul_ps(x, x);
    __m256 y = p0;
    y = _mm256_fmadd_ps(y, x, p1);
    y = _mm256_fmadd_ps(y, x, p2);
    y = _mm256_fmadd_ps(y, x, p3);
    y = _mm256_fmadd_ps(y, x, p4);
    y = _mm256_fmadd_ps(y, x, p5);
    y = _mm256_fmadd_ps(y, x2, x);
    y = _mm256_add_ps(y, one);

    __m256i n = _mm256_cvtps_epi32(fx);
    n = _mm256_add_epi32(n, _mm256_set1_epi32(127));
    n = _mm256_slli_epi32(n, 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

// tanh(u) = (e^{2u} - 1) / (e^{2u} + 1); vexp256 clamps its argument so the
// ratio saturates cleanly at +-1.
inline __m256 vtanh256(__m256 u) {
    const __m256 one = _mm256_set1_ps(1.0f);
    __m256 e = vexp256(_mm256_add_ps(u, u));
    return _mm256_div_ps(_mm256_sub_ps(e, one), _mm256_add_ps(e, one));
}

constexpr float kGeluC0 = 0.7978845608028654f;
constexpr float kGeluC1 = 0.044715f;

void a_gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
               const float* a, const float* b, float* c, bool acc) {
    // 4x16 register tile; i and j tails fall back to a narrower path.
    const std::int64_t jt = n / 16 * 16;
    std::int64_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const float* a0 = a + (i + 0) * k;
        const float* a1 = a + (i + 1) * k;
        const float* a2 = a + (i + 2) * k;
        const float* a3 = a + (i + 3) * k;
        for (std::int64_t j = 0; j < jt; j += 16) {
            __m256 c00, c01, c10, c11, c20, c21, c30, c31;
            if (acc) {
                c00 = _mm256_loadu_ps(c + (i + 0) * n + j);
                c01 = _mm256_loadu_ps(c + (i + 0) * n + j + 8);
                c10 = _mm256_loadu_ps(c + (i + 1) * n + j);
                c11 = _mm256_loadu_ps(c + (i + 1) * n + j + 8);
                c20 = _mm256_loadu_ps(c + (i + 2) * n + j);
                c21 = _mm256_loadu_ps(c + (i + 2) * n + j + 8);
                c30 = _mm256_loadu_ps(c + (i + 3) * n + j);
                c31 = _mm256_loadu_ps(c + (i + 3) * n + j + 8);
            } else {
                c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_ps();
            }
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const __m256 b0 = _mm256_loadu_ps(b + kk * n + j);
                const __m256 b1 = _mm256_loadu_ps(b + kk * n + j + 8);
                __m256 av = _mm256_broadcast_ss(a0 + kk);
                c00 = _mm256_fmadd_ps(av, b0, c00);
                c01 = _mm256_fmadd_ps(av, b1, c01);
                av = _mm256_broadcast_ss(a1 + kk);
                c10 = _mm256_fmadd_ps(av, b0, c10);
                c11 = _mm256_fmadd_ps(av, b1, c11);
                av = _mm256_broadcast_ss(a2 + kk);
                c20 = _mm256_fmadd_ps(av, b0, c20);
                c21 = _mm256_fmadd_ps(av, b1, c21);
                av = _mm256_broadcast_ss(a3 + kk);
                c30 = _mm256_fmadd_ps(av, b0, c30);
                c31 = _mm256_fmadd_ps(av, b1, c31);
            }
            _mm256_storeu_ps(c + (i + 0) * n + j, c00);
            _mm256_storeu_ps(c + (i + 0) * n + j + 8, c01);
            _mm256_storeu_ps(c + (i + 1) * n + j, c10);
            _mm256_storeu_ps(c + (i + 1) * n + j + 8, c11);
            _mm256_storeu_ps(c + (i + 2) * n + j, c20);
            _mm256_storeu_ps(c + (i + 2) * n + j + 8, c21);
            _mm256_storeu_ps(c + (i + 3) * n + j, c30);
            _mm256_storeu_ps(c + (i + 3) * n + j + 8, c31);
        }
        for (std::int64_t j = jt; j < n; ++j) {
            float s0 = acc ? c[(i + 0) * n + j] : 0.0f;
            float s1 = acc ? c[(i + 1) * n + j] : 0.0f;
            float s2 = acc ? c[(i + 2) * n + j] : 0.0f;
            float s3 = acc ? c[(i + 3) * n + j] : 0.0f;
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const float bv = b[kk * n + j];
                s0 += a0[kk] * bv;
                s1 += a1[kk] * bv;
                s2 += a2[kk] * bv;
                s3 += a3[kk] * bv;
            }
            c[(i + 0) * n + j] = s0;
            c[(i + 1) * n + j] = s1;
            c[(i + 2) * n + j] = s2;
            c[(i + 3) * n + j] = s3;
        }
    }
    for (; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        std::int64_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256 cv = acc ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
            for (std::int64_t kk = 0; kk < k; ++kk) {
                cv = _mm256_fmadd_ps(_mm256_broadcast_ss(arow + kk),
                                     _mm256_loadu_ps(b + kk * n + j), cv);
            }
            _mm256_storeu_ps(crow + j, cv);
        }
        for (; j < n; ++j) {
            float s = acc ? crow[j] : 0.0f;
            for (std::int64_t kk = 0; kk < k; ++kk) s += arow[kk] * b[kk * n + j];
            crow[j] = s;
        }
    }
}

void a_gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
               const float* a, const float* b, float* c, bool acc) {
    const std::int64_t kt = k / 8 * 8;
    for (std::int64_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        std::int64_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const float* b0 = b + (j + 0) * k;
            const float* b1 = b + (j + 1) * k;
            const float* b2 = b + (j + 2) * k;
            const float* b3 = b + (j + 3) * k;
            __m256 d0 = _mm256_setzero_ps();
            __m256 d1 = _mm256_setzero_ps();
            __m256 d2 = _mm256_setzero_ps();
            __m256 d3 = _mm256_setzero_ps();
            for (std::int64_t kk = 0; kk < kt; kk += 8) {
                const __m256 av = _mm256_loadu_ps(arow + kk);
                d0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + kk), d0);
                d1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + kk), d1);
                d2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + kk), d2);
                d3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + kk), d3);
            }
            float s0 = hsum256(d0), s1 = hsum256(d1), s2 = hsum256(d2), s3 = hsum256(d3);
            for (std::int64_t kk = kt; kk < k; ++kk) {
                const float av = arow[kk];
                s0 += av * b0[kk];
                s1 += av * b1[kk];
                s2 += av * b2[kk];
                s3 += av * b3[kk];
            }
            crow[j + 0] = acc ? crow[j + 0] + s0 : s0;
            crow[j + 1] = acc ? crow[j + 1] + s1 : s1;
            crow[j + 2] = acc ? crow[j + 2] + s2 : s2;
            crow[j + 3] = acc ? crow[j + 3] + s3 : s3;
        }
        for (; j < n; ++j) {
            const float* brow = b + j * k;
            __m256 d = _mm256_setzero_ps();
            for (std::int64_t kk = 0; kk < kt; kk += 8) {
                d = _mm256_fmadd_ps(_mm256_loadu_ps(arow + kk),
                                    _mm256_loadu_ps(brow + kk), d);
            }
            float s = hsum256(d);
            for (std::int64_t kk = kt; kk < k; ++kk) s += arow[kk] * brow[kk];
            crow[j] = acc ? crow[j] + s : s;
        }
    }
}

void a_gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
               const float* a, const float* b, float* c, bool acc) {
    if (!acc) {
        std::int64_t i = 0;
        const std::int64_t total = m * n;
        const __m256 z = _mm256_setzero_ps();
        for (; i + 8 <= total; i += 8) _mm256_storeu_ps(c + i, z);
        for (; i < total; ++i) c[i] = 0.0f;
    }
    const std::int64_t jt = n / 8 * 8;
    for (std::int64_t kk = 0; kk < k; ++kk) {
        const float* arow = a + kk * m;
        const float* brow = b + kk * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const __m256 av = _mm256_broadcast_ss(arow + i);
            float* crow = c + i * n;
            std::int64_t j = 0;
            for (; j < jt; j += 8) {
                _mm256_storeu_ps(crow + j,
                                 _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j),
                                                 _mm256_loadu_ps(crow + j)));
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void a_add(std::int64_t n, const float* a, const float* b, float* y) {
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i),
                                              _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) y[i] = a[i] + b[i];
}

void a_mul(std::int64_t n, const float* a, const float* b, float* y) {
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i),
                                              _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) y[i] = a[i] * b[i];
}

void a_axpy(std::int64_t n, float alpha, const float* x, float* y) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i),
                                                _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void a_scale(std::int64_t n, float alpha, const float* x, float* y) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
    }
    for (; i < n; ++i) y[i] = alpha * x[i];
}

float a_sum(std::int64_t n, const float* x) {
    __m256 acc = _mm256_setzero_ps();
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum256(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float a_dot(std::int64_t n, const float* x, const float* y) {
    __m256 acc = _mm256_setzero_ps();
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
    }
    float s = hsum256(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

float a_max(std::int64_t n, const float* x) {
    float m = x[0];
    std::int64_t i = 0;
    if (n >= 8) {
        __m256 acc = _mm256_loadu_ps(x);
        for (i = 8; i + 8 <= n; i += 8) acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
        m = hmax256(acc);
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

bool a_all_finite(std::int64_t n, const float* x) {
    // x is finite iff |x| < inf; NaN compares false.
    const __m256 inf = _mm256_set1_ps(std::numeric_limits<float>::infinity());
    const __m256 sign_mask = _mm256_set1_ps(-0.0f);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 ax = _mm256_andnot_ps(sign_mask, _mm256_loadu_ps(x + i));
        const __m256 ok = _mm256_cmp_ps(ax, inf, _CMP_LT_OQ);
        if (_mm256_movemask_ps(ok) != 0xff) return false;
    }
    for (; i < n; ++i) {
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

void a_vexp(std::int64_t n, const float* x, float* y) {
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, vexp256(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) {
        float buf[8] = {x[i]};
        _mm256_storeu_ps(buf, vexp256(_mm256_loadu_ps(buf)));
        y[i] = buf[0];
    }
}

void a_sigmoid(std::int64_t n, const float* x, float* y) {
    const __m256 one = _mm256_set1_ps(1.0f);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 e = vexp256(_mm256_sub_ps(_mm256_setzero_ps(),
                                               _mm256_loadu_ps(x + i)));
        _mm256_storeu_ps(y + i, _mm256_div_ps(one, _mm256_add_ps(one, e)));
    }
    for (; i < n; ++i) {
        float buf[8] = {-x[i]};
        _mm256_storeu_ps(buf, vexp256(_mm256_loadu_ps(buf)));
        y[i] = 1.0f / (1.0f + buf[0]);
    }
}

void a_relu_fwd(std::int64_t n, const float* x, float* y) {
    const __m256 z = _mm256_setzero_ps();
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_max_ps(z, _mm256_loadu_ps(x + i)));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void a_relu_bwd(std::int64_t n, const float* x, const float* gy, float* gx) {
    const __m256 z = _mm256_setzero_ps();
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
        const __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(gy + i));
        _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), g));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0f) gx[i] += gy[i];
    }
}

inline __m256 gelu8(__m256 x) {
    const __m256 c0 = _mm256_set1_ps(kGeluC0);
    const __m256 c1 = _mm256_set1_ps(kGeluC1);
    const __m256 half = _mm256_set1_ps(0.5f);
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 x3 = _mm256_mul_ps(_mm256_mul_ps(x, x), x);
    const __m256 u = _mm256_mul_ps(c0, _mm256_fmadd_ps(c1, x3, x));
    return _mm256_mul_ps(_mm256_mul_ps(half, x), _mm256_add_ps(one, vtanh256(u)));
}

void a_gelu_fwd(std::int64_t n, const float* x, float* y) {
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, gelu8(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) {
        const float u = kGeluC0 * (x[i] + kGeluC1 * x[i] * x[i] * x[i]);
        y[i] = 0.5f * x[i] * (1.0f + std::tanh(u));
    }
}

void a_gelu_bwd(std::int64_t n, const float* x, const float* gy, float* gx) {
    const __m256 c0 = _mm256_set1_ps(kGeluC0);
    const __m256 c1 = _mm256_set1_ps(kGeluC1);
    const __m256 c13 = _mm256_set1_ps(3.0f * kGeluC1);
    const __m256 half = _mm256_set1_ps(0.5f);
    const __m256 one = _mm256_set1_ps(1.0f);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 x2 = _mm256_mul_ps(xv, xv);
        const __m256 u = _mm256_mul_ps(c0, _mm256_fmadd_ps(c1, _mm256_mul_ps(x2, xv), xv));
        const __m256 t = vtanh256(u);
        const __m256 du = _mm256_mul_ps(c0, _mm256_fmadd_ps(c13, x2, one));
        const __m256 sech2 = _mm256_fnmadd_ps(t, t, one);
        __m256 d = _mm256_mul_ps(half, _mm256_add_ps(one, t));
        d = _mm256_fmadd_ps(_mm256_mul_ps(_mm256_mul_ps(half, xv), sech2), du, d);
        _mm256_storeu_ps(gx + i, _mm256_fmadd_ps(_mm256_loadu_ps(gy + i), d,
                                                 _mm256_loadu_ps(gx + i)));
    }
    for (; i < n; ++i) {
        const float u = kGeluC0 * (x[i] + kGeluC1 * x[i] * x[i] * x[i]);
        const float t = std::tanh(u);
        const float du = kGeluC0 * (1.0f + 3.0f * kGeluC1 * x[i] * x[i]);
        gx[i] += gy[i] * (0.5f * (1.0f + t) + 0.5f * x[i] * (1.0f - t * t) * du);
    }
}

void a_softmax_rows(std::int64_t rows, std::int64_t cols, const float* x, float* y) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* xr = x + r * cols;
        float* yr = y + r * cols;
        const float m = a_max(cols, xr);
        const __m256 mv = _mm256_set1_ps(m);
        __m256 acc = _mm256_setzero_ps();
        std::int64_t j = 0;
        for (; j + 8 <= cols; j += 8) {
            const __m256 e = vexp256(_mm256_sub_ps(_mm256_loadu_ps(xr + j), mv));
            _mm256_storeu_ps(yr + j, e);
            acc = _mm256_add_ps(acc, e);
        }
        float denom = hsum256(acc);
        for (; j < cols; ++j) {
            float buf[8] = {xr[j] - m};
            _mm256_storeu_ps(buf, vexp256(_mm256_loadu_ps(buf)));
            yr[j] = buf[0];
            denom += buf[0];
        }
        a_scale(cols, 1.0f / denom, yr, yr);
    }
}

void a_softmax_bwd_rows(std::int64_t rows, std::int64_t cols,
                        const float* y, const float* gy, float* gx) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* yr = y + r * cols;
        const float* gr = gy + r * cols;
        float* gxr = gx + r * cols;
        const float inner = a_dot(cols, yr, gr);
        const __m256 iv = _mm256_set1_ps(inner);
        std::int64_t j = 0;
        for (; j + 8 <= cols; j += 8) {
            const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(gr + j), iv);
            _mm256_storeu_ps(gxr + j, _mm256_fmadd_ps(_mm256_loadu_ps(yr + j), d,
                                                      _mm256_loadu_ps(gxr + j)));
        }
        for (; j < cols; ++j) gxr[j] += yr[j] * (gr[j] - inner);
    }
}

void a_layernorm_fwd(std::int64_t rows, std::int64_t cols, const float* x,
                     const float* gamma, const float* beta, float eps,
                     float* y, float* mean, float* rstd) {
    const float inv_c = 1.0f / static_cast<float>(cols);
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* xr = x + r * cols;
        float* yr = y + r * cols;
        const float mu = a_sum(cols, xr) * inv_c;
        const __m256 muv = _mm256_set1_ps(mu);
        __m256 acc = _mm256_setzero_ps();
        std::int64_t j = 0;
        for (; j + 8 <= cols; j += 8) {
            const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(xr + j), muv);
            acc = _mm256_fmadd_ps(d, d, acc);
        }
        float var = hsum256(acc);
        for (; j < cols; ++j) {
            const float d = xr[j] - mu;
            var += d * d;
        }
        var *= inv_c;
        const float rs = 1.0f / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        const __m256 rsv = _mm256_set1_ps(rs);
        for (j = 0; j + 8 <= cols; j += 8) {
            const __m256 xhat =
                _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), muv), rsv);
            _mm256_storeu_ps(yr + j, _mm256_fmadd_ps(xhat, _mm256_loadu_ps(gamma + j),
                                                     _mm256_loadu_ps(beta + j)));
        }
        for (; j < cols; ++j) yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
    }
}

void a_layernorm_bwd(std::int64_t rows, std::int64_t cols, const float* x,
                     const float* gamma, const float* mean, const float* rstd,
                     const float* gy, float* gx, float* ggamma, float* gbeta) {
    const float inv_c = 1.0f / static_cast<float>(cols);
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* xr = x + r * cols;
        const float* gr = gy + r * cols;
        float* gxr = gx + r * cols;
        const float mu = mean[r];
        const float rs = rstd[r];
        const __m256 muv = _mm256_set1_ps(mu);
        const __m256 rsv = _mm256_set1_ps(rs);
        __m256 acc_g = _mm256_setzero_ps();
        __m256 acc_gx = _mm256_setzero_ps();
        std::int64_t j = 0;
        for (; j + 8 <= cols; j += 8) {
            const __m256 xhat =
                _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), muv), rsv);
            const __m256 gv = _mm256_loadu_ps(gr + j);
            const __m256 gg = _mm256_mul_ps(gv, _mm256_loadu_ps(gamma + j));
            acc_g = _mm256_add_ps(acc_g, gg);
            acc_gx = _mm256_fmadd_ps(gg, xhat, acc_gx);
            _mm256_storeu_ps(ggamma + j, _mm256_fmadd_ps(gv, xhat,
                                                         _mm256_loadu_ps(ggamma + j)));
            _mm256_storeu_ps(gbeta + j, _mm256_add_ps(gv, _mm256_loadu_ps(gbeta + j)));
        }
        float sum_g = hsum256(acc_g);
        float sum_gx = hsum256(acc_gx);
        for (; j < cols; ++j) {
            const float xhat = (xr[j] - mu) * rs;
            const float gg = gr[j] * gamma[j];
            sum_g += gg;
            sum_gx += gg * xhat;
            ggamma[j] += gr[j] * xhat;
            gbeta[j] += gr[j];
        }
        const __m256 sgv = _mm256_set1_ps(sum_g * inv_c);
        const __m256 sgxv = _mm256_set1_ps(sum_gx * inv_c);
        for (j = 0; j + 8 <= cols; j += 8) {
            const __m256 xhat =
                _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + j), muv), rsv);
            const __m256 gg = _mm256_mul_ps(_mm256_loadu_ps(gr + j),
                                            _mm256_loadu_ps(gamma + j));
            __m256 d = _mm256_sub_ps(gg, sgv);
            d = _mm256_fnmadd_ps(xhat, sgxv, d);
            _mm256_storeu_ps(gxr + j, _mm256_fmadd_ps(d, rsv, _mm256_loadu_ps(gxr + j)));
        }
        for (; j < cols; ++j) {
            const float xhat = (xr[j] - mu) * rs;
            const float gg = gr[j] * gamma[j];
            gxr[j] += (gg - sum_g * inv_c - xhat * sum_gx * inv_c) * rs;
        }
    }
}

void a_adam_update(std::int64_t n, float* p, const float* g, float* m, float* v,
                   float lr, float beta1, float beta2, float eps,
                   float bias1, float bias2) {
    const __m256 b1 = _mm256_set1_ps(beta1);
    const __m256 b2 = _mm256_set1_ps(beta2);
    const __m256 ob1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 ob2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 ib1 = _mm256_set1_ps(1.0f / bias1);
    const __m256 ib2 = _mm256_set1_ps(1.0f / bias2);
    const __m256 lrv = _mm256_set1_ps(lr);
    const __m256 ev = _mm256_set1_ps(eps);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 gv = _mm256_loadu_ps(g + i);
        __m256 mv = _mm256_loadu_ps(m + i);
        __m256 vv = _mm256_loadu_ps(v + i);
        mv = _mm256_fmadd_ps(b1, mv, _mm256_mul_ps(ob1, gv));
        vv = _mm256_fmadd_ps(b2, vv, _mm256_mul_ps(ob2, _mm256_mul_ps(gv, gv)));
        _mm256_storeu_ps(m + i, mv);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_mul_ps(mv, ib1);
        const __m256 vhat = _mm256_mul_ps(vv, ib2);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), ev);
        const __m256 step = _mm256_div_ps(_mm256_mul_ps(lrv, mhat), denom);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        const float mhat = m[i] / bias1;
        const float vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

namespace avx2 {
const Table table = {
    a_gemm_nn,  a_gemm_nt,  a_gemm_tn,
    a_add,      a_mul,      a_axpy,     a_scale,
    a_sum,      a_dot,      a_max,      a_all_finite,
    a_vexp,     a_sigmoid,
    a_relu_fwd, a_relu_bwd, a_gelu_fwd, a_gelu_bwd,
    a_softmax_rows, a_softmax_bwd_rows,
    a_layernorm_fwd, a_layernorm_bwd,
    a_adam_update,
};
}  // namespace avx2

}  // namespace artauth::kernels

#endif  // x86_64
