#pragma once

#include <cstdint>
#include <string>

// Data-parallel inner loops of the tensor library. Every kernel exists as a
// scalar reference implementation; hot float32 paths additionally have AVX2
// variants selected at runtime. The active backend is process-global and fixed
// per configuration so reduction order (and therefore bit-level results) is
// stable for a given selection.
//
// All matrices are dense row-major. Gradient-accumulating kernels add into
// their output buffer, the rest overwrite.

namespace artauth::kernels {

enum class Backend { scalar, avx2 };

struct Table {
    // C[m,n] (+)= A[m,k] * B[k,n]
    void (*gemm_nn)(std::int64_t m, std::int64_t n, std::int64_t k,
                    const float* a, const float* b, float* c, bool accumulate);
    // C[m,n] (+)= A[m,k] * B[n,k]^T
    void (*gemm_nt)(std::int64_t m, std::int64_t n, std::int64_t k,
                    const float* a, const float* b, float* c, bool accumulate);
    // C[m,n] (+)= A[k,m]^T * B[k,n]
    void (*gemm_tn)(std::int64_t m, std::int64_t n, std::int64_t k,
                    const float* a, const float* b, float* c, bool accumulate);

    void (*add)(std::int64_t n, const float* a, const float* b, float* y);
    void (*mul)(std::int64_t n, const float* a, const float* b, float* y);
    void (*axpy)(std::int64_t n, float alpha, const float* x, float* y);
    void (*scale)(std::int64_t n, float alpha, const float* x, float* y);
    float (*sum)(std::int64_t n, const float* x);
    float (*dot)(std::int64_t n, const float* x, const float* y);
    float (*max_value)(std::int64_t n, const float* x);
    bool (*all_finite)(std::int64_t n, const float* x);

    void (*vexp)(std::int64_t n, const float* x, float* y);
    void (*sigmoid)(std::int64_t n, const float* x, float* y);
    void (*relu_fwd)(std::int64_t n, const float* x, float* y);
    void (*relu_bwd)(std::int64_t n, const float* x, const float* gy, float* gx);
    void (*gelu_fwd)(std::int64_t n, const float* x, float* y);
    void (*gelu_bwd)(std::int64_t n, const float* x, const float* gy, float* gx);

    void (*softmax_rows)(std::int64_t rows, std::int64_t cols, const float* x, float* y);
    // gx += y .* (gy - rowdot(gy, y)), with y the saved softmax output
    void (*softmax_bwd_rows)(std::int64_t rows, std::int64_t cols,
                             const float* y, const float* gy, float* gx);

    void (*layernorm_fwd)(std::int64_t rows, std::int64_t cols, const float* x,
                          const float* gamma, const float* beta, float eps,
                          float* y, float* mean, float* rstd);
    void (*layernorm_bwd)(std::int64_t rows, std::int64_t cols, const float* x,
                          const float* gamma, const float* mean, const float* rstd,
                          const float* gy, float* gx, float* ggamma, float* gbeta);

    void (*adam_update)(std::int64_t n, float* p, const float* g, float* m, float* v,
                        float lr, float beta1, float beta2, float eps,
                        float bias1, float bias2);
};

// Active dispatch table. Initialized lazily from CPU detection; the
// ARTAUTH_KERNELS environment variable ("scalar" or "avx2") overrides.
const Table& active();
Backend backend();
void select(Backend b);
bool avx2_available();
std::string backend_name();

namespace scalar {
extern const Table table;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Table table;
}
#endif

// Double-precision reference path used by the 64-bit gradient-checking mode.
// Deliberately scalar only: the verification path trades speed for an
// implementation independent of the SIMD lane structure.
namespace ref64 {
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
             const double* a, const double* b, double* c, bool accumulate);
void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
             const double* a, const double* b, double* c, bool accumulate);
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k,
             const double* a, const double* b, double* c, bool accumulate);
void softmax_rows(std::int64_t rows, std::int64_t cols, const double* x, double* y);
void softmax_bwd_rows(std::int64_t rows, std::int64_t cols,
                      const double* y, const double* gy, double* gx);
void layernorm_fwd(std::int64_t rows, std::int64_t cols, const double* x,
                   const double* gamma, const double* beta, double eps,
                   double* y, double* mean, double* rstd);
void layernorm_bwd(std::int64_t rows, std::int64_t cols, const double* x,
                   const double* gamma, const double* mean, const double* rstd,
                   const double* gy, double* gx, double* ggamma, double* gbeta);
void adam_update(std::int64_t n, double* p, const double* g, double* m, double* v,
                 double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2);
}  // namespace ref64

}  // namespace artauth::kernels
