// AVX2+FMA backend. This translation unit is compiled with -mavx2 -mfma and
// must only be reached after a runtime CPU check (see kernels_dispatch.cpp).

#include "fdilab/kernels.hpp"

#ifdef FDILAB_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace fdilab::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sumsq_avx2(const double* x, std::size_t n) {
    return dot_avx2(x, x, n);
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yi = _mm256_loadu_pd(y + i);
        yi = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yi);
        _mm256_storeu_pd(y + i, yi);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

void tanh_backward_avx2(const double* y, const double* dy, double* dx, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yi = _mm256_loadu_pd(y + i);
        __m256d sech2 = _mm256_fnmadd_pd(yi, yi, one);  // 1 - y*y
        _mm256_storeu_pd(dx + i, _mm256_mul_pd(_mm256_loadu_pd(dy + i), sech2));
    }
    for (; i < n; ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

// saxpy-style row update: crow += a * brow
inline void row_fma(double a, const double* brow, double* crow, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        __m256d c1 = _mm256_loadu_pd(crow + j + 4);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j + 4), c1);
        _mm256_storeu_pd(crow + j, c0);
        _mm256_storeu_pd(crow + j + 4, c1);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
        _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) crow[j] += a * brow[j];
}

void gemm_nn_avx2(const double* A, const double* B, double* C,
                  std::size_t m, std::size_t k, std::size_t n) {
    std::memset(C, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t l = 0; l < k; ++l) row_fma(arow[l], B + l * n, crow, n);
    }
}

void gemm_tn_avx2(const double* A, const double* B, double* C,
                  std::size_t m, std::size_t k, std::size_t n) {
    std::memset(C, 0, k * n * sizeof(double));
    for (std::size_t r = 0; r < m; ++r) {
        const double* arow = A + r * k;
        const double* brow = B + r * n;
        for (std::size_t i = 0; i < k; ++i) row_fma(arow[i], brow, C + i * n, n);
    }
}

void gemm_nt_avx2(const double* A, const double* B, double* C,
                  std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = dot_avx2(arow, B + j * k, k);
    }
}

void gemv_avx2(const double* A, const double* x, double* y,
               std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_avx2(A + i * n, x, n);
}

void gemv_t_avx2(const double* A, const double* x, double* y,
                 std::size_t m, std::size_t n) {
    std::memset(y, 0, n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) row_fma(x[i], A + i * n, y, n);
}

void adam_step_avx2(double* p, const double* g, double* m, double* v,
                    std::size_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2) {
    const __m256d b1 = _mm256_set1_pd(beta1);
    const __m256d b2 = _mm256_set1_pd(beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d omb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d inv_bc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d inv_bc2 = _mm256_set1_pd(1.0 / bc2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d epsv = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_fmadd_pd(omb1, gi, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
        __m256d vi = _mm256_fmadd_pd(omb2, _mm256_mul_pd(gi, gi),
                                     _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        __m256d mhat = _mm256_mul_pd(mi, inv_bc1);
        __m256d vhat = _mm256_mul_pd(vi, inv_bc2);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

const Ops* avx2_ops() {
    static const Ops ops = {
        "avx2",
        dot_avx2,
        sumsq_avx2,
        axpy_avx2,
        scale_avx2,
        tanh_backward_avx2,
        gemm_nn_avx2,
        gemm_tn_avx2,
        gemm_nt_avx2,
        gemv_avx2,
        gemv_t_avx2,
        adam_step_avx2,
    };
    return &ops;
}

}  // namespace fdilab::kern

#else

namespace fdilab::kern {
const Ops* avx2_ops() { return nullptr; }
}  // namespace fdilab::kern

#endif  // FDILAB_HAVE_AVX2
