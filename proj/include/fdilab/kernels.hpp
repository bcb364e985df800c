#pragma once

#include <cstddef>
#include <string>

namespace fdilab::kern {

// Dense kernels used by the numeric core. All matrices are row-major.
// Every operation has a scalar reference implementation and, on x86-64
// machines with AVX2+FMA, a vectorized variant selected at runtime.
struct Ops {
    const char* name;

    // reductions
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sumsq)(const double* x, std::size_t n);

    // elementwise
    void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a*x
    void (*scale)(double a, double* x, std::size_t n);                  // x *= a
    void (*tanh_backward)(const double* y, const double* dy, double* dx,
                          std::size_t n);                               // dx = dy*(1-y^2)

    // C(m x n) = A(m x k) * B(k x n)
    void (*gemm_nn)(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n);
    // C(k x n) = A(m x k)^T * B(m x n)
    void (*gemm_tn)(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n);
    // C(m x n) = A(m x k) * B(n x k)^T
    void (*gemm_nt)(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n);

    // y(m) = A(m x n) * x
    void (*gemv)(const double* A, const double* x, double* y,
                 std::size_t m, std::size_t n);
    // y(n) = A(m x n)^T * x
    void (*gemv_t)(const double* A, const double* x, double* y,
                   std::size_t m, std::size_t n);

    // Adam update with bias correction folded into bc1 = 1-beta1^t, bc2 = 1-beta2^t.
    void (*adam_step)(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);
};

// The runtime-selected backend. Selection happens once, on first use:
// AVX2 when compiled in and supported by the CPU, otherwise scalar.
// The environment variable FDILAB_KERNELS=scalar|avx2 overrides.
const Ops& ops();

const Ops& scalar_ops();
const Ops* avx2_ops();   // nullptr when unavailable
bool cpu_has_avx2();

// Force a backend by name ("scalar", "avx2", "auto"). Throws on an
// unknown or unavailable backend. Intended for tests.
void select_backend(const std::string& name);

}  // namespace fdilab::kern
