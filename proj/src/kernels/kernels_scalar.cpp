#include "fdilab/kernels.hpp"

#include <cmath>
#include <cstring>

namespace fdilab::kern {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sumsq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void tanh_backward_scalar(const double* y, const double* dy, double* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

void gemm_nn_scalar(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n) {
    std::memset(C, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double a = arow[l];
            const double* brow = B + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void gemm_tn_scalar(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n) {
    std::memset(C, 0, k * n * sizeof(double));
    for (std::size_t r = 0; r < m; ++r) {
        const double* arow = A + r * k;
        const double* brow = B + r * n;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = arow[i];
            double* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void gemm_nt_scalar(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = dot_scalar(arow, B + j * k, k);
    }
}

void gemv_scalar(const double* A, const double* x, double* y,
                 std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(A + i * n, x, n);
}

void gemv_t_scalar(const double* A, const double* x, double* y,
                   std::size_t m, std::size_t n) {
    std::memset(y, 0, n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(x[i], A + i * n, y, n);
}

void adam_step_scalar(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",
        dot_scalar,
        sumsq_scalar,
        axpy_scalar,
        scale_scalar,
        tanh_backward_scalar,
        gemm_nn_scalar,
        gemm_tn_scalar,
        gemm_nt_scalar,
        gemv_scalar,
        gemv_t_scalar,
        adam_step_scalar,
    };
    return ops;
}

}  // namespace fdilab::kern
