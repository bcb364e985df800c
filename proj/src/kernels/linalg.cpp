#include "fdilab/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "fdilab/kernels.hpp"

namespace fdilab {

Vector matvec(const Matrix& A, const Vector& x) {
    if (x.size() != A.cols) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(A.rows);
    kern::ops().gemv(A.data(), x.data(), y.data(), A.rows, A.cols);
    return y;
}

Vector matvec_t(const Matrix& A, const Vector& x) {
    if (x.size() != A.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vector y(A.cols);
    kern::ops().gemv_t(A.data(), x.data(), y.data(), A.rows, A.cols);
    return y;
}

Matrix matmul(const Matrix& A, const Matrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix C(A.rows, B.cols);
    kern::ops().gemm_nn(A.data(), B.data(), C.data(), A.rows, A.cols, B.cols);
    return C;
}

Matrix matmul_tn(const Matrix& A, const Matrix& B) {
    if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: dimension mismatch");
    Matrix C(A.cols, B.cols);
    kern::ops().gemm_tn(A.data(), B.data(), C.data(), A.rows, A.cols, B.cols);
    return C;
}

Matrix matmul_nt(const Matrix& A, const Matrix& B) {
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: dimension mismatch");
    Matrix C(A.rows, B.rows);
    kern::ops().gemm_nt(A.data(), B.data(), C.data(), A.rows, A.cols, B.rows);
    return C;
}

double dot(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
    return kern::ops().dot(x.data(), y.data(), x.size());
}

double norm_inf(const Vector& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

LuFactors lu_factor(Matrix A) {
    if (A.rows != A.cols) throw std::invalid_argument("lu_factor: matrix not square");
    const std::size_t n = A.rows;
    LuFactors f;
    f.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = static_cast<int>(i);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(A(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-300) {
            f.singular = true;
            f.lu = std::move(A);
            return f;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
        }
        const double inv = 1.0 / A(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double lik = A(i, k) * inv;
            A(i, k) = lik;
            if (lik != 0.0)
                kern::ops().axpy(-lik, A.row(k) + k + 1, A.row(i) + k + 1, n - k - 1);
        }
    }
    f.lu = std::move(A);
    return f;
}

Vector lu_solve(const LuFactors& f, Vector b) {
    if (f.singular) throw std::runtime_error("lu_solve: singular matrix");
    const std::size_t n = f.lu.rows;
    if (b.size() != n) throw std::invalid_argument("lu_solve: dimension mismatch");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (std::size_t i = 1; i < n; ++i) {
        double s = x[i];
        s -= kern::ops().dot(f.lu.row(i), x.data(), i);
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        s -= kern::ops().dot(f.lu.row(ii) + ii + 1, x.data() + ii + 1, n - ii - 1);
        x[ii] = s / f.lu(ii, ii);
    }
    return x;
}

bool cholesky_factor(Matrix& A) {
    if (A.rows != A.cols) throw std::invalid_argument("cholesky: matrix not square");
    const std::size_t n = A.rows;
    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j) - kern::ops().sumsq(A.row(j), j);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        A(j, j) = ljj;
        const double inv = 1.0 / ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A(i, j) - kern::ops().dot(A.row(i), A.row(j), j);
            A(i, j) = s * inv;
        }
        for (std::size_t k = j + 1; k < n; ++k) A(j, k) = 0.0;
    }
    return true;
}

Vector cholesky_solve(const Matrix& L, Vector b) {
    const std::size_t n = L.rows;
    if (b.size() != n) throw std::invalid_argument("cholesky_solve: dimension mismatch");
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i] - kern::ops().dot(L.row(i), y.data(), i);
        y[i] = s / L(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= L(k, ii) * x[k];
        x[ii] = s / L(ii, ii);
    }
    return x;
}

Vector solve_spd(Matrix A, Vector b, bool* singular) {
    if (singular) *singular = false;
    Matrix L = A;
    if (cholesky_factor(L)) return cholesky_solve(L, std::move(b));
    LuFactors f = lu_factor(std::move(A));
    if (f.singular) {
        if (singular) {
            *singular = true;
            return Vector(b.size(), 0.0);
        }
        throw std::runtime_error("solve_spd: singular system");
    }
    return lu_solve(f, std::move(b));
}

}  // namespace fdilab
