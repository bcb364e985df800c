#pragma once

#include <cstddef>
#include <vector>

namespace fdilab {

using Vector = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    double* data() { return a.data(); }
    const double* data() const { return a.data(); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

// Kernel-backed products.
Vector matvec(const Matrix& A, const Vector& x);            // A * x
Vector matvec_t(const Matrix& A, const Vector& x);           // A^T * x
Matrix matmul(const Matrix& A, const Matrix& B);             // A * B
Matrix matmul_tn(const Matrix& A, const Matrix& B);          // A^T * B
Matrix matmul_nt(const Matrix& A, const Matrix& B);          // A * B^T

double dot(const Vector& x, const Vector& y);
double norm_inf(const Vector& x);

// LU factorization with partial pivoting (in place).
struct LuFactors {
    Matrix lu;
    std::vector<int> perm;
    bool singular = false;
};
LuFactors lu_factor(Matrix A);
Vector lu_solve(const LuFactors& f, Vector b);

// Cholesky for symmetric positive definite systems. Returns false when the
// matrix is not (numerically) positive definite.
bool cholesky_factor(Matrix& A);                   // lower triangle in place
Vector cholesky_solve(const Matrix& L, Vector b);

// Solve a symmetric positive semidefinite system, falling back from Cholesky
// to pivoted LU. Sets *singular when the system is rank deficient.
Vector solve_spd(Matrix A, Vector b, bool* singular = nullptr);

}  // namespace fdilab
