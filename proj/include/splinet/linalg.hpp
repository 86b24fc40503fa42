#pragma once

#include <cstddef>
#include <vector>

namespace splinet {

// Row-major dense matrix. Desk-scale (widths up to a few hundred), so no
// sparse storage; nonzero structure is a measured quantity, not a format.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    double* row(std::size_t i) { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// y = A x (sizes must match).
void matvec(const Matrix& a, const double* x, double* y);

// In-place lower Cholesky of a symmetric positive definite matrix.
// Returns false (leaving a partially overwritten) when a pivot is not
// strictly positive; callers fall back to a ridge.
bool cholesky(Matrix& a);

// Solve L L^T x = b given the lower factor from cholesky().
void cholesky_solve(const Matrix& l, const double* b, double* x);

// Forward substitution only: solve L z = b.
void forward_solve(const Matrix& l, const double* b, double* z);

// Least squares via normal equations.  Solves (G + alpha I) beta = c where
// G = X^T X and c = X^T y are already formed.  If alpha == 0 and G is not
// numerically SPD, retries once with alpha = 1e-10 * mean(diag(G)).
// Returns the ridge value actually used.
double solve_normal_equations(const Matrix& gram, const std::vector<double>& rhs,
                              std::vector<double>& beta, double alpha);

} // namespace splinet
