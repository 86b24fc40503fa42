#include "splinet/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace splinet {

void matvec(const Matrix& a, const double* x, double* y) {
    const std::size_t m = a.rows(), n = a.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* r = a.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += r[j] * x[j];
        y[i] = acc;
    }
}

bool cholesky(Matrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double root = std::sqrt(d);
        a(j, j) = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / root;
        }
        for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
    }
    return true;
}

void forward_solve(const Matrix& l, const double* b, double* z) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
}

void cholesky_solve(const Matrix& l, const double* b, double* x) {
    const std::size_t n = l.rows();
    forward_solve(l, b, x);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
}

double solve_normal_equations(const Matrix& gram, const std::vector<double>& rhs,
                              std::vector<double>& beta, double alpha) {
    const std::size_t n = gram.rows();
    if (rhs.size() != n) throw std::invalid_argument("solve_normal_equations: size mismatch");
    beta.assign(n, 0.0);
    if (n == 0) return alpha;

    double mean_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_diag += gram(i, i);
    mean_diag /= static_cast<double>(n);

    double used = alpha;
    for (int attempt = 0; attempt < 2; ++attempt) {
        Matrix l = gram;
        for (std::size_t i = 0; i < n; ++i) l(i, i) += used;
        if (cholesky(l)) {
            cholesky_solve(l, rhs.data(), beta.data());
            return used;
        }
        if (attempt == 0) {
            // Singular system: ridge scaled to the Gram's magnitude.
            double bump = 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
            used = (used > 0.0 ? used * 1e4 : bump);
        }
    }
    throw std::runtime_error("solve_normal_equations: system singular even with ridge");
}

} // namespace splinet
