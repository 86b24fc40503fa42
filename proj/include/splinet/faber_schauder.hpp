#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "splinet/dataset.hpp"
#include "splinet/linalg.hpp"
#include "splinet/mars.hpp"

namespace splinet {

// Univariate basis member: the constant 1, the ramp x, or the integrated
// Haar bump at level j and translate k -- a triangle supported on
// [k 2^-j, (k+1) 2^-j] peaking at 2^(-j/2-1).
struct FsIndex {
    int tag = -2; // -2: constant, -1: ramp, >= 0: wavelet level j
    int k = 0;    // translate, meaningful for wavelets only

    bool is_const() const { return tag == -2; }
    bool is_ramp() const { return tag == -1; }
    bool is_wavelet() const { return tag >= 0; }

    // Position in the canonical order const < ramp < (0,0) < (1,0) < (1,1) < ...
    long rank() const {
        if (is_const()) return 0;
        if (is_ramp()) return 1;
        return 2 + ((1L << tag) - 1) + k;
    }
    bool operator==(const FsIndex& o) const { return tag == o.tag && k == o.k; }
};

using FsKey = std::vector<FsIndex>; // one index per coordinate

struct FsModel {
    std::size_t d = 1;
    int resolution = 0; // M: wavelet levels 0..M participate
    std::vector<std::pair<FsKey, double>> coeffs; // sorted by lexicographic rank

    double coeff(const FsKey& key) const; // 0 when absent
    double max_abs_coeff() const;
};

// Value of a single univariate basis member; x must lie in [0,1].
double eval_base(const FsIndex& idx, double x);

// Tensor-product expansion value at x in [0,1]^d.
double eval_fs(const FsModel& model, const double* x);
double eval_fs(const FsModel& model, const std::vector<double>& x);

// Indices of the level-M truncation in canonical order; size 1 + 2^(M+1).
std::vector<FsIndex> index_set(int resolution);
// All d-fold keys, lexicographic in the canonical order; size (1+2^(M+1))^d.
std::vector<FsKey> key_set(int resolution, std::size_t d);

// Coefficients of the truncation of f at resolution M, computed from the
// second-difference functionals applied per axis on the dyadic grid
// {k 2^-(M+1)}.  The reconstruction interpolates f exactly on that grid.
// Keys whose coefficient is exactly zero are dropped.
FsModel coeffs_from_function(const std::function<double(const double*)>& f, int resolution,
                             std::size_t d);

// Max deviation |eval_fs(model) - f| over the grid with components in
// {k 2^-(ell+1)}.  For model = coeffs_from_function(f, ell, d) the expansion
// interpolates f there, so the deviation is rounding noise only.
double interpolation_check(const FsModel& model, const std::function<double(const double*)>& f,
                           int ell);

// n x (1+2^(M+1))^d matrix, entry (i, key) = tensor basis value at point i.
Matrix design_matrix(const Dataset& data, int resolution);

struct FsFit {
    FsModel model;
    double alpha_used = 0.0; // effective ridge (0 when the plain solve worked)
};

// Penalized least squares via Cholesky on the normal equations; alpha = 0
// retries with alpha = 1e-10 * mean diagonal if the Gram is singular.
FsFit fit_least_squares(const Dataset& data, int resolution, double alpha);

// Randomized Kaczmarz on the design rows, sampled with probability
// proportional to squared row norm; zero iterations returns the zero model.
FsModel fit_kaczmarz(const Dataset& data, int resolution, std::size_t iterations,
                     std::uint64_t seed);

// Exact rewrite as a hinge expansion: each wavelet factor splits into three
// ramps, so a key expands into at most 3^d product terms and the whole model
// into at most 3^d * #keys, with coefficients inflated by at most
// 2^(d(M+2)/2).
MarsModel fs_to_mars(const FsModel& model);

// JSON layout: {"M": M, "d": d,
//               "coeffs": [{"lambda": ["phi" | "ramp" | ["w", j, k], ...],
//                           "beta": value}, ...]}
std::string fs_to_json(const FsModel& model);
FsModel fs_from_json(const std::string& text);
void save_fs(const FsModel& model, const std::string& path);
FsModel load_fs(const std::string& path);

} // namespace splinet
