#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "splinet/linalg.hpp"
#include "splinet/relu_net.hpp"

// Hot loops live here, each with a serial reference implementation and an
// OpenMP twin.  Both paths produce bitwise-identical results: reductions are
// either exact (max) or materialized per element and summed in a fixed
// order, so thread count never changes a value.  `Exec::automatic` picks the
// OpenMP path when compiled in.

namespace splinet::kernels {

enum class Exec { serial, parallel, automatic };

bool openmp_enabled();

using PointFn = std::function<double(const double*)>;

// Evaluation grid: Cartesian product of per-axis sorted values plus an
// optional list of explicit points.
struct Grid {
    std::size_t d = 1;
    std::vector<std::vector<double>> axes;
    std::vector<std::vector<double>> extras;

    std::size_t cartesian_size() const;
    void point(std::size_t flat_index, double* out) const;
};

Grid uniform_grid(std::size_t d, std::size_t resolution);
// Insert extra values into one axis, keeping it sorted and deduplicated.
void merge_axis_values(Grid& grid, std::size_t axis, const std::vector<double>& values);

// sup |f - g| over the grid.  Both callables must be thread-safe.
double max_abs_diff_serial(const PointFn& f, const PointFn& g, const Grid& grid);
double max_abs_diff_omp(const PointFn& f, const PointFn& g, const Grid& grid);
double max_abs_diff(const PointFn& f, const PointFn& g, const Grid& grid,
                    Exec exec = Exec::automatic);

// Mean of (f - g)^2 over points stored row-major; deterministic two-pass
// reduction (parallel fill, ordered sum).
double mean_sq_diff_serial(const PointFn& f, const PointFn& g, const double* pts,
                           std::size_t n, std::size_t d);
double mean_sq_diff_omp(const PointFn& f, const PointFn& g, const double* pts, std::size_t n,
                        std::size_t d);
double mean_sq_diff(const PointFn& f, const PointFn& g, const double* pts, std::size_t n,
                    std::size_t d, Exec exec = Exec::automatic);

// Compressed sparse row view of a network; dense layer storage stays the
// single source of truth, this is a transient evaluation plan.
struct NetPlan {
    struct CsrLayer {
        std::vector<std::size_t> row_ptr;
        std::vector<std::size_t> col;
        std::vector<double> w;
        std::vector<double> v; // empty for the output layer
        std::size_t rows = 0;
    };
    std::vector<CsrLayer> layers;
    std::size_t input_dim = 0, output_dim = 0, max_width = 0;
};

NetPlan make_plan(const ReluNetwork& net);
// Single-point evaluation with caller scratch (each >= max_width).
void plan_eval(const NetPlan& plan, const double* x, double* out, double* scratch_a,
               double* scratch_b);
// n points row-major -> n * output_dim results row-major.
void batch_eval_serial(const NetPlan& plan, const double* pts, std::size_t n, double* out);
void batch_eval_omp(const NetPlan& plan, const double* pts, std::size_t n, double* out);
void batch_eval(const NetPlan& plan, const double* pts, std::size_t n, double* out,
                Exec exec = Exec::automatic);

// Row-parallel matrix fill; filler must be thread-safe.
using RowFiller = std::function<void(std::size_t row, double* out)>;
void fill_rows_serial(Matrix& m, const RowFiller& filler);
void fill_rows_omp(Matrix& m, const RowFiller& filler);
void fill_rows(Matrix& m, const RowFiller& filler, Exec exec = Exec::automatic);

// PointFn adapters.
PointFn as_point_fn(const ReluNetwork& net);        // scalar-output networks
PointFn as_point_fn(const NetPlan& plan);

} // namespace splinet::kernels
