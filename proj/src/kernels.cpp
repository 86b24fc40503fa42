#include "splinet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splinet::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

namespace {

Exec resolve(Exec exec) {
    if (exec != Exec::automatic) return exec;
    return openmp_enabled() ? Exec::parallel : Exec::serial;
}

} // namespace

std::size_t Grid::cartesian_size() const {
    std::size_t total = 1;
    for (const auto& ax : axes) total *= ax.size();
    return total;
}

void Grid::point(std::size_t flat_index, double* out) const {
    const std::size_t cart = cartesian_size();
    if (flat_index < cart) {
        std::size_t rem = flat_index;
        for (std::size_t j = 0; j < d; ++j) {
            const auto& ax = axes[j];
            out[j] = ax[rem % ax.size()];
            rem /= ax.size();
        }
        return;
    }
    const auto& p = extras[flat_index - cart];
    std::copy(p.begin(), p.end(), out);
}

Grid uniform_grid(std::size_t d, std::size_t resolution) {
    if (d == 0 || resolution < 2) throw std::invalid_argument("uniform_grid: bad arguments");
    Grid g;
    g.d = d;
    std::vector<double> ax(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
        ax[i] = static_cast<double>(i) / static_cast<double>(resolution - 1);
    g.axes.assign(d, ax);
    return g;
}

void merge_axis_values(Grid& grid, std::size_t axis, const std::vector<double>& values) {
    auto& ax = grid.axes.at(axis);
    ax.insert(ax.end(), values.begin(), values.end());
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
}

double max_abs_diff_serial(const PointFn& f, const PointFn& g, const Grid& grid) {
    const std::size_t total = grid.cartesian_size() + grid.extras.size();
    std::vector<double> x(grid.d);
    double best = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        grid.point(i, x.data());
        best = std::max(best, std::fabs(f(x.data()) - g(x.data())));
    }
    return best;
}

double max_abs_diff_omp(const PointFn& f, const PointFn& g, const Grid& grid) {
    const std::size_t total = grid.cartesian_size() + grid.extras.size();
    double best = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : best)
#endif
    for (std::size_t i = 0; i < total; ++i) {
        thread_local std::vector<double> x;
        if (x.size() < grid.d) x.resize(grid.d);
        grid.point(i, x.data());
        best = std::max(best, std::fabs(f(x.data()) - g(x.data())));
    }
    return best;
}

double max_abs_diff(const PointFn& f, const PointFn& g, const Grid& grid, Exec exec) {
    return resolve(exec) == Exec::parallel ? max_abs_diff_omp(f, g, grid)
                                           : max_abs_diff_serial(f, g, grid);
}

namespace {

double ordered_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

} // namespace

double mean_sq_diff_serial(const PointFn& f, const PointFn& g, const double* pts, std::size_t n,
                           std::size_t d) {
    std::vector<double> errs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = f(pts + i * d) - g(pts + i * d);
        errs[i] = e * e;
    }
    return ordered_sum(errs) / static_cast<double>(n);
}

double mean_sq_diff_omp(const PointFn& f, const PointFn& g, const double* pts, std::size_t n,
                        std::size_t d) {
    std::vector<double> errs(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < n; ++i) {
        const double e = f(pts + i * d) - g(pts + i * d);
        errs[i] = e * e;
    }
    // Fill is parallel, the sum is ordered: value independent of threads.
    return ordered_sum(errs) / static_cast<double>(n);
}

double mean_sq_diff(const PointFn& f, const PointFn& g, const double* pts, std::size_t n,
                    std::size_t d, Exec exec) {
    return resolve(exec) == Exec::parallel ? mean_sq_diff_omp(f, g, pts, n, d)
                                           : mean_sq_diff_serial(f, g, pts, n, d);
}

NetPlan make_plan(const ReluNetwork& net) {
    NetPlan plan;
    plan.input_dim = net.input_dim();
    plan.output_dim = net.output_dim();
    plan.max_width = *std::max_element(net.widths().begin(), net.widths().end());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Layer& lay = net.layer(l);
        NetPlan::CsrLayer c;
        c.rows = lay.w.rows();
        c.row_ptr.push_back(0);
        for (std::size_t i = 0; i < lay.w.rows(); ++i) {
            for (std::size_t j = 0; j < lay.w.cols(); ++j) {
                const double w = lay.w(i, j);
                if (w != 0.0) {
                    c.col.push_back(j);
                    c.w.push_back(w);
                }
            }
            c.row_ptr.push_back(c.col.size());
        }
        c.v = lay.v;
        plan.layers.push_back(std::move(c));
    }
    return plan;
}

void plan_eval(const NetPlan& plan, const double* x, double* out, double* a, double* b) {
    std::copy(x, x + plan.input_dim, a);
    double* cur = a;
    double* nxt = b;
    for (std::size_t l = 0; l < plan.layers.size(); ++l) {
        const auto& lay = plan.layers[l];
        const bool last = (l + 1 == plan.layers.size());
        double* dst = last ? out : nxt;
        for (std::size_t i = 0; i < lay.rows; ++i) {
            double acc = 0.0;
            for (std::size_t p = lay.row_ptr[i]; p < lay.row_ptr[i + 1]; ++p)
                acc += lay.w[p] * cur[lay.col[p]];
            if (!last) {
                acc -= lay.v[i];
                if (acc < 0.0) acc = 0.0;
            }
            dst[i] = acc;
        }
        if (!last) std::swap(cur, nxt);
    }
}

void batch_eval_serial(const NetPlan& plan, const double* pts, std::size_t n, double* out) {
    std::vector<double> a(plan.max_width), b(plan.max_width);
    for (std::size_t i = 0; i < n; ++i)
        plan_eval(plan, pts + i * plan.input_dim, out + i * plan.output_dim, a.data(), b.data());
}

void batch_eval_omp(const NetPlan& plan, const double* pts, std::size_t n, double* out) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < n; ++i) {
        thread_local std::vector<double> a, b;
        if (a.size() < plan.max_width) a.resize(plan.max_width);
        if (b.size() < plan.max_width) b.resize(plan.max_width);
        plan_eval(plan, pts + i * plan.input_dim, out + i * plan.output_dim, a.data(), b.data());
    }
}

void batch_eval(const NetPlan& plan, const double* pts, std::size_t n, double* out, Exec exec) {
    if (resolve(exec) == Exec::parallel)
        batch_eval_omp(plan, pts, n, out);
    else
        batch_eval_serial(plan, pts, n, out);
}

void fill_rows_serial(Matrix& m, const RowFiller& filler) {
    for (std::size_t i = 0; i < m.rows(); ++i) filler(i, m.row(i));
}

void fill_rows_omp(Matrix& m, const RowFiller& filler) {
    const std::size_t rows = m.rows();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < rows; ++i) filler(i, m.row(i));
}

void fill_rows(Matrix& m, const RowFiller& filler, Exec exec) {
    if (resolve(exec) == Exec::parallel)
        fill_rows_omp(m, filler);
    else
        fill_rows_serial(m, filler);
}

PointFn as_point_fn(const NetPlan& plan) {
    auto shared = std::make_shared<NetPlan>(plan);
    if (shared->output_dim != 1)
        throw std::invalid_argument("as_point_fn: network output is not scalar");
    return [shared](const double* x) {
        thread_local std::vector<double> a, b;
        if (a.size() < shared->max_width) a.resize(shared->max_width);
        if (b.size() < shared->max_width) b.resize(shared->max_width);
        double out = 0.0;
        plan_eval(*shared, x, &out, a.data(), b.data());
        return out;
    };
}

PointFn as_point_fn(const ReluNetwork& net) { return as_point_fn(make_plan(net)); }

} // namespace splinet::kernels
