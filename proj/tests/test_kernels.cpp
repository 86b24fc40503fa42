#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "splinet/kernels.hpp"
#include "splinet/relu_net.hpp"
#include "splinet/rng.hpp"

using namespace splinet;
using namespace splinet::kernels;

namespace {

ReluNetwork random_net(const std::vector<std::size_t>& widths, std::uint64_t seed,
                       double zero_fraction = 0.0) {
    Rng rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer lay;
        lay.w = Matrix(widths[l + 1], widths[l]);
        for (std::size_t i = 0; i < lay.w.rows(); ++i)
            for (std::size_t j = 0; j < lay.w.cols(); ++j)
                lay.w(i, j) = rng.uniform() < zero_fraction ? 0.0 : rng.uniform(-1.0, 1.0);
        if (l + 2 < widths.size()) {
            lay.v.resize(widths[l + 1]);
            for (double& v : lay.v) v = rng.uniform(-0.5, 0.5);
        }
        layers.push_back(std::move(lay));
    }
    return ReluNetwork(widths, std::move(layers));
}

std::vector<double> random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> pts(n * d);
    for (double& p : pts) p = rng.uniform();
    return pts;
}

} // namespace

TEST_CASE("uniform_grid spans [0,1] inclusively") {
    Grid g = uniform_grid(2, 5);
    CHECK(g.d == 2);
    CHECK(g.cartesian_size() == 25);
    REQUIRE(g.axes.size() == 2);
    CHECK(g.axes[0] == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(g.axes[1] == g.axes[0]);
    CHECK_THROWS(uniform_grid(0, 5));
    CHECK_THROWS(uniform_grid(1, 1));
}

TEST_CASE("grid flat indexing varies axis 0 fastest and appends extras") {
    Grid g = uniform_grid(2, 3); // axes {0, 0.5, 1}
    g.extras.push_back({0.3, 0.7});
    double x[2];
    g.point(0, x);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 0.0);
    g.point(1, x);
    CHECK(x[0] == 0.5);
    CHECK(x[1] == 0.0);
    g.point(3, x);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 0.5);
    g.point(9, x); // first extra
    CHECK(x[0] == 0.3);
    CHECK(x[1] == 0.7);
}

TEST_CASE("merge_axis_values keeps axes sorted and unique") {
    Grid g = uniform_grid(1, 3);
    merge_axis_values(g, 0, {0.25, 0.5, 0.9, 0.25});
    CHECK(g.axes[0] == std::vector<double>{0.0, 0.25, 0.5, 0.9, 1.0});
}

TEST_CASE("max_abs_diff finds the sup on the grid") {
    PointFn f = [](const double* x) { return x[0] * x[0]; };
    PointFn g = [](const double* x) { return x[0]; };
    Grid grid = uniform_grid(1, 101); // includes 0.5 where |x^2 - x| peaks
    const double want = 0.25;
    CHECK(max_abs_diff_serial(f, g, grid) == want);
    CHECK(max_abs_diff_omp(f, g, grid) == want);
    CHECK(max_abs_diff(f, g, grid, Exec::serial) == want);
    CHECK(max_abs_diff(f, g, grid, Exec::automatic) == want);
}

TEST_CASE("max_abs_diff consults extras") {
    PointFn f = [](const double* x) { return x[0] >= 0.499 && x[0] <= 0.501 ? 1.0 : 0.0; };
    PointFn g = [](const double*) { return 0.0; };
    Grid grid = uniform_grid(1, 3); // {0, 0.5, 1} hits the spike already
    CHECK(max_abs_diff(f, g, grid) == 1.0);
    Grid coarse = uniform_grid(1, 2); // {0, 1} misses it
    CHECK(max_abs_diff(f, g, coarse) == 0.0);
    coarse.extras.push_back({0.5});
    CHECK(max_abs_diff(f, g, coarse) == 1.0);
}

TEST_CASE("mean_sq_diff matches a direct ordered sum") {
    PointFn f = [](const double* x) { return x[0] * x[0]; };
    PointFn g = [](const double*) { return 0.0; };
    std::vector<double> pts = {0.0, 0.5, 1.0};
    // Same accumulation order as the kernel: per-point squares, then one pass.
    double want = 0.0;
    for (double p : pts) want += (p * p) * (p * p);
    want /= 3.0;
    CHECK(mean_sq_diff_serial(f, g, pts.data(), 3, 1) == want);
    CHECK(mean_sq_diff_omp(f, g, pts.data(), 3, 1) == want);
    CHECK(mean_sq_diff(f, g, pts.data(), 3, 1) == want);
}

TEST_CASE("plan evaluation matches dense evaluation bitwise") {
    for (std::uint64_t s : {1u, 2u, 3u}) {
        ReluNetwork net = random_net({3, 7, 5, 2}, s, 0.4);
        NetPlan plan = make_plan(net);
        CHECK(plan.input_dim == 3);
        CHECK(plan.output_dim == 2);

        std::vector<double> pts = random_points(64, 3, 1000 + s);
        std::vector<double> scratch_a(plan.max_width), scratch_b(plan.max_width);
        std::vector<double> want(2), got(2);
        for (std::size_t i = 0; i < 64; ++i) {
            net.eval(pts.data() + 3 * i, want.data());
            plan_eval(plan, pts.data() + 3 * i, got.data(), scratch_a.data(), scratch_b.data());
            CHECK(got[0] == want[0]);
            CHECK(got[1] == want[1]);
        }
    }
}

TEST_CASE("plan drops structural zeros") {
    std::vector<Layer> layers(2);
    layers[0].w = Matrix(2, 2);
    layers[0].w(0, 0) = 1.0; // three of four entries zero
    layers[0].v = {0.0, 0.0};
    layers[1].w = Matrix(1, 2);
    layers[1].w(0, 0) = 1.0;
    ReluNetwork net({2, 2, 1}, std::move(layers));
    NetPlan plan = make_plan(net);
    CHECK(plan.layers[0].w.size() == 1);
    CHECK(plan.layers[1].w.size() == 1);
}

TEST_CASE("batch_eval serial and parallel agree bitwise") {
    ReluNetwork net = random_net({2, 9, 9, 1}, 5, 0.3);
    NetPlan plan = make_plan(net);
    const std::size_t n = 501;
    std::vector<double> pts = random_points(n, 2, 99);
    std::vector<double> a(n), b(n), c(n);
    batch_eval_serial(plan, pts.data(), n, a.data());
    batch_eval_omp(plan, pts.data(), n, b.data());
    batch_eval(plan, pts.data(), n, c.data());
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);
    CHECK(std::memcmp(a.data(), c.data(), n * sizeof(double)) == 0);

    // And both match the dense path.
    for (std::size_t i = 0; i < n; i += 37)
        CHECK(a[i] == net.eval1({pts[2 * i], pts[2 * i + 1]}));
}

#ifdef _OPENMP
TEST_CASE("results are independent of the thread count") {
    ReluNetwork net = random_net({2, 8, 8, 1}, 6, 0.2);
    NetPlan plan = make_plan(net);
    const std::size_t n = 1000;
    std::vector<double> pts = random_points(n, 2, 100);
    PointFn f = as_point_fn(plan);
    PointFn g = [](const double* x) { return x[0] - x[1]; };
    Grid grid = uniform_grid(2, 40);

    const int saved = omp_get_max_threads();
    std::vector<double> out1(n), out4(n);
    omp_set_num_threads(1);
    batch_eval_omp(plan, pts.data(), n, out1.data());
    const double sup1 = max_abs_diff_omp(f, g, grid);
    const double mse1 = mean_sq_diff_omp(f, g, pts.data(), n, 2);
    omp_set_num_threads(4);
    batch_eval_omp(plan, pts.data(), n, out4.data());
    const double sup4 = max_abs_diff_omp(f, g, grid);
    const double mse4 = mean_sq_diff_omp(f, g, pts.data(), n, 2);
    omp_set_num_threads(saved);

    CHECK(std::memcmp(out1.data(), out4.data(), n * sizeof(double)) == 0);
    CHECK(sup1 == sup4);
    CHECK(mse1 == mse4);
}
#endif

TEST_CASE("fill_rows writes every row once, any order") {
    auto filler = [](std::size_t row, double* out) {
        for (std::size_t j = 0; j < 4; ++j)
            out[j] = static_cast<double>(row) + static_cast<double>(j) / 10.0;
    };
    Matrix a(33, 4), b(33, 4);
    fill_rows_serial(a, filler);
    fill_rows_omp(b, filler);
    for (std::size_t i = 0; i < 33; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(a(i, j) == static_cast<double>(i) + static_cast<double>(j) / 10.0);
            CHECK(b(i, j) == a(i, j));
        }
}

TEST_CASE("as_point_fn adapters are consistent and thread-safe") {
    ReluNetwork net = random_net({2, 6, 1}, 8);
    NetPlan plan = make_plan(net);
    PointFn fn_net = as_point_fn(net);
    PointFn fn_plan = as_point_fn(plan);

    const std::size_t n = 256;
    std::vector<double> pts = random_points(n, 2, 123);
    std::vector<double> serial(n);
    for (std::size_t i = 0; i < n; ++i) serial[i] = fn_net(pts.data() + 2 * i);

    std::vector<double> par(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < n; ++i) par[i] = fn_plan(pts.data() + 2 * i);

    for (std::size_t i = 0; i < n; ++i) {
        CHECK(serial[i] == net.eval1({pts[2 * i], pts[2 * i + 1]}));
        CHECK(par[i] == serial[i]);
    }
}

TEST_CASE("openmp query matches the compile flags") {
#ifdef _OPENMP
    CHECK(openmp_enabled());
#else
    CHECK_FALSE(openmp_enabled());
#endif
}
