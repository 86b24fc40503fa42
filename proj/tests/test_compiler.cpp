#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "splinet/compiler.hpp"
#include "splinet/kernels.hpp"
#include "splinet/rng.hpp"

using namespace splinet;

namespace {

MarsTerm term(std::vector<std::size_t> coords, std::vector<int> signs, std::vector<double> knots,
              double beta = 1.0) {
    MarsTerm t;
    t.beta = beta;
    t.coords = std::move(coords);
    t.signs = std::move(signs);
    t.knots = std::move(knots);
    return t;
}

// Dyadic grid of pitch 2^-levels per axis: hits the interpolation knots and
// their midpoints, so measured sup errors are the true grid suprema.
kernels::Grid dyadic_grid(std::size_t d, int levels) {
    kernels::Grid g;
    g.d = d;
    std::vector<double> ax;
    const std::size_t count = (static_cast<std::size_t>(1) << levels) + 1;
    for (std::size_t k = 0; k < count; ++k)
        ax.push_back(static_cast<double>(k) * std::ldexp(1.0, -levels));
    g.axes.assign(d, ax);
    return g;
}

double product_sup_error(const ReluNetwork& net, std::size_t r, const kernels::Grid& grid) {
    kernels::PointFn f = kernels::as_point_fn(net);
    kernels::PointFn p = [r](const double* x) {
        double prod = 1.0;
        for (std::size_t i = 0; i < r; ++i) prod *= x[i];
        return prod;
    };
    return kernels::max_abs_diff(f, p, grid);
}

} // namespace

TEST_CASE("product network meets its architecture contract") {
    const std::size_t r = 3;
    const int n = 8;
    ReluNetwork net = build_mult(r, n);

    const std::size_t hidden = (n + 5) * 2; // ceil(log2 3) = 2
    CHECK(net.depth() == hidden);
    REQUIRE(net.widths().size() == hidden + 2);
    CHECK(net.widths().front() == r);
    CHECK(net.widths().back() == 1);
    for (std::size_t l = 1; l + 1 < net.widths().size(); ++l) CHECK(net.widths()[l] == 6 * r);
    CHECK(net.sparsity() <= 42 * r * r * (1 + hidden));
    CHECK(net.max_abs_param() <= 1.0);
}

TEST_CASE("product network approximates the product") {
    const int n = 8;
    ReluNetwork net = build_mult(3, n);
    const double bound = 27.0 * std::ldexp(1.0, -n);

    kernels::Grid grid = dyadic_grid(3, 5);
    Rng rng(7);
    for (int i = 0; i < 500; ++i)
        grid.extras.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    CHECK(product_sup_error(net, 3, grid) <= bound);
}

TEST_CASE("product accuracy improves monotonically with N") {
    kernels::Grid grid = dyadic_grid(2, 9);
    double prev = HUGE_VAL;
    for (int n : {6, 8, 10, 12}) {
        ReluNetwork net = build_mult(2, n);
        const double err = product_sup_error(net, 2, grid);
        CHECK(err <= 9.0 * std::ldexp(1.0, -n));
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("product outputs stay in the unit interval") {
    ReluNetwork net = build_mult(2, 6);
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        double x[2] = {rng.uniform(), rng.uniform()};
        const double y = net.eval1({x[0], x[1]});
        CHECK(y >= 0.0);
        CHECK(y <= 1.0);
    }
    for (double a : {0.0, 1.0})
        for (double b : {0.0, 1.0}) {
            const double y = net.eval1({a, b});
            CHECK(y >= 0.0);
            CHECK(y <= 1.0);
        }
}

TEST_CASE("product network rejects bad sizes") {
    CHECK_THROWS_AS(build_mult(1, 8), std::invalid_argument);
    CHECK_THROWS_AS(build_mult(4, 0), std::invalid_argument);
}

TEST_CASE("constant multiplier is exact for nonnegative inputs") {
    for (double c : {5.0, 8.0, 2.0, 11.3}) {
        ReluNetwork net = build_const_mult(c);
        const int q = static_cast<int>(std::ceil(std::log2(c)));
        CHECK(net.depth() == static_cast<std::size_t>(2 * q - 1));
        CHECK(net.max_abs_param() <= 1.0);
        CHECK(net.sparsity() <= static_cast<std::size_t>(4 * q));

        // Doublings are exact and the single scale multiply rounds once, so
        // the network reproduces c*x to the bit.
        Rng rng(13);
        for (int i = 0; i < 100; ++i) {
            const double x = rng.uniform(0.0, 1.0);
            CHECK(net.eval1({x}) == c * x);
        }
        CHECK(net.eval1({0.0}) == 0.0);
    }
    // The worked example: 5 * 0.1 == 0.5 exactly in double arithmetic.
    CHECK(build_const_mult(5.0).eval1({0.1}) == 0.5);

    // At or below 1 the fragment degrades to the bare identity; callers fold
    // the remaining <= 1 scale into their own output weights.
    for (double c : {1.0, 0.7}) {
        ReluNetwork net = build_const_mult(c);
        CHECK(net.depth() == 0);
        CHECK(net.eval1({0.37}) == 0.37);
    }
}

TEST_CASE("one-dimensional basis networks are exact") {
    for (int sign : {1, -1}) {
        for (double knot : {0.0, 0.3, 1.0}) {
            MarsTerm t = term({0}, {sign}, {knot});
            ReluNetwork net = compile_basis(t, 1, 4);
            CHECK(net.depth() == 1);
            Rng rng(17);
            for (int i = 0; i < 200; ++i) {
                const double x = rng.uniform();
                CHECK(net.eval1({x}) == eval_basis(t, &x));
            }
        }
    }
}

TEST_CASE("multivariate basis networks meet the error bound") {
    const int n = 8;
    MarsTerm t2 = term({0, 1}, {1, -1}, {0.25, 0.75});
    ReluNetwork net2 = compile_basis(t2, 2, n);
    CHECK(net2.depth() == 1 + (n + 5));
    kernels::PointFn f2 = kernels::as_point_fn(net2);
    kernels::PointFn g2 = [&t2](const double* x) { return eval_basis(t2, x); };
    kernels::Grid grid2 = dyadic_grid(2, 7);
    kernels::merge_axis_values(grid2, 0, {0.25});
    kernels::merge_axis_values(grid2, 1, {0.75});
    CHECK(kernels::max_abs_diff(f2, g2, grid2) <= 9.0 * std::ldexp(1.0, -n));

    // Unused coordinates ride the constant channel.
    MarsTerm t3 = term({0, 2}, {1, 1}, {0.5, 0.125});
    ReluNetwork net3 = compile_basis(t3, 3, n);
    kernels::PointFn f3 = kernels::as_point_fn(net3);
    kernels::PointFn g3 = [&t3](const double* x) { return eval_basis(t3, x); };
    kernels::Grid grid3 = dyadic_grid(3, 4);
    Rng rng(19);
    for (int i = 0; i < 300; ++i)
        grid3.extras.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    CHECK(kernels::max_abs_diff(f3, g3, grid3) <= 27.0 * std::ldexp(1.0, -n));
}

TEST_CASE("basis compilation validates terms") {
    CHECK_THROWS_AS(compile_basis(term({0}, {1}, {0.5}, 1.0), 0, 4), std::invalid_argument);
    MarsTerm deg2 = term({0}, {1}, {0.5});
    deg2.degree = 2;
    CHECK_THROWS_AS(compile_basis(deg2, 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(compile_basis(term({0, 0}, {1, 1}, {0.2, 0.4}), 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(compile_basis(term({0}, {2}, {0.5}), 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(compile_basis(term({0}, {1}, {1.5}), 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(compile_basis(term({0}, {1}, {-0.1}), 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(compile_basis(term({2}, {1}, {0.5}), 2, 4), std::invalid_argument);
}

TEST_CASE("compiled model hits the worked size example") {
    // d = 2, M = 1, C = 1: picking epsilon in [18/1024, 18/512) forces N = 10,
    // whence depth (10+5)*1 + 0 + 3 = 18 and sparsity bound
    // 1*42*4*(15+2) + 2 + 1*(0+2) = 2860.
    MarsModel m;
    m.d = 2;
    m.intercept = 0.25;
    m.coef_bound = 1.0;
    MarsTerm t = term({0, 1}, {1, 1}, {0.5, 0.25}, 0.75);
    m.terms.push_back(t);

    CompiledNet built = compile_mars(m, 0.02);
    const CompileCertificate& cert = built.certificate;
    CHECK(cert.accuracy == 10);
    CHECK(cert.error_bound == 18.0 * std::ldexp(1.0, -10));
    CHECK(cert.predicted_depth == 18);
    CHECK(cert.predicted_sparsity == 2860);
    CHECK(cert.predicted_width_bound == 12);
    CHECK(built.net.depth() == 18);
    CHECK(built.net.sparsity() <= 2860);
    CHECK(built.net.max_abs_param() <= 1.0);

    CompileCertificate verified = verify_certificate(built.net, cert, m, 200);
    CHECK(verified.pass());
    CHECK(verified.measured_sup_error <= 0.02);
}

TEST_CASE("compiled model with several terms verifies at a tight epsilon") {
    Rng rng(23);
    MarsModel m;
    m.d = 2;
    m.intercept = rng.uniform(-2.0, 2.0);
    m.coef_bound = 4.0;
    m.terms.push_back(term({0, 1}, {1, -1}, {rng.uniform(), rng.uniform()}, 3.2));
    m.terms.push_back(term({0}, {-1}, {rng.uniform()}, -2.5));
    m.terms.push_back(term({1}, {1}, {rng.uniform()}, 1.7));
    m.terms.push_back(term({0, 1}, {-1, -1}, {rng.uniform(), rng.uniform()}, -3.9));
    m.terms.push_back(term({1}, {-1}, {rng.uniform()}, 0.4));

    CompiledNet built = compile_mars(m, 1e-3);
    // C = 4: two doubling stages feed the output layer.
    CHECK(built.certificate.predicted_depth ==
          static_cast<std::size_t>(built.certificate.accuracy + 5) + 2 * 2 + 3);
    CompileCertificate verified = verify_certificate(built.net, built.certificate, m, 300);
    CHECK(verified.pass());
    CHECK(verified.measured_sup_error <= 1e-3);
    CHECK(verified.grid_points > 90000);
}

TEST_CASE("one-dimensional compilation is exact up to rounding") {
    MarsModel m;
    m.d = 1;
    m.intercept = -0.4;
    m.coef_bound = 2.0;
    m.terms.push_back(term({0}, {1}, {0.3}, 1.5));
    m.terms.push_back(term({0}, {-1}, {0.7}, -2.0));

    CompiledNet built = compile_mars(m, 1e-2);
    kernels::PointFn f = kernels::as_point_fn(built.net);
    kernels::PointFn g = [&m](const double* x) { return eval_model(m, x); };
    kernels::Grid grid = kernels::uniform_grid(1, 5000);
    kernels::merge_axis_values(grid, 0, {0.3, 0.7});
    CHECK(kernels::max_abs_diff(f, g, grid) <= 1e-12);
}

TEST_CASE("constant models compile exactly") {
    MarsModel m;
    m.d = 2;
    m.intercept = 0.3;
    CompiledNet built = compile_mars(m, 0.5);
    CHECK(built.certificate.error_bound == 0.0);
    CHECK(built.certificate.terms == 0);
    Rng rng(29);
    for (int i = 0; i < 50; ++i) {
        double x[2] = {rng.uniform(), rng.uniform()};
        CHECK(built.net.eval1({x[0], x[1]}) == 0.3);
    }
    CHECK(verify_certificate(built.net, built.certificate, m, 50).pass());

    // Intercepts above one pass through a doubling chain and stay exact.
    m.intercept = -5.25;
    m.coef_bound = 6.0;
    CompiledNet big = compile_mars(m, 0.5);
    CHECK(big.net.eval1({0.1, 0.9}) == -5.25);
}

TEST_CASE("compilation validates its inputs") {
    MarsModel m;
    m.d = 2;
    m.terms.push_back(term({0, 1}, {1, 1}, {0.5, 0.5}, 0.5));

    CHECK_THROWS_AS(compile_mars(m, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(compile_mars(m, -1e-3), std::invalid_argument);
    CHECK_THROWS_AS(compile_mars(m, 1.5), std::invalid_argument);

    MarsModel loud = m;
    loud.coef_bound = 1.0;
    loud.terms[0].beta = 2.0;
    CHECK_THROWS_AS(compile_mars(loud, 0.5), std::invalid_argument);

    MarsModel rep = m;
    rep.terms[0] = term({1, 1}, {1, 1}, {0.2, 0.6}, 0.5);
    CHECK_THROWS_AS(compile_mars(rep, 0.5), std::invalid_argument);

    MarsModel far = m;
    far.terms[0].knots[0] = 1.5;
    CHECK_THROWS_AS(compile_mars(far, 0.5), std::invalid_argument);

    MarsModel deg = m;
    deg.terms[0].degree = 2;
    CHECK_THROWS_AS(compile_mars(deg, 0.5), std::invalid_argument);
}

TEST_CASE("faber-schauder models compile through the hinge rewrite") {
    FsModel fs;
    fs.d = 1;
    fs.resolution = 1;
    FsIndex w10;
    w10.tag = 1;
    w10.k = 0;
    fs.coeffs.emplace_back(FsKey{w10}, 0.8);
    FsIndex ramp;
    ramp.tag = -1;
    fs.coeffs.emplace_back(FsKey{ramp}, -0.5);
    std::sort(fs.coeffs.begin(), fs.coeffs.end(),
              [](const auto& a, const auto& b) { return a.first[0].rank() < b.first[0].rank(); });

    CompiledNet built = compile_fs(fs, 1e-3);
    CHECK(built.certificate.from_fs);
    CHECK(built.certificate.fs_resolution == 1);
    CHECK(built.certificate.fs_keys_displayed == 3);  // (1 + 2^1)^1
    CHECK(built.certificate.fs_keys_true == 5);       // (1 + 2^2)^1
    CHECK(built.certificate.fs_coef_inflation == std::exp2(0.5 * 3.0));
    CHECK(built.certificate.fs_coef_bound == 1.0);    // max(1, 0.8)
    CHECK(built.certificate.coef_bound == std::exp2(0.5 * 3.0));

    CompileCertificate verified = verify_certificate(built.net, built.certificate, fs, 2000);
    CHECK(verified.pass());
    CHECK(verified.measured_sup_error <= 1e-3);

    FsModel empty;
    empty.d = 1;
    empty.resolution = 0;
    CompiledNet zero = compile_fs(empty, 0.5);
    CHECK(zero.net.eval1({0.4}) == 0.0);
}

TEST_CASE("certificate json round-trips losslessly") {
    MarsModel m;
    m.d = 2;
    m.intercept = 0.1;
    m.coef_bound = 3.0;
    m.terms.push_back(term({0, 1}, {1, -1}, {1.0 / 3.0, 0.77}, 2.9));
    CompiledNet built = compile_mars(m, 1e-2);
    CompileCertificate cert = verify_certificate(built.net, built.certificate, m, 60);

    const std::string text = certificate_to_json(cert);
    CompileCertificate back = certificate_from_json(text);
    CHECK(certificate_to_json(back) == text);
    CHECK(back.pass() == cert.pass());
    CHECK(back.measured_sup_error == cert.measured_sup_error);
    CHECK(back.epsilon == cert.epsilon);

    const std::string path = "test_compiler_cert_tmp.json";
    save_certificate(cert, path);
    CompileCertificate loaded = load_certificate(path);
    CHECK(certificate_to_json(loaded) == text);
    std::remove(path.c_str());
}

TEST_CASE("verification rejects a wrong network or claim") {
    MarsModel m;
    m.d = 1;
    m.intercept = 0.0;
    m.terms.push_back(term({0}, {1}, {0.5}, 1.0));
    CompiledNet built = compile_mars(m, 1e-2);

    MarsModel other = m;
    other.terms[0].beta = 0.5; // model the net was not compiled from
    CompileCertificate wrong = verify_certificate(built.net, built.certificate, other, 500);
    CHECK_FALSE(wrong.sup_ok);
    CHECK_FALSE(wrong.pass());

    CompileCertificate inflated = built.certificate;
    inflated.predicted_depth += 1;
    CompileCertificate mismatch = verify_certificate(built.net, inflated, m, 50);
    CHECK_FALSE(mismatch.depth_ok);
    CHECK_FALSE(mismatch.pass());
}
