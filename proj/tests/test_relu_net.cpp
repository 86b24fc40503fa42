#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "splinet/relu_net.hpp"
#include "splinet/rng.hpp"

using namespace splinet;

namespace {

Matrix mat(std::size_t r, std::size_t c, std::initializer_list<double> vals) {
    Matrix m(r, c);
    std::size_t i = 0;
    for (double v : vals) {
        m(i / c, i % c) = v;
        ++i;
    }
    return m;
}

ReluNetwork random_net(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer lay;
        lay.w = Matrix(widths[l + 1], widths[l]);
        for (std::size_t i = 0; i < lay.w.rows(); ++i)
            for (std::size_t j = 0; j < lay.w.cols(); ++j) lay.w(i, j) = rng.uniform(-1.0, 1.0);
        if (l + 2 < widths.size()) {
            lay.v.resize(widths[l + 1]);
            for (double& v : lay.v) v = rng.uniform(-1.0, 1.0);
        }
        layers.push_back(std::move(lay));
    }
    return ReluNetwork(widths, std::move(layers));
}

// Forward pass written independently of ReluNetwork::eval, same accumulation
// order (ascending column index), so agreement must be bitwise.
std::vector<double> manual_eval(const ReluNetwork& net, const std::vector<double>& x) {
    std::vector<double> cur = x;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Layer& lay = net.layer(l);
        std::vector<double> next(lay.w.rows());
        for (std::size_t i = 0; i < lay.w.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < lay.w.cols(); ++j) acc += lay.w(i, j) * cur[j];
            next[i] = acc;
        }
        if (l + 1 < net.layer_count())
            for (std::size_t i = 0; i < next.size(); ++i)
                next[i] = std::max(next[i] - lay.v[i], 0.0);
        cur = std::move(next);
    }
    return cur;
}

} // namespace

TEST_CASE("hidden units compute max(w.x - v, 0)") {
    std::vector<Layer> layers(2);
    layers[0].w = mat(1, 1, {2.0});
    layers[0].v = {0.5};
    layers[1].w = mat(1, 1, {3.0});
    ReluNetwork net({1, 1, 1}, std::move(layers));

    CHECK(net.eval1({0.0}) == 0.0);
    CHECK(net.eval1({0.25}) == 0.0); // 2*0.25 - 0.5 = 0, clipped to 0
    CHECK(net.eval1({0.5}) == 1.5);
    CHECK(net.eval1({1.0}) == 4.5);
}

TEST_CASE("negative shift raises the preactivation") {
    std::vector<Layer> layers(2);
    layers[0].w = mat(1, 1, {2.0});
    layers[0].v = {-1.0};
    layers[1].w = mat(1, 1, {3.0});
    ReluNetwork net({1, 1, 1}, std::move(layers));

    CHECK(net.eval1({0.0}) == 3.0); // max(0 - (-1), 0) = 1
    CHECK(net.eval1({0.5}) == 6.0);
}

TEST_CASE("output layer must not carry a shift") {
    std::vector<Layer> layers(2);
    layers[0].w = mat(1, 1, {1.0});
    layers[0].v = {0.0};
    layers[1].w = mat(1, 1, {1.0});
    layers[1].v = {0.5};
    CHECK_THROWS_AS(ReluNetwork({1, 1, 1}, std::move(layers)), std::invalid_argument);
}

TEST_CASE("constructor validates dimensions") {
    std::vector<Layer> layers(2);
    layers[0].w = mat(2, 1, {1.0, 1.0});
    layers[0].v = {0.0, 0.0};
    layers[1].w = mat(1, 3, {1.0, 1.0, 1.0}); // wrong fan-in
    CHECK_THROWS_AS(ReluNetwork({1, 2, 1}, std::move(layers)), std::invalid_argument);

    std::vector<Layer> layers2(2);
    layers2[0].w = mat(2, 1, {1.0, 1.0});
    layers2[0].v = {0.0}; // shift length mismatch
    layers2[1].w = mat(1, 2, {1.0, 1.0});
    CHECK_THROWS_AS(ReluNetwork({1, 2, 1}, std::move(layers2)), std::invalid_argument);
}

TEST_CASE("eval agrees bitwise with a hand-rolled forward pass") {
    Rng rng(7);
    for (std::uint64_t s = 0; s < 6; ++s) {
        ReluNetwork net = random_net({3, 5, 4, 2}, 100 + s);
        for (int p = 0; p < 20; ++p) {
            std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                     rng.uniform(-2.0, 2.0)};
            std::vector<double> got = net.eval(x);
            std::vector<double> want = manual_eval(net, x);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
        }
    }
}

TEST_CASE("eval overloads agree") {
    ReluNetwork net = random_net({2, 6, 1}, 42);
    std::vector<double> x = {0.3, 0.8};
    std::vector<double> out(1);
    net.eval(x.data(), out.data());
    CHECK(out[0] == net.eval1(x));
    std::vector<double> a, b;
    net.eval(x.data(), out.data(), a, b);
    CHECK(out[0] == net.eval1(x));
}

TEST_CASE("sparsity counts nonzero weights and shifts") {
    std::vector<Layer> layers(2);
    layers[0].w = mat(2, 2, {1.0, 0.0, 0.5, 0.0});
    layers[0].v = {0.0, 0.25};
    layers[1].w = mat(1, 2, {0.0, 1.0});
    ReluNetwork net({2, 2, 1}, std::move(layers));
    CHECK(net.sparsity() == 4); // two weights + one shift + one output weight
    CHECK(net.max_abs_param() == 1.0);
}

TEST_CASE("compose matches outer-after-inner evaluation") {
    ReluNetwork inner = random_net({1, 3, 2}, 11);
    ReluNetwork outer = random_net({2, 4, 1}, 12);
    ReluNetwork both = compose(inner, outer);
    CHECK(both.depth() == inner.depth() + outer.depth());
    CHECK(both.widths() == std::vector<std::size_t>{1, 3, 4, 1});

    Rng rng(13);
    for (int p = 0; p < 50; ++p) {
        std::vector<double> x = {rng.uniform(-1.0, 1.0)};
        const double direct = outer.eval1(inner.eval(x));
        const double fused = both.eval1(x);
        CHECK(fused == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("compose with an affine outer keeps the inner depth") {
    ReluNetwork inner = random_net({1, 3, 2}, 21);
    std::vector<Layer> out_layers(1);
    out_layers[0].w = mat(1, 2, {0.5, -0.25});
    ReluNetwork outer({2, 1}, std::move(out_layers));
    ReluNetwork both = compose(inner, outer);
    CHECK(both.depth() == inner.depth());
    std::vector<double> x = {0.4};
    std::vector<double> mid = inner.eval(x);
    CHECK(both.eval1(x) == doctest::Approx(0.5 * mid[0] - 0.25 * mid[1]).epsilon(1e-14));
}

TEST_CASE("compose rejects interface mismatch") {
    ReluNetwork inner = random_net({1, 3, 2}, 31);
    ReluNetwork outer = random_net({3, 2, 1}, 32);
    CHECK_THROWS_AS(compose(inner, outer), std::invalid_argument);
}

TEST_CASE("pad_depth nonnegative mode is exact on nonnegative outputs") {
    // f(x) = max(x - 0.3, 0): output is a single ReLU channel, always >= 0.
    std::vector<Layer> layers(2);
    layers[0].w = mat(1, 1, {1.0});
    layers[0].v = {0.3};
    layers[1].w = mat(1, 1, {1.0});
    ReluNetwork net({1, 1, 1}, std::move(layers));

    ReluNetwork padded = pad_depth(net, 4, PadMode::nonnegative);
    CHECK(padded.depth() == 4);
    CHECK(padded.widths() == std::vector<std::size_t>{1, 1, 1, 1, 1, 1});
    for (double x : {0.0, 0.2, 0.3, 0.7, 1.0})
        CHECK(padded.eval1({x}) == net.eval1({x}));
}

TEST_CASE("pad_depth signed_pair mode is exact on signed outputs") {
    bool saw_negative = false;
    for (std::uint64_t seed = 41; seed < 61 && !saw_negative; ++seed) {
        ReluNetwork net = random_net({2, 4, 1}, seed);
        ReluNetwork padded = pad_depth(net, 5, PadMode::signed_pair);
        CHECK(padded.depth() == 5);
        Rng rng(42);
        for (int p = 0; p < 100; ++p) {
            std::vector<double> x = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            const double want = net.eval1(x);
            saw_negative = saw_negative || want < 0.0;
            CHECK(padded.eval1(x) == want);
        }
    }
    CHECK(saw_negative); // at least one scanned net exercises the signed path
}

TEST_CASE("pad_depth rejects shrinking and keeps equal depth unchanged") {
    ReluNetwork net = random_net({1, 2, 1}, 51);
    CHECK_THROWS_AS(pad_depth(net, 0, PadMode::nonnegative), std::invalid_argument);
    ReluNetwork same = pad_depth(net, net.depth(), PadMode::signed_pair);
    CHECK(same.widths() == net.widths());
    CHECK(same.eval1({0.77}) == net.eval1({0.77}));
}

TEST_CASE("parallel_join concatenates outputs and adds widths") {
    ReluNetwork a = random_net({2, 3, 1}, 61);
    ReluNetwork b = random_net({2, 5, 1}, 62);
    ReluNetwork joint = parallel_join({a, b}, false);
    CHECK(joint.widths() == std::vector<std::size_t>{2, 8, 2});
    Rng rng(63);
    for (int p = 0; p < 40; ++p) {
        std::vector<double> x = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        std::vector<double> out = joint.eval(x);
        CHECK(out[0] == a.eval1(x));
        CHECK(out[1] == b.eval1(x));
    }
}

TEST_CASE("parallel_join depth handling") {
    ReluNetwork a = random_net({1, 3, 1}, 71);       // depth 1
    ReluNetwork b = random_net({1, 2, 2, 1}, 72);    // depth 2
    CHECK_THROWS_AS(parallel_join({a, b}, false), std::invalid_argument);

    ReluNetwork joint = parallel_join({a, b}, true, PadMode::signed_pair);
    CHECK(joint.depth() == 2);
    for (double x : {0.0, 0.31, 0.8, 1.0}) {
        std::vector<double> out = joint.eval({x});
        CHECK(out[0] == a.eval1({x}));
        CHECK(out[1] == b.eval1({x}));
    }

    CHECK_THROWS_AS(parallel_join({}, true), std::invalid_argument);
    ReluNetwork c = random_net({2, 2, 1}, 73);
    CHECK_THROWS_AS(parallel_join({a, c}, true), std::invalid_argument); // input dims differ
}

TEST_CASE("json round-trip is bit-exact") {
    ReluNetwork net = random_net({2, 4, 3, 1}, 81);
    const std::string text = network_to_json(net);
    ReluNetwork back = network_from_json(text);
    REQUIRE(back.widths() == net.widths());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Layer& x = net.layer(l);
        const Layer& y = back.layer(l);
        REQUIRE(y.w.rows() == x.w.rows());
        REQUIRE(y.w.cols() == x.w.cols());
        for (std::size_t i = 0; i < x.w.rows(); ++i)
            for (std::size_t j = 0; j < x.w.cols(); ++j) CHECK(y.w(i, j) == x.w(i, j));
        REQUIRE(y.v == x.v);
    }

    // Output layer shift is serialized as null.
    nlohmann::json j = nlohmann::json::parse(text);
    CHECK(j.at("layers").back().at("v").is_null());
    CHECK(j.at("depth").get<std::size_t>() == net.depth());
}

TEST_CASE("json depth field is validated") {
    ReluNetwork net = random_net({1, 2, 1}, 91);
    nlohmann::json j = nlohmann::json::parse(network_to_json(net));
    j["depth"] = 5;
    CHECK_THROWS_AS(network_from_json(j.dump()), std::runtime_error);
}

TEST_CASE("file round-trip") {
    ReluNetwork net = random_net({1, 3, 1}, 92);
    const std::string path = "test_relu_net_tmp.json";
    save_network(net, path);
    ReluNetwork back = load_network(path);
    CHECK(back.eval1({0.123}) == net.eval1({0.123}));
    std::remove(path.c_str());
}

TEST_CASE("validate_class checks size, budget and sup bound") {
    std::vector<Layer> layers(2);
    layers[0].w = mat(1, 1, {1.0});
    layers[0].v = {0.5};
    layers[1].w = mat(1, 1, {1.0});
    ReluNetwork net({1, 1, 1}, std::move(layers)); // max(x-0.5, 0)

    Architecture arch;
    arch.depth = 1;
    arch.widths = {1, 1, 1};
    arch.sparsity_budget = 3;
    arch.sup_bound = 0.5;
    ClassReport rep = validate_class(net, arch, 101);
    CHECK(rep.ok());
    CHECK(rep.sup_on_grid == 0.5); // attained at x = 1
    CHECK(rep.sparsity == 3);
    CHECK(rep.max_abs_param == 1.0);

    arch.sparsity_budget = 2;
    CHECK_FALSE(validate_class(net, arch, 11).sparsity_ok);
    arch.sparsity_budget = 3;
    arch.sup_bound = 0.4;
    CHECK_FALSE(validate_class(net, arch, 101).sup_ok);
    arch.sup_bound = 0.5;
    arch.depth = 2;
    CHECK_FALSE(validate_class(net, arch, 11).depth_ok);

    arch.depth = 1;
    CHECK_THROWS_AS(validate_class(net, arch, 1), std::invalid_argument);
}
