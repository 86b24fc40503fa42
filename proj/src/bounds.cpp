#include "splinet/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "splinet/compiler.hpp"
#include "splinet/dataset.hpp"
#include "splinet/faber_schauder.hpp"
#include "splinet/mars.hpp"

namespace splinet {

double best_pwl_error_x2(std::size_t pieces) {
    if (pieces == 0) throw std::invalid_argument("best_pwl_error_x2: need at least one piece");
    const double k = static_cast<double>(pieces);
    return 1.0 / (8.0 * k * k);
}

double sup_error(const kernels::PointFn& f, const kernels::PointFn& g, std::size_t d,
                 std::size_t resolution, const std::vector<std::vector<double>>& extra_points) {
    if (resolution < 2) throw std::invalid_argument("sup_error: resolution must be >= 2");
    kernels::Grid grid = kernels::uniform_grid(d, resolution);
    for (const auto& p : extra_points)
        if (p.size() != d) throw std::invalid_argument("sup_error: extra point dimension mismatch");
    grid.extras = extra_points;
    return kernels::max_abs_diff(f, g, grid);
}

ReluNetwork squaring_net(int accuracy) {
    NetBuilder dup(1);
    Matrix w(2, 1);
    w(0, 0) = 1.0;
    w(1, 0) = 1.0;
    return compose(dup.finish(std::move(w)), build_mult(2, accuracy));
}

namespace {

std::size_t mars_terms_for(double epsilon, bool& clamped) {
    const double raw = std::floor(1.0 / (6.0 * std::sqrt(epsilon)));
    clamped = raw < 1.0;
    return clamped ? 1 : static_cast<std::size_t>(raw);
}

int fs_resolution_for(double epsilon, bool& clamped) {
    // Largest M >= 0 whose piece-count bound 2^-(2M+7) still dominates eps.
    int m = static_cast<int>(std::floor((std::log2(1.0 / epsilon) - 7.0) / 2.0));
    clamped = m < 0;
    if (m < 0) m = 0;
    while (m > 0 && std::ldexp(1.0, -(2 * m + 7)) < epsilon) --m;
    while (std::ldexp(1.0, -(2 * (m + 1) + 7)) >= epsilon) ++m;
    return m;
}

int squaring_accuracy_for(double epsilon) {
    int n = std::max(1, static_cast<int>(std::ceil(std::log2(9.0 / epsilon))));
    while (9.0 * std::ldexp(1.0, -n) > epsilon) ++n;
    while (n > 1 && 9.0 * std::ldexp(1.0, -(n - 1)) <= epsilon) --n;
    return n;
}

double measure_squaring_net(const ReluNetwork& net, std::size_t grid_resolution, int accuracy) {
    kernels::Grid grid = kernels::uniform_grid(1, std::max<std::size_t>(grid_resolution, 2));
    // Breakpoints of the sawtooth stages sit on dyadics of pitch 2^-(m+1).
    const int m = std::min((accuracy + 3) / 2 + 1, 12);
    std::vector<double> dyadics;
    const std::size_t cnt = (static_cast<std::size_t>(1) << m) + 1;
    for (std::size_t k = 0; k < cnt; ++k)
        dyadics.push_back(static_cast<double>(k) * std::ldexp(1.0, -m));
    kernels::merge_axis_values(grid, 0, dyadics);
    return kernels::max_abs_diff(kernels::as_point_fn(net),
                                 [](const double* x) { return x[0] * x[0]; }, grid);
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::vector<BoundReport> verify_x2_bounds(double epsilon, std::size_t grid_resolution) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw std::invalid_argument("verify_x2_bounds: epsilon must lie in (0,1)");
    std::vector<BoundReport> out;

    {
        bool clamped = false;
        const std::size_t m = mars_terms_for(epsilon, clamped);
        BoundReport r;
        r.target = "x^2";
        r.family = "mars";
        r.size = "M=" + std::to_string(m);
        r.theoretical = best_pwl_error_x2(m + 1);
        r.measured = r.theoretical;
        r.method = "closed_form";
        r.lower_bound = true;
        r.note = "M terms give at most M+1 linear pieces; best piecewise error 1/(8(M+1)^2)";
        if (clamped) r.note += "; M clamped to 1";
        out.push_back(std::move(r));
    }
    {
        bool clamped = false;
        const int m = fs_resolution_for(epsilon, clamped);
        BoundReport r;
        r.target = "x^2";
        r.family = "fs";
        r.size = "M=" + std::to_string(m);
        r.theoretical = std::ldexp(1.0, -(2 * m + 7));
        r.measured = r.theoretical;
        r.method = "closed_form";
        r.lower_bound = true;
        r.note = "resolution M gives at most 2^(M+2) linear pieces, hence error >= "
                 "1/(8*4^(M+2)); the threshold form 2^(M+5) >= 1/sqrt(eps) is "
                 "direction-ambiguous and is replaced by direct piece counting";
        if (clamped) r.note += "; M clamped to 0, bound falls below eps";
        out.push_back(std::move(r));
    }
    {
        const int n = squaring_accuracy_for(epsilon);
        ReluNetwork net = squaring_net(n);
        BoundReport r;
        r.target = "x^2";
        r.family = "dnn";
        r.size = "N=" + std::to_string(n) + ",s=" + std::to_string(net.sparsity()) +
                 ",L=" + std::to_string(net.depth());
        r.theoretical = epsilon;
        r.measured = measure_squaring_net(net, grid_resolution, n);
        r.method = "grid_search";
        r.lower_bound = false;
        r.note = "product network fed (x,x); construction bound 9*2^-N = " +
                 fmt(9.0 * std::ldexp(1.0, -n));
        out.push_back(std::move(r));
    }
    {
        BoundReport r;
        r.target = "x^2";
        r.family = "dnn";
        r.size = "any (L,s)";
        r.theoretical = 0.0;
        r.measured = 0.0;
        r.method = "not_checked";
        r.lower_bound = true;
        r.note = "network lower bound not certified: its depth-dependent constant is "
                 "unspecified, so there is no numeric threshold to verify";
        out.push_back(std::move(r));
    }
    return out;
}

SandwichReport x2_sandwich(double epsilon, std::size_t grid_resolution) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw std::invalid_argument("x2_sandwich: epsilon must lie in (0,1)");
    SandwichReport rep;
    rep.epsilon = epsilon;
    bool clamped = false;
    rep.mars_terms = mars_terms_for(epsilon, clamped);
    rep.mars_params = 2 * rep.mars_terms + 1;
    rep.mars_bound = best_pwl_error_x2(rep.mars_terms + 1);
    rep.accuracy = squaring_accuracy_for(epsilon);
    ReluNetwork net = squaring_net(rep.accuracy);
    rep.net_sparsity = net.sparsity();
    rep.net_error = measure_squaring_net(net, grid_resolution, rep.accuracy);
    rep.ratio = rep.net_error > 0.0 ? rep.mars_bound / rep.net_error : HUGE_VAL;
    return rep;
}

namespace {

Dataset hinge_grid_data(std::size_t per_axis) {
    if (per_axis < 2) throw std::invalid_argument("verify_hinge_bounds: need >= 2 samples per axis");
    Dataset ds;
    ds.d = 2;
    ds.n = per_axis * per_axis;
    ds.x.resize(ds.n * 2);
    ds.y.resize(ds.n);
    const double step = 1.0 / static_cast<double>(per_axis - 1);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < per_axis; ++i) {
        for (std::size_t j = 0; j < per_axis; ++j, ++idx) {
            const double x1 = static_cast<double>(i) * step;
            const double x2 = static_cast<double>(j) * step;
            ds.x[2 * idx] = x1;
            ds.x[2 * idx + 1] = x2;
            const double z = (x1 + x2) - 1.0;
            ds.y[idx] = z > 0.0 ? z : 0.0;
        }
    }
    return ds;
}

double hinge_ref(const double* x) {
    const double z = (x[0] + x[1]) - 1.0;
    return z > 0.0 ? z : 0.0;
}

// Exact sup grid for axis-kinked splines vs the diagonal hinge: every cell
// vertex of the kink arrangement (axis lines, their diagonal reflections,
// the boundary) lands on the product grid.
kernels::Grid hinge_witness_grid(std::size_t resolution, const std::vector<double>& knots1,
                                 const std::vector<double>& knots2) {
    kernels::Grid grid = kernels::uniform_grid(2, std::max<std::size_t>(resolution, 2));
    std::vector<double> a1{0.0, 1.0}, a2{0.0, 1.0};
    for (double t : knots1) {
        a1.push_back(t);
        a2.push_back(1.0 - t);
    }
    for (double t : knots2) {
        a2.push_back(t);
        a1.push_back(1.0 - t);
    }
    kernels::merge_axis_values(grid, 0, a1);
    kernels::merge_axis_values(grid, 1, a2);
    return grid;
}

} // namespace

HingeBounds verify_hinge_bounds(const HingeFitBudget& budget) {
    HingeBounds out;
    const Dataset data = hinge_grid_data(budget.samples_per_axis);

    {
        MarsFitOptions opt;
        opt.iterations = std::max<std::size_t>(budget.mars_terms / 2, 1);
        const MarsFit fit = forward_selection(data, opt);
        std::vector<double> k1, k2;
        for (const MarsTerm& t : fit.model.terms)
            for (std::size_t f = 0; f < t.coords.size(); ++f)
                (t.coords[f] == 0 ? k1 : k2).push_back(t.knots[f]);
        kernels::Grid grid = hinge_witness_grid(budget.grid_resolution, k1, k2);
        const MarsModel& model = fit.model;
        const double measured = kernels::max_abs_diff(
            [&model](const double* x) { return eval_model(model, x); }, hinge_ref, grid);

        out.mars.target = "hinge2d";
        out.mars.family = "mars";
        out.mars.size = "M=" + std::to_string(budget.mars_terms);
        out.mars.theoretical = 1.0 / (8.0 * static_cast<double>(budget.mars_terms + 1));
        out.mars.measured = measured;
        out.mars.method = "fit";
        out.mars.lower_bound = true;
        out.mars.note = "forward selection kept " + std::to_string(model.terms.size()) +
                        " terms on " + std::to_string(data.n) + " noiseless samples";
    }

    {
        const FsFit fit = fit_least_squares(data, budget.fs_resolution, 0.0);
        const int m = budget.fs_resolution;
        std::vector<double> dy;
        const std::size_t cnt = (static_cast<std::size_t>(1) << (m + 1)) + 1;
        for (std::size_t k = 0; k < cnt; ++k)
            dy.push_back(static_cast<double>(k) * std::ldexp(1.0, -(m + 1)));
        kernels::Grid grid = hinge_witness_grid(budget.grid_resolution, dy, dy);
        const FsModel& model = fit.model;
        const double measured = kernels::max_abs_diff(
            [&model](const double* x) { return eval_fs(model, x); }, hinge_ref, grid);

        const double axis_true = 1.0 + std::ldexp(1.0, m + 1);
        const double axis_disp = 1.0 + std::ldexp(1.0, m);
        const double i_true = axis_true * axis_true;
        const double i_disp = axis_disp * axis_disp;
        out.fs.target = "hinge2d";
        out.fs.family = "fs";
        out.fs.size = "M=" + std::to_string(m) + ",I=" + fmt(i_true);
        out.fs.theoretical = 1.0 / (8.0 * i_true);
        out.fs.measured = measured;
        out.fs.method = "fit";
        out.fs.lower_bound = true;
        out.fs.note = "I uses the full index-set cardinality (1+2^(M+1))^2 = " + fmt(i_true) +
                      "; the per-level display convention gives (1+2^M)^2 = " + fmt(i_disp);
    }

    {
        NetBuilder nb(2);
        Matrix w(1, 2);
        w(0, 0) = 1.0;
        w(0, 1) = 1.0;
        nb.add_hidden(std::move(w), std::vector<double>{1.0});
        Matrix wout(1, 1);
        wout(0, 0) = 1.0;
        ReluNetwork net = nb.finish(std::move(wout));

        kernels::Grid grid = hinge_witness_grid(budget.grid_resolution, {0.5}, {0.5});
        const double measured = kernels::max_abs_diff(kernels::as_point_fn(net), hinge_ref, grid);
        out.exact_net.target = "hinge2d";
        out.exact_net.family = "dnn";
        out.exact_net.size = "L=1,p=(2,1,1),params=" + std::to_string(net.sparsity());
        out.exact_net.theoretical = 0.0;
        out.exact_net.measured = measured;
        out.exact_net.method = "grid_search";
        out.exact_net.lower_bound = false;
        out.exact_net.note = "one hidden unit represents the hinge exactly";
    }
    return out;
}

namespace {

nlohmann::json report_json(const BoundReport& r) {
    nlohmann::json j;
    j["target"] = r.target;
    j["family"] = r.family;
    j["size"] = r.size;
    j["theoretical"] = r.theoretical;
    j["measured"] = r.measured;
    j["method"] = r.method;
    j["bound_kind"] = r.lower_bound ? "lower" : "upper";
    j["holds"] = r.holds();
    j["note"] = r.note;
    return j;
}

} // namespace

std::string bound_reports_to_json(const std::vector<BoundReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const BoundReport& r : reports) arr.push_back(report_json(r));
    return arr.dump(2);
}

std::string sandwich_to_json(const SandwichReport& r) {
    nlohmann::json j;
    j["epsilon"] = r.epsilon;
    j["N"] = r.accuracy;
    j["net_error"] = r.net_error;
    j["net_sparsity"] = r.net_sparsity;
    j["mars_terms"] = r.mars_terms;
    j["mars_params"] = r.mars_params;
    j["mars_bound"] = r.mars_bound;
    j["ratio"] = r.ratio;
    return j.dump(2);
}

} // namespace splinet
