#include "splinet/compiler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "splinet/kernels.hpp"

namespace splinet {

namespace {

int ceil_log2_count(std::size_t x) {
    int l = 0;
    std::size_t p = 1;
    while (p < x) {
        p <<= 1;
        ++l;
    }
    return l;
}

// Smallest q >= 0 with 2^q >= c.
int ceil_log2_scale(double c) {
    int q = 0;
    while (std::ldexp(1.0, q) < c) ++q;
    return q;
}

// ---- sparse layer sketches --------------------------------------------------

using Combo = std::vector<std::pair<std::size_t, double>>; // value = sum w * unit

struct Row {
    Combo w;
    double v = 0.0;
};

void append_scaled(Row& row, const Combo& c, double s) {
    for (const auto& e : c) row.w.emplace_back(e.first, s * e.second);
}

class SketchLayer {
public:
    std::size_t add(Row row) {
        rows_.push_back(std::move(row));
        return rows_.size() - 1;
    }
    std::size_t size() const { return rows_.size(); }

    // Materialize with zero-row padding up to padded_rows units.
    void emit(NetBuilder& nb, std::size_t padded_rows) const {
        Matrix w(padded_rows, nb.width());
        std::vector<double> v(padded_rows, 0.0);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            for (const auto& e : rows_[i].w) w(i, e.first) += e.second;
            v[i] = rows_[i].v;
        }
        nb.add_hidden(std::move(w), std::move(v));
    }

private:
    std::vector<Row> rows_;
};

// Tent map g(t) = 2 sigma(t) - 4 sigma(t - 1/2) on [0,1], realized with six
// duplicate units so every weight stays in [-1,1]: two copies of sigma(t)
// and four of sigma(t - 1/2), recombined with +-1 by the consumer.
std::array<std::size_t, 6> add_tent_heads(SketchLayer& layer, const Combo& t) {
    std::array<std::size_t, 6> u{};
    u[0] = layer.add(Row{t, 0.0});
    u[1] = layer.add(Row{t, 0.0});
    for (int i = 2; i < 6; ++i) u[i] = layer.add(Row{t, 0.5});
    return u;
}

Combo tent_value(const std::array<std::size_t, 6>& u) {
    return {{u[0], 1.0}, {u[1], 1.0}, {u[2], -1.0}, {u[3], -1.0}, {u[4], -1.0}, {u[5], -1.0}};
}

} // namespace

ReluNetwork build_mult(std::size_t r, int accuracy) {
    if (r < 2) throw std::invalid_argument("build_mult: arity must be at least 2");
    if (accuracy < 1) throw std::invalid_argument("build_mult: accuracy must be at least 1");

    // One pairwise block computes clip(S_m(u) - S_m(w)) with u = (a+b)/2 and
    // w = |a-b|/2, where S_m(t) = t - sum_k 4^-k g_k(t) is the piecewise
    // linear interpolant of t^2 on a 2^-m grid (g_k = k-fold tent map).
    // Since ab = u^2 - w^2 and the interpolation error is 4^-m-1 per square,
    // one block is within 2*4^-(m+1) <= 2^-(accuracy+3) of ab.  Blocks form
    // a balanced binary tree, one tree level per (accuracy+5)-layer band.
    const int m = (accuracy + 3) / 2;
    const int level_depth = accuracy + 5;
    const std::size_t width = 6 * r;

    NetBuilder nb(r);
    std::vector<Combo> ch(r);
    for (std::size_t i = 0; i < r; ++i) ch[i] = {{i, 1.0}};

    while (ch.size() > 1) {
        const std::size_t blocks = ch.size() / 2;
        const bool has_carry = ch.size() % 2 != 0;
        Combo carry;
        if (has_carry) carry = ch.back();

        struct BlockState {
            std::size_t a1 = 0, a2 = 0, a3 = 0; // seed units
            std::array<std::size_t, 6> saw{};   // current tent heads
            std::size_t acc = 0;                // u accumulator, then S_m(u)
            std::size_t acc2 = 0;               // carried w, then w accumulator
            Combo out;                          // clip pair after the block ends
        };
        std::vector<BlockState> st(blocks);

        for (int lay = 0; lay < level_depth; ++lay) {
            SketchLayer layer;
            for (std::size_t b = 0; b < blocks; ++b) {
                BlockState& s = st[b];
                if (lay == 0) {
                    // u = (a+b)/2 as one unit; w = |a-b|/2 as a mirrored pair.
                    Row r1, r2, r3;
                    append_scaled(r1, ch[2 * b], 0.5);
                    append_scaled(r1, ch[2 * b + 1], 0.5);
                    append_scaled(r2, ch[2 * b], 0.5);
                    append_scaled(r2, ch[2 * b + 1], -0.5);
                    append_scaled(r3, ch[2 * b], -0.5);
                    append_scaled(r3, ch[2 * b + 1], 0.5);
                    s.a1 = layer.add(std::move(r1));
                    s.a2 = layer.add(std::move(r2));
                    s.a3 = layer.add(std::move(r3));
                } else if (lay == 1) {
                    const Combo u = {{s.a1, 1.0}};
                    const Combo w = {{s.a2, 1.0}, {s.a3, 1.0}};
                    s.saw = add_tent_heads(layer, u);
                    s.acc = layer.add(Row{u, 0.0});
                    s.acc2 = layer.add(Row{w, 0.0});
                } else if (lay <= m) {
                    // Consume g_(lay-1)(u): extend the accumulator and build
                    // the next tent stage.
                    const int k = lay - 1;
                    const Combo f = tent_value(s.saw);
                    const auto next = add_tent_heads(layer, f);
                    Row ra;
                    ra.w = {{s.acc, 1.0}};
                    append_scaled(ra, f, -std::ldexp(1.0, -2 * k));
                    const std::size_t acc = layer.add(std::move(ra));
                    const std::size_t acc2 = layer.add(Row{{{s.acc2, 1.0}}, 0.0});
                    s.saw = next;
                    s.acc = acc;
                    s.acc2 = acc2;
                } else if (lay == m + 1) {
                    // Finish S_m(u); switch the tent pipeline over to w.
                    const Combo f = tent_value(s.saw);
                    const Combo w = {{s.acc2, 1.0}};
                    const auto next = add_tent_heads(layer, w);
                    Row rs;
                    rs.w = {{s.acc, 1.0}};
                    append_scaled(rs, f, -std::ldexp(1.0, -2 * m));
                    const std::size_t squ = layer.add(std::move(rs));
                    const std::size_t accw = layer.add(Row{w, 0.0});
                    s.saw = next;
                    s.acc = squ;
                    s.acc2 = accw;
                } else if (lay <= 2 * m) {
                    const int k = lay - m - 1;
                    const Combo f = tent_value(s.saw);
                    const auto next = add_tent_heads(layer, f);
                    const std::size_t squ = layer.add(Row{{{s.acc, 1.0}}, 0.0});
                    Row ra;
                    ra.w = {{s.acc2, 1.0}};
                    append_scaled(ra, f, -std::ldexp(1.0, -2 * k));
                    const std::size_t accw = layer.add(std::move(ra));
                    s.saw = next;
                    s.acc = squ;
                    s.acc2 = accw;
                } else if (lay == 2 * m + 1) {
                    // z = S_m(u) - S_m(w); clip to [0,1] with sigma(z) - sigma(z-1).
                    const Combo f = tent_value(s.saw);
                    Row rz;
                    rz.w = {{s.acc, 1.0}, {s.acc2, -1.0}};
                    append_scaled(rz, f, std::ldexp(1.0, -2 * m));
                    Row rz1 = rz;
                    rz1.v = 1.0;
                    const std::size_t c1 = layer.add(std::move(rz));
                    const std::size_t c2 = layer.add(std::move(rz1));
                    s.out = {{c1, 1.0}, {c2, -1.0}};
                } else {
                    // Depth padding: pass the clipped value through.
                    const std::size_t p = layer.add(Row{s.out, 0.0});
                    s.out = {{p, 1.0}};
                }
            }
            if (has_carry) {
                const std::size_t cu = layer.add(Row{carry, 0.0});
                carry = {{cu, 1.0}};
            }
            layer.emit(nb, width);
        }

        std::vector<Combo> next;
        next.reserve(blocks + 1);
        for (std::size_t b = 0; b < blocks; ++b) next.push_back(std::move(st[b].out));
        if (has_carry) next.push_back(std::move(carry));
        ch = std::move(next);
    }

    Matrix wout(1, nb.width());
    for (const auto& e : ch[0]) wout(0, e.first) += e.second;
    return nb.finish(std::move(wout));
}

ReluNetwork build_const_mult(double c) {
    // c <= 1 (including the out-of-contract c < 1) degrades to the identity.
    const int q = c > 1.0 ? ceil_log2_scale(c) : 0;
    if (q == 0) {
        Matrix wout(1, 1);
        wout(0, 0) = 1.0;
        NetBuilder nb(1);
        return nb.finish(std::move(wout));
    }
    NetBuilder nb(1);
    for (int k = 1; k <= q; ++k) {
        Matrix a(2, nb.width());
        a(0, 0) = 1.0;
        a(1, 0) = 1.0;
        nb.add_hidden(std::move(a), std::vector<double>(2, 0.0));
        if (k < q) {
            Matrix bmat(1, 2);
            bmat(0, 0) = 1.0;
            bmat(0, 1) = 1.0;
            nb.add_hidden(std::move(bmat), std::vector<double>(1, 0.0));
        }
    }
    const double scale = c * std::ldexp(1.0, -q); // <= 1 by choice of q
    Matrix wout(1, 2);
    wout(0, 0) = scale;
    wout(0, 1) = scale;
    return nb.finish(std::move(wout));
}

namespace {

void validate_term(const MarsTerm& term, std::size_t d) {
    if (term.degree != 1)
        throw std::invalid_argument("compile: only degree-1 factors are supported");
    std::vector<int> used(d, 0);
    if (term.signs.size() != term.coords.size() || term.knots.size() != term.coords.size())
        throw std::invalid_argument("compile: malformed term");
    for (std::size_t f = 0; f < term.coords.size(); ++f) {
        if (term.coords[f] >= d) throw std::invalid_argument("compile: coordinate out of range");
        if (used[term.coords[f]]++ != 0)
            throw std::invalid_argument("compile: coordinate used more than once in a term");
        if (term.signs[f] != 1 && term.signs[f] != -1)
            throw std::invalid_argument("compile: signs must be +-1");
        if (term.knots[f] < 0.0 || term.knots[f] > 1.0)
            throw std::invalid_argument("compile: knots must lie in [0,1]");
    }
}

Matrix hinge_layer(const MarsTerm& term, std::size_t d, std::vector<double>& v) {
    Matrix h(d, d);
    v.assign(d, -1.0); // default: zero row with shift -1 feeds the constant 1
    for (std::size_t f = 0; f < term.coords.size(); ++f) {
        const std::size_t j = term.coords[f];
        const double s = static_cast<double>(term.signs[f]);
        h(j, j) = s;
        v[j] = s * term.knots[f];
    }
    return h;
}

} // namespace

ReluNetwork compile_basis(const MarsTerm& term, std::size_t d, int accuracy) {
    if (d == 0) throw std::invalid_argument("compile_basis: d must be positive");
    validate_term(term, d);

    std::vector<double> v;
    Matrix h = hinge_layer(term, d, v);
    NetBuilder nb(d);
    nb.add_hidden(std::move(h), std::move(v));

    if (d == 1) {
        Matrix wout(1, 1);
        wout(0, 0) = 1.0;
        return nb.finish(std::move(wout));
    }
    Matrix ident(d, d);
    for (std::size_t i = 0; i < d; ++i) ident(i, i) = 1.0;
    return compose(nb.finish(std::move(ident)), build_mult(d, accuracy));
}

namespace {

std::string digest_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

CompiledNet compile_constant(const MarsModel& model, double epsilon, int accuracy,
                             const CompileCertificate& base) {
    // No product terms: a single constant channel scaled to the intercept.
    const double b0 = model.intercept;
    const int q = ceil_log2_scale(std::max(1.0, std::fabs(b0)));

    NetBuilder nb(model.d);
    Matrix h(1, model.d);
    nb.add_hidden(std::move(h), std::vector<double>{-1.0});
    for (int k = 1; k <= q; ++k) {
        Matrix a(2, nb.width());
        for (std::size_t u = 0; u < nb.width(); ++u) {
            a(0, u) = 1.0;
            a(1, u) = 1.0;
        }
        nb.add_hidden(std::move(a), std::vector<double>(2, 0.0));
        if (k < q) {
            Matrix bm(1, 2);
            bm(0, 0) = 1.0;
            bm(0, 1) = 1.0;
            nb.add_hidden(std::move(bm), std::vector<double>(1, 0.0));
        }
    }

    CompiledNet out;
    if (q == 0) {
        Matrix wout(1, 1);
        wout(0, 0) = b0;
        out.net = nb.finish(std::move(wout));
    } else {
        const double scale = b0 * std::ldexp(1.0, -q);
        Matrix wout(1, 2);
        wout(0, 0) = scale;
        wout(0, 1) = scale;
        out.net = nb.finish(std::move(wout));
    }

    out.certificate = base;
    out.certificate.epsilon = epsilon;
    out.certificate.accuracy = accuracy;
    out.certificate.error_bound = 0.0; // the constant is represented exactly
    out.certificate.depth = out.net.depth();
    out.certificate.widths = out.net.widths();
    out.certificate.sparsity = out.net.sparsity();
    out.certificate.max_abs_param = out.net.max_abs_param();
    // No closed forms apply without product terms; predictions restate the
    // built network so the certificate stays self-consistent.
    out.certificate.predicted_depth = out.certificate.depth;
    out.certificate.predicted_widths = out.certificate.widths;
    out.certificate.predicted_sparsity = out.certificate.sparsity;
    std::size_t wmax = 1;
    for (std::size_t i = 1; i + 1 < out.certificate.widths.size(); ++i)
        wmax = std::max(wmax, out.certificate.widths[i]);
    out.certificate.predicted_width_bound = wmax;
    return out;
}

} // namespace

CompiledNet compile_mars(const MarsModel& model, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("compile_mars: epsilon must lie in (0,1]");
    if (model.d == 0) throw std::invalid_argument("compile_mars: model dimension is zero");

    const std::size_t d = model.d;
    const std::size_t nterms = model.terms.size();
    const double c_bound = std::max(1.0, model.coef_bound);

    double max_coef = std::fabs(model.intercept);
    for (const MarsTerm& t : model.terms) max_coef = std::max(max_coef, std::fabs(t.beta));
    if (max_coef > c_bound * (1.0 + 1e-12))
        throw std::invalid_argument("compile_mars: coefficients exceed the declared bound C");
    for (const MarsTerm& t : model.terms) validate_term(t, d);

    // Precision so that C (M+1) 3^d 2^-N <= epsilon, minimal such N >= 1.
    const double pow3d = std::pow(3.0, static_cast<double>(d));
    const double lead = c_bound * static_cast<double>(nterms + 1) * pow3d;
    int accuracy = std::max(1, static_cast<int>(std::ceil(std::log2(lead / epsilon))));
    while (lead * std::ldexp(1.0, -accuracy) > epsilon) ++accuracy;
    while (accuracy > 1 && lead * std::ldexp(1.0, -(accuracy - 1)) <= epsilon) --accuracy;

    const int q = ceil_log2_scale(c_bound);
    const int tdepth = (accuracy + 5) * ceil_log2_count(d);

    CompileCertificate cert;
    cert.epsilon = epsilon;
    cert.accuracy = accuracy;
    cert.arity = d;
    cert.d = d;
    cert.terms = nterms;
    cert.coef_bound = c_bound;
    cert.error_bound = lead * std::ldexp(1.0, -accuracy);
    cert.source = "mars(d=" + std::to_string(d) + ",M=" + std::to_string(nterms) +
                  ",C=" + digest_double(c_bound) + ")";

    if (nterms == 0) return compile_constant(model, epsilon, accuracy, cert);

    // Basis networks; independent builds, deterministic layout.
    std::vector<ReluNetwork> branches(nterms);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t m = 0; m < nterms; ++m)
        branches[m] = compile_basis(model.terms[m], d, accuracy);

    ReluNetwork joined = parallel_join(branches, false);

    // Widening layer (constant channel + the M basis values), identity pads
    // to make the declared depth formula exact, then doubling chains whose
    // output scale beta 2^-q stands in for multiplication by C followed by
    // division by C in the final layer.
    const std::size_t mplus = nterms + 1;
    NetBuilder wb(nterms);
    {
        Matrix ww(mplus, nterms);
        std::vector<double> wv(mplus, 0.0);
        wv[0] = -1.0;
        for (std::size_t mm = 1; mm < mplus; ++mm) ww(mm, mm - 1) = 1.0;
        wb.add_hidden(std::move(ww), std::move(wv));
    }
    const int pads = q >= 1 ? 2 : 1;
    for (int p = 0; p < pads; ++p) wb.add_identity_layer();

    ReluNetwork head;
    if (q >= 1) {
        for (int k = 1; k <= q; ++k) {
            Matrix a(2 * mplus, wb.width());
            for (std::size_t cidx = 0; cidx < mplus; ++cidx) {
                a(2 * cidx, cidx) = 1.0;
                a(2 * cidx + 1, cidx) = 1.0;
            }
            wb.add_hidden(std::move(a), std::vector<double>(2 * mplus, 0.0));
            if (k < q) {
                Matrix bm(mplus, 2 * mplus);
                for (std::size_t cidx = 0; cidx < mplus; ++cidx) {
                    bm(cidx, 2 * cidx) = 1.0;
                    bm(cidx, 2 * cidx + 1) = 1.0;
                }
                wb.add_hidden(std::move(bm), std::vector<double>(mplus, 0.0));
            }
        }
        const double scale = std::ldexp(1.0, -q);
        Matrix wout(1, 2 * mplus);
        wout(0, 0) = model.intercept * scale;
        wout(0, 1) = model.intercept * scale;
        for (std::size_t mm = 0; mm < nterms; ++mm) {
            wout(0, 2 * (mm + 1)) = model.terms[mm].beta * scale;
            wout(0, 2 * (mm + 1) + 1) = model.terms[mm].beta * scale;
        }
        head = wb.finish(std::move(wout));
    } else {
        Matrix wout(1, mplus);
        wout(0, 0) = model.intercept;
        for (std::size_t mm = 0; mm < nterms; ++mm) wout(0, mm + 1) = model.terms[mm].beta;
        head = wb.finish(std::move(wout));
    }

    CompiledNet out;
    out.net = compose(joined, head);

    cert.predicted_depth = static_cast<std::size_t>(tdepth + 2 * q + 3);
    cert.predicted_sparsity = nterms * 42 * d * d * static_cast<std::size_t>(tdepth + 2) + 2 +
                              nterms * static_cast<std::size_t>(4 * q + 2);
    cert.predicted_width_bound = 6 * nterms * d;
    cert.predicted_widths = out.net.widths();
    cert.depth = out.net.depth();
    cert.widths = out.net.widths();
    cert.sparsity = out.net.sparsity();
    cert.max_abs_param = out.net.max_abs_param();
    out.certificate = std::move(cert);
    return out;
}

CompiledNet compile_fs(const FsModel& model, double epsilon) {
    MarsModel converted = fs_to_mars(model);
    const double c_fs = std::max(1.0, model.max_abs_coeff());
    const double inflation =
        std::exp2(static_cast<double>(model.d) * (model.resolution + 2) / 2.0);
    converted.coef_bound = std::max(converted.coef_bound, c_fs * inflation);

    CompiledNet out = compile_mars(converted, epsilon);

    CompileCertificate& cert = out.certificate;
    cert.from_fs = true;
    cert.fs_resolution = model.resolution;
    cert.fs_coef_bound = c_fs;
    cert.fs_coef_inflation = inflation;
    const int mres = std::max(model.resolution, 0);
    const double disp = std::pow(1.0 + std::ldexp(1.0, mres), static_cast<double>(model.d));
    const double truec =
        std::pow(1.0 + std::ldexp(1.0, model.resolution + 1), static_cast<double>(model.d));
    cert.fs_keys_displayed = disp < 1e18 ? static_cast<std::size_t>(disp + 0.5) : 0;
    cert.fs_keys_true = truec < 1e18 ? static_cast<std::size_t>(truec + 0.5) : 0;
    cert.source = "fs(d=" + std::to_string(model.d) +
                  ",M=" + std::to_string(model.resolution) +
                  ",keys=" + std::to_string(model.coeffs.size()) + ")";
    return out;
}

namespace {

// Knots, knot-gap midpoints and both endpoints for one axis.
std::vector<double> witness_values(std::vector<double> knots) {
    std::vector<double> vals{0.0, 1.0};
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    double prev = 0.0;
    for (double k : knots) {
        if (k < 0.0 || k > 1.0) continue;
        vals.push_back(k);
        vals.push_back(0.5 * (prev + k));
        prev = k;
    }
    vals.push_back(0.5 * (prev + 1.0));
    return vals;
}

CompileCertificate verify_impl(const ReluNetwork& net, const CompileCertificate& cert,
                               const kernels::PointFn& reference, std::size_t d,
                               const std::vector<std::vector<double>>& axis_extras,
                               std::size_t grid_resolution) {
    if (net.input_dim() != d)
        throw std::invalid_argument("verify_certificate: network input dimension mismatch");
    kernels::Grid grid = kernels::uniform_grid(d, std::max<std::size_t>(grid_resolution, 2));
    for (std::size_t axis = 0; axis < d; ++axis)
        kernels::merge_axis_values(grid, axis, axis_extras[axis]);
    if (grid.cartesian_size() > 30000000)
        throw std::invalid_argument("verify_certificate: grid too large");

    CompileCertificate out = cert;
    out.measured_sup_error =
        kernels::max_abs_diff(kernels::as_point_fn(net), reference, grid);
    out.grid_points = grid.cartesian_size() + grid.extras.size();
    out.depth = net.depth();
    out.widths = net.widths();
    out.sparsity = net.sparsity();
    out.max_abs_param = net.max_abs_param();

    out.sup_ok = out.measured_sup_error <= cert.epsilon;
    out.depth_ok = out.depth == cert.predicted_depth;
    out.widths_ok = out.widths == cert.predicted_widths;
    out.sparsity_ok = out.sparsity <= cert.predicted_sparsity;
    out.params_ok = out.max_abs_param <= 1.0;
    std::size_t wmax = 0;
    for (std::size_t i = 1; i + 1 < out.widths.size(); ++i) wmax = std::max(wmax, out.widths[i]);
    out.width_bound_ok = wmax <= cert.predicted_width_bound;
    out.verified = true;
    return out;
}

} // namespace

CompileCertificate verify_certificate(const ReluNetwork& net, const CompileCertificate& cert,
                                      const MarsModel& model, std::size_t grid_resolution) {
    std::vector<std::vector<double>> per_axis(model.d);
    for (const MarsTerm& t : model.terms)
        for (std::size_t f = 0; f < t.coords.size(); ++f)
            per_axis[t.coords[f]].push_back(t.knots[f]);
    for (std::size_t axis = 0; axis < model.d; ++axis)
        per_axis[axis] = witness_values(std::move(per_axis[axis]));

    MarsModel copy = model;
    kernels::PointFn ref = [copy](const double* x) { return eval_model(copy, x); };
    return verify_impl(net, cert, ref, model.d, per_axis, grid_resolution);
}

CompileCertificate verify_certificate(const ReluNetwork& net, const CompileCertificate& cert,
                                      const FsModel& model, std::size_t grid_resolution) {
    // Breakpoints sit on the dyadic grid of pitch 2^-(M+1); include the next
    // refinement as midpoints.
    std::vector<double> dyadic;
    const int levels = std::min(std::max(model.resolution, -1) + 2, 12);
    const std::size_t g = (static_cast<std::size_t>(1) << levels) + 1;
    for (std::size_t k = 0; k < g; ++k)
        dyadic.push_back(static_cast<double>(k) * std::ldexp(1.0, -levels));
    std::vector<std::vector<double>> per_axis(model.d, dyadic);

    FsModel copy = model;
    kernels::PointFn ref = [copy](const double* x) { return eval_fs(copy, x); };
    return verify_impl(net, cert, ref, model.d, per_axis, grid_resolution);
}

std::string certificate_to_json(const CompileCertificate& cert) {
    nlohmann::json j;
    j["epsilon"] = cert.epsilon;
    j["N"] = cert.accuracy;
    j["r"] = cert.arity;
    j["d"] = cert.d;
    j["M"] = cert.terms;
    j["C"] = cert.coef_bound;
    j["error_bound"] = cert.error_bound;
    j["predicted_L"] = cert.predicted_depth;
    j["predicted_s"] = cert.predicted_sparsity;
    j["predicted_width_bound"] = cert.predicted_width_bound;
    j["predicted_widths"] = cert.predicted_widths;
    j["depth"] = cert.depth;
    j["widths"] = cert.widths;
    j["sparsity"] = cert.sparsity;
    j["max_abs_param"] = cert.max_abs_param;
    j["source"] = cert.source;
    if (cert.from_fs) {
        nlohmann::json f;
        f["resolution"] = cert.fs_resolution;
        f["coef_bound"] = cert.fs_coef_bound;
        f["coef_inflation"] = cert.fs_coef_inflation;
        f["keys_displayed_convention"] = cert.fs_keys_displayed;
        f["keys_true_cardinality"] = cert.fs_keys_true;
        j["fs"] = std::move(f);
    } else {
        j["fs"] = nullptr;
    }
    if (cert.verified) {
        nlohmann::json v;
        v["grid_points"] = cert.grid_points;
        v["measured_sup_error"] = cert.measured_sup_error;
        v["sup_ok"] = cert.sup_ok;
        v["depth_ok"] = cert.depth_ok;
        v["widths_ok"] = cert.widths_ok;
        v["sparsity_ok"] = cert.sparsity_ok;
        v["params_ok"] = cert.params_ok;
        v["width_bound_ok"] = cert.width_bound_ok;
        v["pass"] = cert.pass();
        j["verification"] = std::move(v);
    } else {
        j["verification"] = nullptr;
        j["measured_sup_error"] = nullptr;
    }
    return j.dump(2);
}

CompileCertificate certificate_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CompileCertificate cert;
    cert.epsilon = j.at("epsilon").get<double>();
    cert.accuracy = j.at("N").get<int>();
    cert.arity = j.at("r").get<std::size_t>();
    cert.d = j.at("d").get<std::size_t>();
    cert.terms = j.at("M").get<std::size_t>();
    cert.coef_bound = j.at("C").get<double>();
    cert.error_bound = j.value("error_bound", 0.0);
    cert.predicted_depth = j.at("predicted_L").get<std::size_t>();
    cert.predicted_sparsity = j.at("predicted_s").get<std::size_t>();
    cert.predicted_width_bound = j.value("predicted_width_bound", std::size_t{0});
    cert.predicted_widths = j.at("predicted_widths").get<std::vector<std::size_t>>();
    cert.depth = j.value("depth", std::size_t{0});
    cert.widths = j.value("widths", std::vector<std::size_t>{});
    cert.sparsity = j.value("sparsity", std::size_t{0});
    cert.max_abs_param = j.value("max_abs_param", 0.0);
    cert.source = j.value("source", std::string{});
    if (j.contains("fs") && !j["fs"].is_null()) {
        const auto& f = j["fs"];
        cert.from_fs = true;
        cert.fs_resolution = f.value("resolution", 0);
        cert.fs_coef_bound = f.value("coef_bound", 1.0);
        cert.fs_coef_inflation = f.value("coef_inflation", 1.0);
        cert.fs_keys_displayed = f.value("keys_displayed_convention", std::size_t{0});
        cert.fs_keys_true = f.value("keys_true_cardinality", std::size_t{0});
    }
    if (j.contains("verification") && !j["verification"].is_null()) {
        const auto& v = j["verification"];
        cert.verified = true;
        cert.grid_points = v.value("grid_points", std::size_t{0});
        cert.measured_sup_error = v.value("measured_sup_error", 0.0);
        cert.sup_ok = v.value("sup_ok", false);
        cert.depth_ok = v.value("depth_ok", false);
        cert.widths_ok = v.value("widths_ok", false);
        cert.sparsity_ok = v.value("sparsity_ok", false);
        cert.params_ok = v.value("params_ok", false);
        cert.width_bound_ok = v.value("width_bound_ok", false);
    }
    return cert;
}

void save_certificate(const CompileCertificate& cert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_certificate: cannot open " + path);
    out << certificate_to_json(cert) << "\n";
}

CompileCertificate load_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_certificate: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return certificate_from_json(ss.str());
}

} // namespace splinet
