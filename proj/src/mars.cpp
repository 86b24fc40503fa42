#include "splinet/mars.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "splinet/linalg.hpp"
#include "splinet/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splinet {

double eval_basis(const MarsTerm& term, const double* x) {
    double prod = 1.0;
    for (std::size_t f = 0; f < term.coords.size(); ++f) {
        double h = static_cast<double>(term.signs[f]) * (x[term.coords[f]] - term.knots[f]);
        if (h <= 0.0) return 0.0;
        double p = h;
        for (int q = 1; q < term.degree; ++q) p *= h;
        prod *= p;
    }
    return prod;
}

double eval_model(const MarsModel& model, const double* x) {
    double acc = model.intercept;
    for (const MarsTerm& t : model.terms) acc += t.beta * eval_basis(t, x);
    return acc;
}

double eval_model(const MarsModel& model, const std::vector<double>& x) {
    if (x.size() != model.d) throw std::invalid_argument("eval_model: dimension mismatch");
    return eval_model(model, x.data());
}

namespace {

// ---- forward selection engine ----------------------------------------------
//
// Selection uses the span identity
//   span{B, (x_j-t)_+ g, (t-x_j)_+ g} = span{B, (x_j-t)_+ g, x_j g}
// (valid because g is itself a basis column and t g lies in its span), so a
// knot sweep only has to border the Gram with the fixed column b = x_j g and
// the moving hinge column u_t.  Inner products with u_t are maintained by
// running sums over the points with x_ij > t, which makes one (g, j) scan
// cost O(n m) for the updates plus O(m^2) per distinct knot for the bordered
// triangular solve.

struct ScanJob {
    std::size_t g = 0; // parent basis column
    std::size_t j = 0; // coordinate
};

struct ScanResult {
    double extra = -1.0; // RSS drop of the best knot; negative = no candidate
    double knot = 0.0;
};

struct ScanContext {
    const Dataset* data = nullptr;
    const Matrix* basis = nullptr;             // n x m column matrix
    const Matrix* chol = nullptr;              // lower factor of Gram + alpha I
    const std::vector<double>* wy = nullptr;   // L^-1 B^T y
    double alpha = 0.0;
    const std::vector<std::vector<std::uint32_t>>* order = nullptr; // per-j descending
    const std::vector<std::vector<double>>* knots = nullptr;        // per-j descending
};

// Best knot for one (g, j) pair.  Deterministic: sequential sweep, ties keep
// the smaller knot.
ScanResult scan_pair(const ScanContext& ctx, const ScanJob& job) {
    const Dataset& data = *ctx.data;
    const Matrix& b = *ctx.basis;
    const std::size_t n = data.n;
    const std::size_t m = b.cols();
    const auto& ord = (*ctx.order)[job.j];
    const auto& knots = (*ctx.knots)[job.j];

    // Fixed border column bvec = x_j * g.
    std::vector<double> pb(m, 0.0);
    double qbb = 0.0, qby = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = b(i, job.g);
        if (gi == 0.0) continue;
        const double bi = gi * data.coord(i, job.j);
        for (std::size_t c = 0; c < m; ++c) pb[c] += bi * b(i, c);
        qbb += bi * bi;
        qby += bi * data.y[i];
    }
    std::vector<double> zb(m);
    forward_solve(*ctx.chol, pb.data(), zb.data());
    const std::vector<double>& wy = *ctx.wy;
    double sbb = qbb + ctx.alpha, rb = qby;
    for (std::size_t c = 0; c < m; ++c) {
        sbb -= zb[c] * zb[c];
        rb -= zb[c] * wy[c];
    }

    // Running sums over { i : x_ij > t }.
    std::vector<double> s0(m, 0.0), s1(m, 0.0);
    double s0y = 0.0, s1y = 0.0;
    double s0g = 0.0, s1g = 0.0, s2g = 0.0;
    std::vector<double> pu(m), zu(m);

    ScanResult best;
    std::size_t pos = 0; // index into ord (descending x_j)
    const double rel = 1e-10;

    for (double t : knots) {
        while (pos < n) {
            const std::size_t i = ord[pos];
            const double xv = data.coord(i, job.j);
            if (xv <= t) break;
            const double gi = b(i, job.g);
            if (gi != 0.0) {
                for (std::size_t c = 0; c < m; ++c) {
                    const double gb = gi * b(i, c);
                    s0[c] += gb;
                    s1[c] += gb * xv;
                }
                s0y += gi * data.y[i];
                s1y += gi * data.y[i] * xv;
                const double g2 = gi * gi;
                s0g += g2;
                s1g += g2 * xv;
                s2g += g2 * xv * xv;
            }
            ++pos;
        }

        for (std::size_t c = 0; c < m; ++c) pu[c] = s1[c] - t * s0[c];
        const double quy = s1y - t * s0y;
        const double qub = s2g - t * s1g;
        const double quu = s2g - 2.0 * t * s1g + t * t * s0g;

        forward_solve(*ctx.chol, pu.data(), zu.data());
        double suu = quu + ctx.alpha, sub = qub, ru = quy;
        for (std::size_t c = 0; c < m; ++c) {
            suu -= zu[c] * zu[c];
            sub -= zu[c] * zb[c];
            ru -= zu[c] * wy[c];
        }

        const bool ok_b = sbb > rel * (qbb + ctx.alpha) && sbb > 0.0;
        const bool ok_u = suu > rel * (quu + ctx.alpha) && suu > 0.0;
        double extra = 0.0;
        if (ok_b && ok_u) {
            const double det = sbb * suu - sub * sub;
            if (det > rel * sbb * suu)
                extra = (rb * rb * suu - 2.0 * rb * ru * sub + ru * ru * sbb) / det;
            else
                extra = std::max(rb * rb / sbb, ru * ru / suu);
        } else if (ok_b) {
            extra = rb * rb / sbb;
        } else if (ok_u) {
            extra = ru * ru / suu;
        }
        if (extra < 0.0) extra = 0.0;

        // >= so that equal improvements keep the smaller (later) knot.
        if (extra >= best.extra) {
            best.extra = extra;
            best.knot = t;
        }
    }
    return best;
}

// Candidate scan: embarrassingly parallel, results materialized per job so
// the argmin reduction below is order-fixed regardless of thread count.
void scan_all(const ScanContext& ctx, const std::vector<ScanJob>& jobs,
              std::vector<ScanResult>& results) {
    const std::size_t count = jobs.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t k = 0; k < count; ++k) results[k] = scan_pair(ctx, jobs[k]);
}

struct TermMeta {
    MarsTerm term; // beta unused during selection
    bool is_intercept = false;
};

bool coord_used(const TermMeta& meta, std::size_t j) {
    return std::find(meta.term.coords.begin(), meta.term.coords.end(), j) !=
           meta.term.coords.end();
}

double column_rss(const Matrix& basis, const std::vector<double>& y, std::vector<double>& beta) {
    const std::size_t n = basis.rows(), m = basis.cols();
    Matrix gram(m, m);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = basis.row(i);
        for (std::size_t a = 0; a < m; ++a) {
            rhs[a] += row[a] * y[i];
            for (std::size_t c = a; c < m; ++c) gram(a, c) += row[a] * row[c];
        }
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t c = 0; c < a; ++c) gram(a, c) = gram(c, a);
    solve_normal_equations(gram, rhs, beta, 0.0);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        const double* row = basis.row(i);
        for (std::size_t a = 0; a < m; ++a) pred += row[a] * beta[a];
        const double r = y[i] - pred;
        rss += r * r;
    }
    return rss;
}

} // namespace

MarsFit forward_selection(const Dataset& data, const MarsFitOptions& opt) {
    if (data.n == 0 || data.d == 0)
        throw std::invalid_argument("forward_selection: empty dataset");
    if (opt.iterations == 0)
        throw std::invalid_argument("forward_selection: iterations must be positive");

    const std::size_t n = data.n, d = data.d;
    const std::size_t cap = opt.max_degree == 0 ? d : opt.max_degree;
    MarsFit fit;
    if (2 * opt.iterations + 1 > n)
        fit.report.warnings.push_back("basis size 2*iterations+1 exceeds sample size");

    // Per-coordinate descending order and distinct candidate knots.
    std::vector<std::vector<std::uint32_t>> order(d);
    std::vector<std::vector<double>> knots(d);
    for (std::size_t j = 0; j < d; ++j) {
        order[j].resize(n);
        std::iota(order[j].begin(), order[j].end(), 0u);
        std::sort(order[j].begin(), order[j].end(), [&](std::uint32_t a, std::uint32_t b) {
            const double xa = data.coord(a, j), xb = data.coord(b, j);
            if (xa != xb) return xa > xb;
            return a < b;
        });
        std::vector<double> vals(n);
        for (std::size_t i = 0; i < n; ++i) vals[i] = data.coord(order[j][i], j);
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        if (opt.knot_subsample > 0 && opt.knot_subsample < vals.size()) {
            Rng rng = derive_rng(opt.seed, j);
            // Partial Fisher-Yates over the distinct values.
            for (std::size_t i = 0; i < opt.knot_subsample; ++i) {
                const std::size_t r = i + static_cast<std::size_t>(rng.below(vals.size() - i));
                std::swap(vals[i], vals[r]);
            }
            vals.resize(opt.knot_subsample);
            std::sort(vals.begin(), vals.end(), std::greater<double>());
        }
        knots[j] = std::move(vals);
    }

    // Basis starts as the constant column.
    std::vector<TermMeta> metas(1);
    metas[0].is_intercept = true;
    Matrix basis(n, 1, 1.0);

    std::vector<double> beta;
    fit.report.rss_path.push_back(column_rss(basis, data.y, beta));

    for (std::size_t it = 0; it < opt.iterations; ++it) {
        const std::size_t m = basis.cols();

        // Gram and Cholesky of the current basis.
        Matrix gram(m, m);
        std::vector<double> rhs(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = basis.row(i);
            for (std::size_t a = 0; a < m; ++a) {
                rhs[a] += row[a] * data.y[i];
                for (std::size_t c = a; c < m; ++c) gram(a, c) += row[a] * row[c];
            }
        }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < a; ++c) gram(a, c) = gram(c, a);

        double mean_diag = 0.0;
        for (std::size_t a = 0; a < m; ++a) mean_diag += gram(a, a);
        mean_diag /= static_cast<double>(m);

        double alpha = 0.0;
        Matrix chol_m = gram;
        if (!cholesky(chol_m)) {
            alpha = 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
            chol_m = gram;
            for (std::size_t a = 0; a < m; ++a) chol_m(a, a) += alpha;
            if (!cholesky(chol_m))
                throw std::runtime_error("forward_selection: Gram singular even with ridge");
        }
        std::vector<double> wy(m);
        forward_solve(chol_m, rhs.data(), wy.data());

        std::vector<ScanJob> jobs;
        for (std::size_t g = 0; g < metas.size(); ++g) {
            if (metas[g].term.order() >= cap && !metas[g].is_intercept) continue;
            if (metas[g].is_intercept && cap == 0) continue;
            for (std::size_t j = 0; j < d; ++j) {
                if (!opt.allow_repeats && coord_used(metas[g], j)) continue;
                jobs.push_back(ScanJob{g, j});
            }
        }
        if (jobs.empty()) {
            fit.report.warnings.push_back("no admissible candidates; stopped early");
            break;
        }

        ScanContext ctx;
        ctx.data = &data;
        ctx.basis = &basis;
        ctx.chol = &chol_m;
        ctx.wy = &wy;
        ctx.alpha = alpha;
        ctx.order = &order;
        ctx.knots = &knots;

        std::vector<ScanResult> results(jobs.size());
        scan_all(ctx, jobs, results);

        // Lexicographic reduction: jobs are ordered by (g, j) already.
        std::size_t best_idx = 0;
        for (std::size_t k = 1; k < results.size(); ++k)
            if (results[k].extra > results[best_idx].extra) best_idx = k;

        const ScanJob& pick = jobs[best_idx];
        const double t = results[best_idx].knot;
        fit.report.picks.push_back(MarsFitReport::Pick{pick.g, pick.j, t});

        // Append the reflected pair.
        Matrix grown(n, m + 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = basis.row(i);
            double* dst = grown.row(i);
            std::copy(row, row + m, dst);
            const double gi = row[pick.g];
            const double diff = data.coord(i, pick.j) - t;
            dst[m] = diff > 0.0 ? gi * diff : 0.0;
            dst[m + 1] = diff < 0.0 ? -gi * diff : 0.0;
        }
        basis = std::move(grown);

        for (int side = 0; side < 2; ++side) {
            TermMeta meta = metas[pick.g];
            meta.is_intercept = false;
            meta.term.coords.push_back(pick.j);
            meta.term.signs.push_back(side == 0 ? 1 : -1);
            meta.term.knots.push_back(t);
            meta.term.degree = 1;
            metas.push_back(std::move(meta));
        }

        fit.report.rss_path.push_back(column_rss(basis, data.y, beta));
    }

    fit.report.final_rss = fit.report.rss_path.back();

    MarsModel model;
    model.d = d;
    model.intercept = beta[0];
    double cmax = std::fabs(beta[0]);
    for (std::size_t g = 1; g < metas.size(); ++g) {
        MarsTerm term = metas[g].term;
        term.beta = beta[g];
        cmax = std::max(cmax, std::fabs(beta[g]));
        model.terms.push_back(std::move(term));
    }
    model.coef_bound = std::max(1.0, cmax);
    fit.model = std::move(model);
    return fit;
}

MarsFit backward_deletion(const MarsModel& model, const Dataset& data, std::size_t n_delete) {
    if (n_delete > model.terms.size())
        throw std::invalid_argument("backward_deletion: fewer terms than deletions");
    if (data.n == 0 || data.d != model.d)
        throw std::invalid_argument("backward_deletion: dataset does not match model");

    std::vector<MarsTerm> terms = model.terms;
    const std::size_t n = data.n;
    MarsFit fit;

    auto build = [&](const std::vector<MarsTerm>& ts, std::size_t skip) {
        const bool skipping = skip < ts.size();
        Matrix b(n, ts.size() + 1 - (skipping ? 1 : 0));
        for (std::size_t i = 0; i < n; ++i) {
            double* row = b.row(i);
            row[0] = 1.0;
            std::size_t c = 1;
            for (std::size_t k = 0; k < ts.size(); ++k) {
                if (k == skip) continue;
                row[c++] = eval_basis(ts[k], data.point(i));
            }
        }
        return b;
    };

    std::vector<double> beta;
    {
        Matrix b = build(terms, terms.size());
        fit.report.rss_path.push_back(column_rss(b, data.y, beta));
    }

    for (std::size_t step = 0; step < n_delete; ++step) {
        double best_rss = 0.0;
        std::size_t best_k = terms.size();
        for (std::size_t k = 0; k < terms.size(); ++k) {
            Matrix b = build(terms, k);
            const double rss = column_rss(b, data.y, beta);
            if (best_k == terms.size() || rss < best_rss) {
                best_rss = rss;
                best_k = k;
            }
        }
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(best_k));
        fit.report.rss_path.push_back(best_rss);
    }

    Matrix b = build(terms, terms.size());
    fit.report.final_rss = column_rss(b, data.y, beta);

    MarsModel out;
    out.d = model.d;
    out.intercept = beta[0];
    double cmax = std::fabs(beta[0]);
    for (std::size_t k = 0; k < terms.size(); ++k) {
        terms[k].beta = beta[k + 1];
        cmax = std::max(cmax, std::fabs(beta[k + 1]));
    }
    out.terms = std::move(terms);
    out.coef_bound = std::max(1.0, cmax);
    fit.model = std::move(out);
    return fit;
}

std::string mars_to_json(const MarsModel& model) {
    nlohmann::json j;
    j["d"] = model.d;
    j["intercept"] = model.intercept;
    j["C"] = model.coef_bound;
    nlohmann::json terms = nlohmann::json::array();
    for (const MarsTerm& t : model.terms) {
        nlohmann::json tj;
        tj["beta"] = t.beta;
        std::vector<std::size_t> coords1;
        for (std::size_t c : t.coords) coords1.push_back(c + 1);
        tj["coords"] = coords1;
        tj["signs"] = t.signs;
        tj["knots"] = t.knots;
        tj["degree"] = t.degree;
        terms.push_back(std::move(tj));
    }
    j["terms"] = std::move(terms);
    return j.dump(2);
}

MarsModel mars_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MarsModel model;
    model.intercept = j.at("intercept").get<double>();
    model.coef_bound = j.value("C", 1.0);
    std::size_t max_coord = 1;
    for (const auto& tj : j.at("terms")) {
        MarsTerm t;
        t.beta = tj.at("beta").get<double>();
        for (std::size_t c : tj.at("coords").get<std::vector<std::size_t>>()) {
            if (c == 0) throw std::runtime_error("mars json: coords are 1-based");
            t.coords.push_back(c - 1);
            max_coord = std::max(max_coord, c);
        }
        t.signs = tj.at("signs").get<std::vector<int>>();
        t.knots = tj.at("knots").get<std::vector<double>>();
        t.degree = tj.value("degree", 1);
        if (t.signs.size() != t.coords.size() || t.knots.size() != t.coords.size())
            throw std::runtime_error("mars json: factor arrays disagree in length");
        for (int s : t.signs)
            if (s != 1 && s != -1) throw std::runtime_error("mars json: signs must be +-1");
        if (t.degree < 1) throw std::runtime_error("mars json: degree must be positive");
        model.terms.push_back(std::move(t));
    }
    model.d = j.value("d", max_coord);
    if (model.d < max_coord) throw std::runtime_error("mars json: d smaller than used coords");
    return model;
}

void save_mars(const MarsModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mars: cannot open " + path);
    out << mars_to_json(model) << "\n";
}

MarsModel load_mars(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mars: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return mars_from_json(ss.str());
}

} // namespace splinet
