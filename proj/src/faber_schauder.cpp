#include "splinet/faber_schauder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "splinet/kernels.hpp"
#include "splinet/rng.hpp"

namespace splinet {

namespace {

bool key_less(const FsKey& a, const FsKey& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        const long ra = a[i].rank(), rb = b[i].rank();
        if (ra != rb) return ra < rb;
    }
    return a.size() < b.size();
}

void check_resolution(int resolution) {
    if (resolution < -1 || resolution > 40)
        throw std::invalid_argument("faber-schauder: resolution out of range");
}

// Number of univariate basis members through level M.
std::size_t base_count(int resolution) {
    if (resolution < 0) return 2;
    return 1 + (static_cast<std::size_t>(1) << (resolution + 1));
}

} // namespace

double FsModel::coeff(const FsKey& key) const {
    auto it = std::lower_bound(coeffs.begin(), coeffs.end(), key,
                               [](const auto& e, const FsKey& k) { return key_less(e.first, k); });
    if (it != coeffs.end() && it->first == key) return it->second;
    return 0.0;
}

double FsModel::max_abs_coeff() const {
    double best = 0.0;
    for (const auto& e : coeffs) best = std::max(best, std::fabs(e.second));
    return best;
}

double eval_base(const FsIndex& idx, double x) {
    if (idx.is_const()) return 1.0;
    if (idx.is_ramp()) return x;
    const double h = std::ldexp(1.0, -idx.tag); // 2^-j
    const double left = idx.k * h;
    const double tri = std::min(x - left, left + h - x);
    return tri > 0.0 ? std::exp2(0.5 * idx.tag) * tri : 0.0;
}

double eval_fs(const FsModel& model, const double* x) {
    double acc = 0.0;
    for (const auto& e : model.coeffs) {
        double prod = e.second;
        for (std::size_t a = 0; a < e.first.size() && prod != 0.0; ++a)
            prod *= eval_base(e.first[a], x[a]);
        acc += prod;
    }
    return acc;
}

double eval_fs(const FsModel& model, const std::vector<double>& x) {
    if (x.size() != model.d) throw std::invalid_argument("eval_fs: dimension mismatch");
    return eval_fs(model, x.data());
}

std::vector<FsIndex> index_set(int resolution) {
    check_resolution(resolution);
    std::vector<FsIndex> out;
    out.reserve(base_count(resolution));
    out.push_back(FsIndex{-2, 0});
    out.push_back(FsIndex{-1, 0});
    for (int j = 0; j <= resolution; ++j)
        for (int k = 0; k < (1 << j); ++k) out.push_back(FsIndex{j, k});
    return out;
}

std::vector<FsKey> key_set(int resolution, std::size_t d) {
    if (d == 0) throw std::invalid_argument("key_set: d must be positive");
    const std::vector<FsIndex> base = index_set(resolution);
    const std::size_t g = base.size();
    double total_d = std::pow(static_cast<double>(g), static_cast<double>(d));
    if (total_d > 2e7) throw std::invalid_argument("key_set: index set too large");
    const std::size_t total = static_cast<std::size_t>(total_d + 0.5);

    std::vector<FsKey> keys(total);
    std::vector<std::size_t> digit(d, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        FsKey key(d);
        for (std::size_t a = 0; a < d; ++a) key[a] = base[digit[a]];
        keys[flat] = std::move(key);
        for (std::size_t a = d; a-- > 0;) {
            if (++digit[a] < g) break;
            digit[a] = 0;
        }
    }
    return keys;
}

FsModel coeffs_from_function(const std::function<double(const double*)>& f, int resolution,
                             std::size_t d) {
    check_resolution(resolution);
    if (d == 0) throw std::invalid_argument("coeffs_from_function: d must be positive");
    const int m = std::max(resolution, -1);
    // Grid pitch 2^-(M+1); for M = -1 the grid is just {0, 1}.
    const std::size_t g = (static_cast<std::size_t>(1) << (m + 1)) + 1;
    double total_d = std::pow(static_cast<double>(g), static_cast<double>(d));
    if (total_d > 2e7) throw std::invalid_argument("coeffs_from_function: grid too large");
    const std::size_t total = static_cast<std::size_t>(total_d + 0.5);

    // Tabulate f on the dyadic grid, axis d-1 fastest.
    std::vector<double> table(total);
    {
        std::vector<double> x(d);
        std::vector<std::size_t> digit(d, 0);
        const double pitch = std::ldexp(1.0, -(m + 1));
        for (std::size_t flat = 0; flat < total; ++flat) {
            for (std::size_t a = 0; a < d; ++a) x[a] = static_cast<double>(digit[a]) * pitch;
            table[flat] = f(x.data());
            for (std::size_t a = d; a-- > 0;) {
                if (++digit[a] < g) break;
                digit[a] = 0;
            }
        }
    }

    // Separable second-difference transform, one axis at a time.  The
    // univariate map sends grid values to coefficients in canonical order;
    // both have g entries, so the table shape never changes.
    std::vector<double> line(g), cline(g);
    for (std::size_t axis = 0; axis < d; ++axis) {
        std::size_t stride = 1;
        for (std::size_t a = axis + 1; a < d; ++a) stride *= g;
        for (std::size_t start = 0; start < total; ++start) {
            if ((start / stride) % g != 0) continue; // not the head of a line
            for (std::size_t i = 0; i < g; ++i) line[i] = table[start + i * stride];
            cline[0] = line[0];
            cline[1] = line[g - 1] - line[0];
            std::size_t pos = 2;
            for (int j = 0; j <= m; ++j) {
                const std::size_t step = static_cast<std::size_t>(1) << (m + 1 - j);
                const double scale = -std::exp2(0.5 * j);
                for (int k = 0; k < (1 << j); ++k) {
                    const std::size_t left = static_cast<std::size_t>(k) * step;
                    cline[pos++] =
                        scale * (line[left + step] - 2.0 * line[left + step / 2] + line[left]);
                }
            }
            for (std::size_t i = 0; i < g; ++i) table[start + i * stride] = cline[i];
        }
    }

    FsModel model;
    model.d = d;
    model.resolution = resolution;
    const std::vector<FsIndex> base = index_set(resolution);
    std::vector<std::size_t> digit(d, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (table[flat] != 0.0) {
            FsKey key(d);
            for (std::size_t a = 0; a < d; ++a) key[a] = base[digit[a]];
            model.coeffs.emplace_back(std::move(key), table[flat]);
        }
        for (std::size_t a = d; a-- > 0;) {
            if (++digit[a] < g) break;
            digit[a] = 0;
        }
    }
    return model;
}

Matrix design_matrix(const Dataset& data, int resolution) {
    const std::vector<FsKey> keys = key_set(resolution, data.d);
    if (keys.size() > 200000)
        throw std::invalid_argument("design_matrix: basis too large for a dense design");
    Matrix out(data.n, keys.size());
    kernels::fill_rows(out, [&](std::size_t i, double* row) {
        const double* x = data.point(i);
        for (std::size_t c = 0; c < keys.size(); ++c) {
            double prod = 1.0;
            for (std::size_t a = 0; a < keys[c].size() && prod != 0.0; ++a)
                prod *= eval_base(keys[c][a], x[a]);
            row[c] = prod;
        }
    });
    return out;
}

FsFit fit_least_squares(const Dataset& data, int resolution, double alpha) {
    if (data.n == 0) throw std::invalid_argument("fit_least_squares: empty dataset");
    const Matrix design = design_matrix(data, resolution);
    const std::size_t n = design.rows(), m = design.cols();

    Matrix gram(m, m);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = design.row(i);
        for (std::size_t a = 0; a < m; ++a) {
            rhs[a] += row[a] * data.y[i];
            for (std::size_t c = a; c < m; ++c) gram(a, c) += row[a] * row[c];
        }
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t c = 0; c < a; ++c) gram(a, c) = gram(c, a);

    std::vector<double> beta;
    FsFit fit;
    fit.alpha_used = solve_normal_equations(gram, rhs, beta, alpha);

    const std::vector<FsKey> keys = key_set(resolution, data.d);
    fit.model.d = data.d;
    fit.model.resolution = resolution;
    for (std::size_t c = 0; c < m; ++c)
        if (beta[c] != 0.0) fit.model.coeffs.emplace_back(keys[c], beta[c]);
    return fit;
}

FsModel fit_kaczmarz(const Dataset& data, int resolution, std::size_t iterations,
                     std::uint64_t seed) {
    if (data.n == 0) throw std::invalid_argument("fit_kaczmarz: empty dataset");
    const Matrix design = design_matrix(data, resolution);
    const std::size_t n = design.rows(), m = design.cols();

    std::vector<double> norm2(n), cum(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = design.row(i);
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += row[c] * row[c];
        norm2[i] = s;
        total += s;
        cum[i] = total;
    }
    if (total <= 0.0) throw std::invalid_argument("fit_kaczmarz: zero design matrix");

    std::vector<double> beta(m, 0.0);
    Rng rng(seed);
    for (std::size_t it = 0; it < iterations; ++it) {
        const double u = rng.uniform() * total;
        const std::size_t i = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        const std::size_t row_i = std::min(i, n - 1);
        if (norm2[row_i] == 0.0) continue;
        const double* row = design.row(row_i);
        double dot = 0.0;
        for (std::size_t c = 0; c < m; ++c) dot += row[c] * beta[c];
        const double step = (data.y[row_i] - dot) / norm2[row_i];
        for (std::size_t c = 0; c < m; ++c) beta[c] += step * row[c];
    }

    const std::vector<FsKey> keys = key_set(resolution, data.d);
    FsModel model;
    model.d = data.d;
    model.resolution = resolution;
    for (std::size_t c = 0; c < m; ++c)
        if (beta[c] != 0.0) model.coeffs.emplace_back(keys[c], beta[c]);
    return model;
}

MarsModel fs_to_mars(const FsModel& model) {
    // Each univariate factor is a short hinge combination:
    //   1      -> (no factor)
    //   x      -> (x - 0)_+ on [0,1]
    //   psi_jk -> 2^(j/2) (x-a)_+ - 2^(j/2+1) (x-m)_+ + 2^(j/2) (x-b)_+
    // with a = k/2^j, m = (2k+1)/2^(j+1), b = (k+1)/2^j.  Distributing the
    // product splits a key into at most 3^d hinge products; expansions of
    // different keys are kept as separate terms, so the term count is at
    // most 3^d per key and each coefficient is the key's coefficient times
    // factor weights, bounded by 2^(d(M+2)/2) in absolute value overall.
    struct Piece {
        double weight;
        bool has_hinge;
        double knot;
    };
    auto pieces_of = [](const FsIndex& idx) {
        std::vector<Piece> out;
        if (idx.is_const()) {
            out.push_back({1.0, false, 0.0});
        } else if (idx.is_ramp()) {
            out.push_back({1.0, true, 0.0});
        } else {
            const double h = std::ldexp(1.0, -idx.tag);
            const double a = idx.k * h, b = a + h, mid = a + 0.5 * h;
            const double s = std::exp2(0.5 * idx.tag);
            out.push_back({s, true, a});
            out.push_back({-2.0 * s, true, mid});
            out.push_back({s, true, b});
        }
        return out;
    };

    MarsModel out;
    out.d = model.d;
    out.intercept = 0.0;
    double cmax = 0.0;

    for (const auto& entry : model.coeffs) {
        const FsKey& key = entry.first;
        std::vector<std::vector<Piece>> factor(key.size());
        for (std::size_t a = 0; a < key.size(); ++a) factor[a] = pieces_of(key[a]);

        std::vector<std::size_t> choice(key.size(), 0);
        while (true) {
            double w = entry.second;
            MarsTerm term;
            for (std::size_t a = 0; a < key.size(); ++a) {
                const Piece& p = factor[a][choice[a]];
                w *= p.weight;
                if (p.has_hinge) {
                    term.coords.push_back(a);
                    term.signs.push_back(1);
                    term.knots.push_back(p.knot);
                }
            }
            if (w != 0.0) {
                if (term.coords.empty()) {
                    out.intercept += w;
                } else {
                    term.beta = w;
                    cmax = std::max(cmax, std::fabs(w));
                    out.terms.push_back(std::move(term));
                }
            }
            bool done = true;
            for (std::size_t a = key.size(); a-- > 0;) {
                if (++choice[a] < factor[a].size()) {
                    done = false;
                    break;
                }
                choice[a] = 0;
            }
            if (done) break;
        }
    }

    cmax = std::max(cmax, std::fabs(out.intercept));
    out.coef_bound = std::max(1.0, cmax);
    return out;
}

double interpolation_check(const FsModel& model, const std::function<double(const double*)>& f,
                           int ell) {
    check_resolution(ell);
    const std::size_t d = model.d;
    const std::size_t g = (static_cast<std::size_t>(1) << (std::max(ell, -1) + 1)) + 1;
    double total_d = std::pow(static_cast<double>(g), static_cast<double>(d));
    if (total_d > 2e7) throw std::invalid_argument("interpolation_check: grid too large");
    const std::size_t total = static_cast<std::size_t>(total_d + 0.5);
    const double pitch = std::ldexp(1.0, -(std::max(ell, -1) + 1));

    double worst = 0.0;
    std::vector<double> x(d);
    std::vector<std::size_t> digit(d, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (std::size_t a = 0; a < d; ++a) x[a] = static_cast<double>(digit[a]) * pitch;
        worst = std::max(worst, std::fabs(eval_fs(model, x.data()) - f(x.data())));
        for (std::size_t a = d; a-- > 0;) {
            if (++digit[a] < g) break;
            digit[a] = 0;
        }
    }
    return worst;
}

std::string fs_to_json(const FsModel& model) {
    nlohmann::json j;
    j["M"] = model.resolution;
    j["d"] = model.d;
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& e : model.coeffs) {
        nlohmann::json cj;
        nlohmann::json lambda = nlohmann::json::array();
        for (const FsIndex& idx : e.first) {
            if (idx.is_const())
                lambda.push_back("phi");
            else if (idx.is_ramp())
                lambda.push_back("ramp");
            else
                lambda.push_back(nlohmann::json::array({"w", idx.tag, idx.k}));
        }
        cj["lambda"] = std::move(lambda);
        cj["beta"] = e.second;
        coeffs.push_back(std::move(cj));
    }
    j["coeffs"] = std::move(coeffs);
    return j.dump(2);
}

FsModel fs_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    FsModel model;
    model.resolution = j.at("M").get<int>();
    model.d = j.at("d").get<std::size_t>();
    check_resolution(model.resolution);
    if (model.d == 0) throw std::runtime_error("fs json: d must be positive");
    for (const auto& cj : j.at("coeffs")) {
        FsKey key;
        for (const auto& lj : cj.at("lambda")) {
            FsIndex idx;
            if (lj.is_string()) {
                const std::string s = lj.get<std::string>();
                if (s == "phi")
                    idx.tag = -2;
                else if (s == "ramp")
                    idx.tag = -1;
                else
                    throw std::runtime_error("fs json: unknown factor " + s);
            } else {
                if (!lj.is_array() || lj.size() != 3 || lj.at(0).get<std::string>() != "w")
                    throw std::runtime_error("fs json: wavelet factor must be [\"w\", j, k]");
                idx.tag = lj.at(1).get<int>();
                idx.k = lj.at(2).get<int>();
                if (idx.tag < 0 || idx.tag > model.resolution || idx.k < 0 ||
                    idx.k >= (1 << idx.tag))
                    throw std::runtime_error("fs json: wavelet index out of range");
            }
            key.push_back(idx);
        }
        if (key.size() != model.d) throw std::runtime_error("fs json: key length differs from d");
        model.coeffs.emplace_back(std::move(key), cj.at("beta").get<double>());
    }
    std::sort(model.coeffs.begin(), model.coeffs.end(),
              [](const auto& a, const auto& b) { return key_less(a.first, b.first); });
    return model;
}

void save_fs(const FsModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_fs: cannot open " + path);
    out << fs_to_json(model) << "\n";
}

FsModel load_fs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_fs: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return fs_from_json(ss.str());
}

} // namespace splinet
