#include "splinet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "splinet/rng.hpp"

namespace splinet {

namespace {

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void check_widths(const std::vector<std::size_t>& widths) {
    if (widths.size() < 2) throw std::invalid_argument("init: need input and output widths");
    for (std::size_t w : widths)
        if (w == 0) throw std::invalid_argument("init: zero width");
}

template <typename WeightDraw, typename ShiftDraw>
ReluNetwork init_net(const std::vector<std::size_t>& widths, Rng& rng, WeightDraw draw_w,
                     ShiftDraw draw_v) {
    check_widths(widths);
    std::vector<Layer> layers;
    layers.reserve(widths.size() - 1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t rows = widths[l + 1];
        const std::size_t cols = widths[l];
        const double b = glorot_bound(cols, rows);
        Layer lay;
        lay.w = Matrix(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) lay.w(i, j) = draw_w(rng, b);
        const bool is_output = l + 2 == widths.size();
        if (!is_output) {
            lay.v.assign(rows, 0.0);
            for (std::size_t i = 0; i < rows; ++i) lay.v[i] = draw_v(rng, b);
        }
        layers.push_back(std::move(lay));
    }
    return ReluNetwork(widths, std::move(layers));
}

} // namespace

ReluNetwork init_glorot_modified(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    Rng rng(seed);
    auto sym = [](Rng& r, double b) { return r.uniform(-b, b); };
    return init_net(widths, rng, sym, sym);
}

ReluNetwork init_increasing_glorot(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    Rng rng(seed);
    auto pos = [](Rng& r, double b) { return r.uniform(0.0, b); };
    return init_net(widths, rng, pos, pos);
}

std::size_t parameter_count(const ReluNetwork& net) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Layer& lay = net.layer(l);
        n += lay.w.rows() * lay.w.cols();
        if (l + 1 < net.layer_count()) n += lay.v.size();
    }
    return n;
}

std::vector<double> get_parameters(const ReluNetwork& net) {
    std::vector<double> out;
    out.reserve(parameter_count(net));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Layer& lay = net.layer(l);
        out.insert(out.end(), lay.w.data().begin(), lay.w.data().end());
        if (l + 1 < net.layer_count()) out.insert(out.end(), lay.v.begin(), lay.v.end());
    }
    return out;
}

void set_parameters(ReluNetwork& net, const std::vector<double>& params) {
    if (params.size() != parameter_count(net))
        throw std::invalid_argument("set_parameters: size mismatch");
    std::vector<Layer> layers;
    layers.reserve(net.layer_count());
    std::size_t pos = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Layer lay = net.layer(l);
        std::copy(params.begin() + pos, params.begin() + pos + lay.w.data().size(),
                  lay.w.data().begin());
        pos += lay.w.data().size();
        if (l + 1 < net.layer_count()) {
            std::copy(params.begin() + pos, params.begin() + pos + lay.v.size(), lay.v.begin());
            pos += lay.v.size();
        }
        layers.push_back(std::move(lay));
    }
    net = ReluNetwork(net.widths(), std::move(layers));
}

namespace {

// Per-sample reverse pass working on raw parameter/gradient slices.  Layout
// offsets are recomputed cheaply; nets here are small and dense.
struct BackpropWork {
    std::vector<double> acts;  // post-activations, all layers, flat
    std::vector<double> delta; // current layer adjoint
    std::vector<double> next;  // next adjoint
};

double batch_loss_grad(const ReluNetwork& net, const Dataset& data,
                       const std::vector<std::size_t>& rows, std::vector<double>& grad,
                       BackpropWork& wk) {
    const std::size_t L1 = net.layer_count();
    const auto& widths = net.widths();
    if (net.output_dim() != 1)
        throw std::invalid_argument("loss_and_gradient: scalar output required");
    if (rows.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");

    std::vector<std::size_t> act_off(L1 + 1);
    for (std::size_t l = 0; l < L1; ++l) act_off[l + 1] = act_off[l] + widths[l];
    wk.acts.resize(act_off[L1] + 1);

    std::vector<std::size_t> par_off(L1);
    std::size_t pos = 0;
    for (std::size_t l = 0; l < L1; ++l) {
        par_off[l] = pos;
        pos += widths[l + 1] * widths[l] + (l + 1 < L1 ? widths[l + 1] : 0);
    }
    grad.assign(pos, 0.0);

    const std::size_t wmax = *std::max_element(widths.begin(), widths.end());
    wk.delta.resize(wmax);
    wk.next.resize(wmax);

    const double inv_b = 1.0 / static_cast<double>(rows.size());
    double loss = 0.0;

    for (std::size_t r : rows) {
        const double* x = data.point(r);
        double* a0 = wk.acts.data();
        std::copy(x, x + widths[0], a0);
        for (std::size_t l = 0; l < L1; ++l) {
            const Layer& lay = net.layer(l);
            const double* in = wk.acts.data() + act_off[l];
            double* out = wk.acts.data() + act_off[l + 1];
            const bool is_output = l + 1 == L1;
            for (std::size_t i = 0; i < widths[l + 1]; ++i) {
                double z = 0.0;
                const double* wrow = lay.w.row(i);
                for (std::size_t j = 0; j < widths[l]; ++j) z += wrow[j] * in[j];
                if (!is_output) {
                    z -= lay.v[i];
                    if (z < 0.0) z = 0.0;
                }
                out[i] = z;
            }
        }
        const double pred = wk.acts[act_off[L1]];
        const double err = pred - data.y[r];
        loss += err * err * inv_b;

        // Adjoint of the prediction under (1/B) sum (y - f)^2.
        wk.delta[0] = 2.0 * err * inv_b;
        for (std::size_t l = L1; l-- > 0;) {
            const Layer& lay = net.layer(l);
            const double* in = wk.acts.data() + act_off[l];
            const std::size_t rows_l = widths[l + 1];
            const std::size_t cols_l = widths[l];
            double* gw = grad.data() + par_off[l];
            double* gv = gw + rows_l * cols_l;
            const bool is_output = l + 1 == L1;
            std::fill(wk.next.begin(), wk.next.begin() + cols_l, 0.0);
            for (std::size_t i = 0; i < rows_l; ++i) {
                double di = wk.delta[i];
                if (!is_output) {
                    // ReLU gate; subgradient at exactly 0 is 0.
                    if (wk.acts[act_off[l + 1] + i] <= 0.0) continue;
                    gv[i] -= di; // z = Wx - v
                }
                if (di == 0.0) continue;
                const double* wrow = lay.w.row(i);
                double* grow = gw + i * cols_l;
                for (std::size_t j = 0; j < cols_l; ++j) {
                    grow[j] += di * in[j];
                    wk.next[j] += di * wrow[j];
                }
            }
            std::swap(wk.delta, wk.next);
        }
    }
    return loss;
}

} // namespace

double loss_and_gradient(const ReluNetwork& net, const Dataset& data,
                         const std::vector<std::size_t>& rows, std::vector<double>& grad) {
    BackpropWork wk;
    return batch_loss_grad(net, data, rows, grad, wk);
}

double loss_and_gradient(const ReluNetwork& net, const Dataset& data, std::vector<double>& grad) {
    std::vector<std::size_t> rows(data.n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return loss_and_gradient(net, data, rows, grad);
}

double empirical_loss(const ReluNetwork& net, const Dataset& data) {
    if (data.n == 0) throw std::invalid_argument("empirical_loss: empty dataset");
    std::vector<double> a, b;
    double out = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        net.eval(data.point(i), &out, a, b);
        const double e = out - data.y[i];
        acc += e * e;
    }
    return acc / static_cast<double>(data.n);
}

namespace {

struct RestartOutcome {
    ReluNetwork net;
    RestartTrace trace;
};

RestartOutcome run_restart(const Dataset& data, const TrainConfig& cfg, std::size_t restart) {
    RestartOutcome out;
    out.net = cfg.initializer == Init::glorot_modified
                  ? init_glorot_modified(cfg.widths, mix_seed(cfg.seed, 2 * restart))
                  : init_increasing_glorot(cfg.widths, mix_seed(cfg.seed, 2 * restart));
    Rng shuffle_rng = derive_rng(cfg.seed, 2 * restart + 1);

    std::vector<double> theta = get_parameters(out.net);
    const std::size_t P = theta.size();
    std::vector<double> m(P, 0.0), v(P, 0.0), grad;
    BackpropWork wk;

    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> batch;

    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double pow1 = 1.0, pow2 = 1.0;
    std::size_t t = 0;
    const std::size_t bsz = std::min<std::size_t>(std::max<std::size_t>(cfg.batch_size, 1), data.n);

    ReluNetwork work = out.net;
    for (std::size_t epoch = 0; epoch < cfg.epochs && !out.trace.failed; ++epoch) {
        for (std::size_t i = data.n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        for (std::size_t start = 0; start < data.n; start += bsz) {
            const std::size_t end = std::min(start + bsz, data.n);
            batch.assign(order.begin() + start, order.begin() + end);
            set_parameters(work, theta);
            const double loss = batch_loss_grad(work, data, batch, grad, wk);
            if (!std::isfinite(loss)) {
                out.trace.failed = true;
                break;
            }
            ++t;
            pow1 *= beta1;
            pow2 *= beta2;
            const double lr_t = cfg.learning_rate / (1.0 + cfg.decay * static_cast<double>(t));
            const double c1 = 1.0 / (1.0 - pow1);
            const double c2 = 1.0 / (1.0 - pow2);
            bool finite = true;
            for (std::size_t p = 0; p < P; ++p) {
                const double g = grad[p];
                m[p] = beta1 * m[p] + (1.0 - beta1) * g;
                v[p] = beta2 * v[p] + (1.0 - beta2) * g * g;
                theta[p] -= lr_t * (m[p] * c1) / (std::sqrt(v[p] * c2) + eps);
                finite = finite && std::isfinite(theta[p]);
            }
            if (!finite) {
                out.trace.failed = true;
                break;
            }
        }
        if (!out.trace.failed) {
            set_parameters(work, theta);
            out.trace.epoch_loss.push_back(empirical_loss(work, data));
        }
    }

    if (!out.trace.failed) {
        set_parameters(out.net, theta);
        out.trace.final_loss = out.trace.epoch_loss.empty() ? empirical_loss(out.net, data)
                                                            : out.trace.epoch_loss.back();
        if (!std::isfinite(out.trace.final_loss)) out.trace.failed = true;
    }
    return out;
}

} // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    if (data.n == 0) throw std::invalid_argument("train: empty dataset");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (cfg.restarts < 1) throw std::invalid_argument("train: need at least one restart");
    check_widths(cfg.widths);
    if (cfg.widths.front() != data.d)
        throw std::invalid_argument("train: architecture input width does not match data");
    if (cfg.widths.back() != 1)
        throw std::invalid_argument("train: architecture must have scalar output");

    std::vector<RestartOutcome> outcomes(cfg.restarts);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        // A throw may not escape the parallel region; record it as divergence.
        try {
            outcomes[r] = run_restart(data, cfg, r);
        } catch (const std::exception&) {
            outcomes[r].trace.failed = true;
        }
    }

    TrainResult result;
    result.report.restarts.reserve(cfg.restarts);
    std::size_t best = cfg.restarts;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        result.report.restarts.push_back(outcomes[r].trace);
        if (outcomes[r].trace.failed) continue;
        if (best == cfg.restarts || outcomes[r].trace.final_loss < outcomes[best].trace.final_loss)
            best = r;
    }
    if (best == cfg.restarts) throw std::runtime_error("train: every restart diverged");
    result.report.best = best;
    result.report.best_loss = outcomes[best].trace.final_loss;
    result.net = std::move(outcomes[best].net);
    return result;
}

std::string report_to_json(const TrainReport& report) {
    nlohmann::json j;
    j["best"] = report.best;
    j["best_loss"] = report.best_loss;
    nlohmann::json rs = nlohmann::json::array();
    for (const RestartTrace& t : report.restarts) {
        nlohmann::json r;
        r["final_loss"] = t.final_loss;
        r["failed"] = t.failed;
        r["epoch_loss"] = t.epoch_loss;
        rs.push_back(std::move(r));
    }
    j["restarts"] = std::move(rs);
    return j.dump(2);
}

void save_report(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_report: cannot open " + path);
    out << report_to_json(report) << "\n";
}

} // namespace splinet
