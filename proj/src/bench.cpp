#include "splinet/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "splinet/faber_schauder.hpp"
#include "splinet/mars.hpp"
#include "splinet/rng.hpp"

namespace splinet {

SimId parse_sim(const std::string& name) {
    if (name == "sim1") return SimId::sim1;
    if (name == "sim2") return SimId::sim2;
    if (name == "sim3") return SimId::sim3;
    if (name == "sim4") return SimId::sim4;
    if (name == "sim5") return SimId::sim5;
    if (name == "sim6") return SimId::sim6;
    if (name == "sim7") return SimId::sim7;
    throw std::invalid_argument("unknown model id: " + name);
}

std::string sim_name(SimId id) {
    switch (id) {
    case SimId::sim1: return "sim1";
    case SimId::sim2: return "sim2";
    case SimId::sim3: return "sim3";
    case SimId::sim4: return "sim4";
    case SimId::sim5: return "sim5";
    case SimId::sim6: return "sim6";
    case SimId::sim7: return "sim7";
    }
    throw std::logic_error("sim_name: bad id");
}

std::size_t sim_default_d(SimId id) {
    switch (id) {
    case SimId::sim1:
    case SimId::sim2:
    case SimId::sim3:
    case SimId::sim4: return 1;
    case SimId::sim5: return 2;
    case SimId::sim6:
    case SimId::sim7: return 0; // caller must choose
    }
    throw std::logic_error("sim_default_d: bad id");
}

std::size_t resolve_d(SimId id, std::size_t requested) {
    const std::size_t fixed = sim_default_d(id);
    if (fixed != 0) {
        if (requested != 0 && requested != fixed)
            throw std::invalid_argument(sim_name(id) + " has fixed dimension " +
                                        std::to_string(fixed));
        return fixed;
    }
    if (requested == 0)
        throw std::invalid_argument(sim_name(id) + " requires an explicit dimension");
    if (id == SimId::sim7 && requested < 10)
        throw std::invalid_argument("sim7 needs d >= 10 (10 active coordinates)");
    return requested;
}

double sim_sigma(SimId id) { return id == SimId::sim2 ? 0.2 : 0.0; }

kernels::PointFn sim_fn(SimId id, std::size_t d) {
    switch (id) {
    case SimId::sim1:
    case SimId::sim2: return [](const double* x) { return x[0] * x[0]; };
    case SimId::sim3:
        return [](const double* x) { return std::sin(10.0 * std::numbers::pi * x[0]); };
    case SimId::sim4: return [](const double* x) { return x[0] < 0.5 ? -0.5 : 0.5; };
    case SimId::sim5: {
        return [](const double* x) {
            const double z = (x[0] + x[1]) - 1.0;
            return z > 0.0 ? z : 0.0;
        };
    }
    case SimId::sim6: {
        const double shift = static_cast<double>(d) / 3.0;
        return [d, shift](const double* x) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += x[j] * x[j];
            const double z = s - shift;
            return z > 0.0 ? z : 0.0;
        };
    }
    case SimId::sim7: {
        return [](const double* x) {
            double s = 0.0;
            for (std::size_t j = 0; j < 10; ++j) s += x[j] * x[j];
            const double z = s - 10.0 / 3.0;
            return z > 0.0 ? z : 0.0;
        };
    }
    }
    throw std::logic_error("sim_fn: bad id");
}

Dataset generate(SimId id, std::size_t n, std::size_t d, std::uint64_t seed) {
    d = resolve_d(id, d);
    if (n == 0) throw std::invalid_argument("generate: n must be positive");
    const double sigma = sim_sigma(id);
    const kernels::PointFn f0 = sim_fn(id, d);
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.x.resize(n * d);
    ds.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = ds.x.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) row[j] = rng.uniform();
        ds.y[i] = f0(row) + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
    }
    return ds;
}

Method parse_method(const std::string& name) {
    if (name == "mars") return Method::mars;
    if (name == "homars") return Method::homars;
    if (name == "fs") return Method::fs;
    if (name == "dnn") return Method::dnn;
    throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
    case Method::mars: return "mars";
    case Method::homars: return "homars";
    case Method::fs: return "fs";
    case Method::dnn: return "dnn";
    }
    throw std::logic_error("method_name: bad method");
}

MethodParams default_params(SimId id, Method method, std::size_t d) {
    MethodParams p;
    switch (id) {
    case SimId::sim1:
    case SimId::sim2:
        p.terms = 10;
        p.max_degree = 3;
        p.fs_resolution = 3;
        p.widths = {1, 5, 5, 5, 1};
        p.initializer = Init::increasing_glorot;
        break;
    case SimId::sim3:
    case SimId::sim4:
        p.terms = 50;
        p.max_degree = 5;
        p.fs_resolution = 6;
        p.widths.assign(12, 10);
        p.widths.front() = 1;
        p.widths.back() = 1;
        p.initializer = Init::glorot_modified;
        break;
    case SimId::sim5:
        p.terms = 20;
        p.max_degree = 10;
        p.fs_resolution = 2;
        p.widths = {2, 1, 1};
        p.initializer = Init::increasing_glorot;
        break;
    case SimId::sim6:
    case SimId::sim7:
        p.terms = 30;
        p.max_degree = 10;
        p.fs_resolution = 2;
        p.widths.assign(17, 10);
        p.widths.front() = d;
        p.widths.back() = 1;
        p.initializer = Init::glorot_modified;
        break;
    }
    (void)method;
    return p;
}

std::string params_label(Method method, const MethodParams& p) {
    switch (method) {
    case Method::mars: return "M=" + std::to_string(p.terms);
    case Method::homars:
        return "K=" + std::to_string(p.max_degree) + ";M=" + std::to_string(p.terms);
    case Method::fs: return "M=" + std::to_string(p.fs_resolution);
    case Method::dnn: {
        std::string s = "L=" + std::to_string(p.widths.size() >= 2 ? p.widths.size() - 2 : 0);
        s += ";p=";
        for (std::size_t i = 0; i < p.widths.size(); ++i) {
            if (i) s += "-";
            s += std::to_string(p.widths[i]);
        }
        s += p.initializer == Init::increasing_glorot ? ";init=incr" : ";init=glorot";
        return s;
    }
    }
    throw std::logic_error("params_label: bad method");
}

namespace {

kernels::PointFn fit_predictor(const Dataset& data, Method method, const MethodParams& p,
                               std::uint64_t seed) {
    switch (method) {
    case Method::mars:
    case Method::homars: {
        MarsFitOptions opt;
        opt.iterations = std::max<std::size_t>(p.terms / 2, 1);
        opt.allow_repeats = method == Method::homars;
        opt.max_degree = method == Method::homars ? p.max_degree : 0;
        opt.seed = seed;
        MarsFit fit = forward_selection(data, opt);
        auto model = std::make_shared<MarsModel>(std::move(fit.model));
        return [model](const double* x) { return eval_model(*model, x); };
    }
    case Method::fs: {
        if (p.fs_resolution < 1)
            throw std::invalid_argument("fs resolution label must be >= 1");
        FsFit fit = fit_least_squares(data, p.fs_resolution - 1, 0.0);
        auto model = std::make_shared<FsModel>(std::move(fit.model));
        return [model](const double* x) { return eval_fs(*model, x); };
    }
    case Method::dnn: {
        TrainConfig cfg;
        cfg.widths = p.widths;
        cfg.learning_rate = p.learning_rate;
        cfg.decay = p.decay;
        cfg.epochs = p.epochs;
        cfg.batch_size = p.batch_size;
        cfg.restarts = p.restarts;
        cfg.initializer = p.initializer;
        cfg.seed = seed;
        TrainResult res = train(data, cfg);
        return kernels::as_point_fn(res.net);
    }
    }
    throw std::logic_error("fit_predictor: bad method");
}

struct RiskPair {
    double target = 0.0;
    double noisy = 0.0;
};

RiskPair risk_pair(const kernels::PointFn& predictor, SimId id, std::size_t d,
                   std::size_t test_n, std::uint64_t seed, double sigma) {
    if (test_n == 0) throw std::invalid_argument("prediction_risk: test_n must be positive");
    const kernels::PointFn f0 = sim_fn(id, d);
    Rng xrng = derive_rng(seed, 101);
    Rng erng = derive_rng(seed, 202);
    const std::size_t block = std::min<std::size_t>(test_n, 4096);
    std::vector<double> pts(block * d), eps(block), err(block), nerr(block);
    double acc_t = 0.0, acc_n = 0.0;
    std::size_t done = 0;
    while (done < test_n) {
        const std::size_t nb = std::min(block, test_n - done);
        for (std::size_t i = 0; i < nb * d; ++i) pts[i] = xrng.uniform();
        if (sigma > 0.0)
            for (std::size_t i = 0; i < nb; ++i) eps[i] = sigma * erng.normal();
        else
            std::fill(eps.begin(), eps.begin() + nb, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::size_t i = 0; i < nb; ++i) {
            const double* x = pts.data() + i * d;
            const double e = predictor(x) - f0(x);
            err[i] = e * e;
            const double en = e - eps[i];
            nerr[i] = en * en;
        }
        for (std::size_t i = 0; i < nb; ++i) {
            acc_t += err[i];
            acc_n += nerr[i];
        }
        done += nb;
    }
    return {acc_t / static_cast<double>(test_n), acc_n / static_cast<double>(test_n)};
}

} // namespace

double prediction_risk(const kernels::PointFn& predictor, SimId id, std::size_t d,
                       std::size_t test_n, std::uint64_t seed) {
    d = resolve_d(id, d);
    return risk_pair(predictor, id, d, test_n, seed, 0.0).target;
}

ExperimentSummary run_experiment(const ExperimentSpec& spec) {
    if (spec.repetitions < 1) throw std::invalid_argument("run_experiment: repetitions >= 1");
    const std::size_t d = resolve_d(spec.model, spec.d);
    const MethodParams params =
        spec.use_default_params ? default_params(spec.model, spec.method, d) : spec.params;
    const double sigma = sim_sigma(spec.model);

    ExperimentSummary sum;
    sum.model = sim_name(spec.model);
    sum.method = method_name(spec.method);
    sum.params = params_label(spec.method, params);
    sum.d = d;
    sum.n = spec.n;
    sum.repetitions = spec.repetitions;
    sum.seed = spec.seed;
    sum.sigma = sigma;
    sum.reps.resize(spec.repetitions);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t r = 0; r < spec.repetitions; ++r) {
        RepetitionResult& out = sum.reps[r];
        try {
            const Dataset data = generate(spec.model, spec.n, d, mix_seed(spec.seed, 1000 + r));
            const kernels::PointFn predictor =
                fit_predictor(data, spec.method, params, mix_seed(spec.seed, 5000 + r));
            const RiskPair risks = risk_pair(predictor, spec.model, d, spec.test_n,
                                             mix_seed(spec.seed, 2000000 + r), sigma);
            out.risk = risks.target;
            out.noisy_risk = risks.noisy;
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
        }
    }

    double k = 0.0;
    for (const RepetitionResult& r : sum.reps) {
        if (r.failed) {
            ++sum.failures;
            continue;
        }
        k += 1.0;
        sum.mean += r.risk;
        sum.noisy_mean += r.noisy_risk;
    }
    if (k > 0.0) {
        sum.mean /= k;
        sum.noisy_mean /= k;
    }
    if (k > 1.0) {
        double s = 0.0, sn = 0.0;
        for (const RepetitionResult& r : sum.reps) {
            if (r.failed) continue;
            s += (r.risk - sum.mean) * (r.risk - sum.mean);
            sn += (r.noisy_risk - sum.noisy_mean) * (r.noisy_risk - sum.noisy_mean);
        }
        sum.stddev = std::sqrt(s / (k - 1.0));
        sum.noisy_stddev = std::sqrt(sn / (k - 1.0));
    }
    return sum;
}

namespace {

std::string sci3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

void csv_row(std::string& out, const ExperimentSummary& s, const std::string& method,
             double mean, double stddev) {
    out += s.model;
    out += ',';
    out += method;
    out += ',';
    out += s.params;
    out += ',';
    out += sci3(mean);
    out += ',';
    out += sci3(stddev);
    out += ',';
    out += std::to_string(s.n);
    out += ',';
    out += std::to_string(s.repetitions);
    out += ',';
    out += std::to_string(s.seed);
    out += '\n';
}

} // namespace

std::string emit_csv(const std::vector<ExperimentSummary>& summaries) {
    std::string out = "model,method,params,mean,std,n,reps,seed\n";
    for (const ExperimentSummary& s : summaries) {
        csv_row(out, s, s.method, s.mean, s.stddev);
        if (s.sigma > 0.0) csv_row(out, s, s.method + "+noise", s.noisy_mean, s.noisy_stddev);
    }
    return out;
}

std::string emit_human(const std::vector<ExperimentSummary>& summaries) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-6s %-12s %-28s %-10s %-10s %5s %5s %5s\n", "model",
                  "method", "params", "mean", "std", "n", "reps", "fail");
    out += line;
    for (const ExperimentSummary& s : summaries) {
        std::snprintf(line, sizeof line, "%-6s %-12s %-28s %-10s %-10s %5zu %5zu %5zu\n",
                      s.model.c_str(), s.method.c_str(), s.params.c_str(), sci3(s.mean).c_str(),
                      sci3(s.stddev).c_str(), s.n, s.repetitions, s.failures);
        out += line;
        if (s.sigma > 0.0) {
            const std::string noisy = s.method + "+noise";
            std::snprintf(line, sizeof line, "%-6s %-12s %-28s %-10s %-10s %5zu %5zu %5zu\n",
                          s.model.c_str(), noisy.c_str(), s.params.c_str(),
                          sci3(s.noisy_mean).c_str(), sci3(s.noisy_stddev).c_str(), s.n,
                          s.repetitions, s.failures);
            out += line;
        }
    }
    return out;
}

} // namespace splinet
