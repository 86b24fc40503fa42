// Command-line front end: dataset generation, model fitting, compilation to
// certified ReLU networks, network training, bound verification and the
// simulation benchmarks.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splinet/bench.hpp"
#include "splinet/bounds.hpp"
#include "splinet/compiler.hpp"
#include "splinet/dataset.hpp"
#include "splinet/faber_schauder.hpp"
#include "splinet/mars.hpp"
#include "splinet/training.hpp"

namespace {

using nlohmann::json;
using namespace splinet;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text << (text.empty() || text.back() != '\n' ? "\n" : "");
    else
        write_file(out_path, text);
}

// --- gen ------------------------------------------------------------------

struct GenArgs {
    std::string model, out;
    std::size_t n = 1000, d = 0;
    std::uint64_t seed = 1;
};

void run_gen(const GenArgs& a) {
    const Dataset ds = generate(parse_sim(a.model), a.n, a.d, a.seed);
    write_csv(ds, a.out);
    std::printf("wrote %zu x %zu dataset to %s\n", ds.n, ds.d, a.out.c_str());
}

// --- fit ------------------------------------------------------------------

struct FitArgs {
    std::string data, method = "mars", out;
    std::size_t iterations = 5; // reflected pairs for mars/homars
    std::size_t max_degree = 0;
    std::size_t knot_subsample = 0;
    int resolution = 2;  // fs level
    double alpha = 0.0;  // fs ridge
    std::uint64_t seed = 0;
};

void run_fit(const FitArgs& a) {
    const Dataset data = read_csv(a.data);
    if (a.method == "fs") {
        FsFit fit = fit_least_squares(data, a.resolution, a.alpha);
        if (!a.out.empty()) save_fs(fit.model, a.out);
        std::printf("fs fit: resolution %d, %zu coefficients, ridge %.3g\n", a.resolution,
                    fit.model.coeffs.size(), fit.alpha_used);
        return;
    }
    MarsFitOptions opt;
    opt.iterations = a.iterations;
    opt.allow_repeats = a.method == "homars";
    opt.max_degree = a.max_degree;
    opt.knot_subsample = a.knot_subsample;
    opt.seed = a.seed;
    MarsFit fit = forward_selection(data, opt);
    if (!a.out.empty()) save_mars(fit.model, a.out);
    std::printf("%s fit: %zu iterations -> M = %zu basis functions, final RSS %.6g\n",
                a.method.c_str(), a.iterations, 2 * a.iterations + 1, fit.report.final_rss);
    for (const std::string& w : fit.report.warnings) std::printf("warning: %s\n", w.c_str());
}

// --- compile ----------------------------------------------------------------

struct CompileArgs {
    std::string model, out, certificate;
    double epsilon = 1e-2;
    std::size_t verify_grid = 0;
};

void run_compile(const CompileArgs& a) {
    const json doc = json::parse(read_file(a.model));
    const bool is_fs = doc.contains("coeffs") && !doc.contains("terms");
    CompiledNet compiled;
    if (is_fs) {
        const FsModel model = fs_from_json(doc.dump());
        compiled = compile_fs(model, a.epsilon);
        if (a.verify_grid > 0)
            compiled.certificate =
                verify_certificate(compiled.net, compiled.certificate, model, a.verify_grid);
    } else {
        const MarsModel model = mars_from_json(doc.dump());
        compiled = compile_mars(model, a.epsilon);
        if (a.verify_grid > 0)
            compiled.certificate =
                verify_certificate(compiled.net, compiled.certificate, model, a.verify_grid);
    }
    if (!a.out.empty()) save_network(compiled.net, a.out);
    if (!a.certificate.empty()) save_certificate(compiled.certificate, a.certificate);
    const CompileCertificate& c = compiled.certificate;
    std::printf("compiled %s model: depth %zu, max width %zu, sparsity %zu, error bound %.3g\n",
                is_fs ? "fs" : "mars", c.depth,
                *std::max_element(c.widths.begin(), c.widths.end()), c.sparsity, c.error_bound);
    if (c.verified)
        std::printf("verification on %zu grid points: measured sup %.3g <= %.3g, %s\n",
                    c.grid_points, c.measured_sup_error, c.epsilon,
                    c.pass() ? "PASS" : "FAIL");
    if (c.verified && !c.pass()) throw std::runtime_error("certificate verification failed");
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
    std::string data, init = "glorot", out, report;
    std::vector<std::size_t> arch;
    double lr = 0.001, decay = 0.00021;
    std::size_t epochs = 1000, batch = 32, restarts = 5;
    std::uint64_t seed = 0;
};

void run_train(const TrainArgs& a) {
    const Dataset data = read_csv(a.data);
    TrainConfig cfg;
    cfg.widths = a.arch;
    cfg.learning_rate = a.lr;
    cfg.decay = a.decay;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    if (a.init == "glorot")
        cfg.initializer = Init::glorot_modified;
    else if (a.init == "increasing")
        cfg.initializer = Init::increasing_glorot;
    else
        throw std::invalid_argument("unknown initializer: " + a.init);
    TrainResult res = train(data, cfg);
    if (!a.out.empty()) save_network(res.net, a.out);
    if (!a.report.empty()) save_report(res.report, a.report);
    std::printf("trained %zu restarts, best #%zu with loss %.6g\n", cfg.restarts,
                res.report.best, res.report.best_loss);
}

// --- verify-bounds ----------------------------------------------------------

struct BoundsArgs {
    std::string target, out;
    double epsilon = 1e-4;
    std::size_t grid = 0; // 0: per-target default
    std::size_t mars_terms = 20;
    int fs_resolution = 2;
    std::size_t samples = 100;
};

void run_bounds(const BoundsArgs& a) {
    if (a.target == "x2") {
        const std::size_t grid = a.grid ? a.grid : 1000000;
        std::vector<BoundReport> reports = verify_x2_bounds(a.epsilon, grid);
        emit(a.out, bound_reports_to_json(reports));
        for (const BoundReport& r : reports)
            std::fprintf(stderr, "%-5s %-22s theoretical %.4g measured %.4g (%s) %s\n",
                         r.family.c_str(), r.size.c_str(), r.theoretical, r.measured,
                         r.method.c_str(), r.holds() ? "ok" : "VIOLATED");
        for (const BoundReport& r : reports)
            if (!r.holds()) throw std::runtime_error("bound violated: " + r.family);
    } else if (a.target == "hinge") {
        HingeFitBudget budget;
        budget.mars_terms = a.mars_terms;
        budget.fs_resolution = a.fs_resolution;
        budget.samples_per_axis = a.samples;
        if (a.grid) budget.grid_resolution = a.grid;
        HingeBounds hb = verify_hinge_bounds(budget);
        emit(a.out, bound_reports_to_json({hb.mars, hb.fs, hb.exact_net}));
        for (const BoundReport* r : {&hb.mars, &hb.fs, &hb.exact_net})
            std::fprintf(stderr, "%-9s %-12s theoretical %.4g measured %.4g %s\n",
                         r->family.c_str(), r->size.c_str(), r->theoretical, r->measured,
                         r->holds() ? "ok" : "VIOLATED");
        if (!hb.mars.holds() || !hb.fs.holds() || !hb.exact_net.holds())
            throw std::runtime_error("hinge bound violated");
    } else if (a.target == "sandwich") {
        const std::size_t grid = a.grid ? a.grid : 1000000;
        SandwichReport rep = x2_sandwich(a.epsilon, grid);
        emit(a.out, sandwich_to_json(rep));
        std::fprintf(stderr,
                     "net error %.4g (s=%zu) vs pwl bound %.4g (M=%zu): ratio %.3g %s\n",
                     rep.net_error, rep.net_sparsity, rep.mars_bound, rep.mars_terms, rep.ratio,
                     rep.ratio >= 1.0 ? "ok" : "VIOLATED");
        if (!(rep.ratio >= 1.0)) throw std::runtime_error("sandwich ratio below 1");
    } else {
        throw std::invalid_argument("unknown target: " + a.target);
    }
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
    std::string model, method, out, config;
    std::size_t reps = 100, n = 1000, d = 0, test_n = 100000;
    std::uint64_t seed = 1;
    bool human = false;
};

MethodParams params_from_json(const json& j, const MethodParams& base) {
    MethodParams p = base;
    if (j.contains("terms")) p.terms = j["terms"].get<std::size_t>();
    if (j.contains("max_degree")) p.max_degree = j["max_degree"].get<std::size_t>();
    if (j.contains("fs_resolution")) p.fs_resolution = j["fs_resolution"].get<int>();
    if (j.contains("widths")) p.widths = j["widths"].get<std::vector<std::size_t>>();
    if (j.contains("initializer")) {
        const std::string init = j["initializer"].get<std::string>();
        if (init == "glorot")
            p.initializer = Init::glorot_modified;
        else if (init == "increasing")
            p.initializer = Init::increasing_glorot;
        else
            throw std::invalid_argument("unknown initializer: " + init);
    }
    if (j.contains("learning_rate")) p.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("decay")) p.decay = j["decay"].get<double>();
    if (j.contains("epochs")) p.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) p.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("restarts")) p.restarts = j["restarts"].get<std::size_t>();
    return p;
}

ExperimentSpec spec_from_json(const json& j) {
    ExperimentSpec spec;
    spec.model = parse_sim(j.at("model").get<std::string>());
    spec.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("d")) spec.d = j["d"].get<std::size_t>();
    if (j.contains("n")) spec.n = j["n"].get<std::size_t>();
    if (j.contains("repetitions")) spec.repetitions = j["repetitions"].get<std::size_t>();
    if (j.contains("test_n")) spec.test_n = j["test_n"].get<std::size_t>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("params")) {
        spec.use_default_params = false;
        spec.params = params_from_json(
            j["params"], default_params(spec.model, spec.method, resolve_d(spec.model, spec.d)));
    }
    return spec;
}

void run_bench(const BenchArgs& a) {
    std::vector<ExperimentSpec> specs;
    if (!a.config.empty()) {
        const json doc = json::parse(read_file(a.config));
        if (doc.is_array())
            for (const json& j : doc) specs.push_back(spec_from_json(j));
        else
            specs.push_back(spec_from_json(doc));
    } else {
        if (a.model.empty() || a.method.empty())
            throw std::invalid_argument("bench needs --model and --method (or --config)");
        ExperimentSpec spec;
        spec.model = parse_sim(a.model);
        spec.method = parse_method(a.method);
        spec.d = a.d;
        spec.n = a.n;
        spec.repetitions = a.reps;
        spec.test_n = a.test_n;
        spec.seed = a.seed;
        specs.push_back(spec);
    }
    std::vector<ExperimentSummary> summaries;
    summaries.reserve(specs.size());
    for (const ExperimentSpec& spec : specs) {
        summaries.push_back(run_experiment(spec));
        const ExperimentSummary& s = summaries.back();
        std::fprintf(stderr, "%s/%s done: mean risk %.3g (%zu/%zu reps ok)\n", s.model.c_str(),
                     s.method.c_str(), s.mean, s.repetitions - s.failures, s.repetitions);
        for (const RepetitionResult& r : s.reps)
            if (r.failed) std::fprintf(stderr, "  failed repetition: %s\n", r.error.c_str());
    }
    emit(a.out, a.human ? emit_human(summaries) : emit_csv(summaries));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MARS / Faber-Schauder estimators, certified ReLU network "
                 "compilation, training and benchmarks"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "Sample a simulation model to CSV");
    cgen->add_option("--model", gen.model, "sim1..sim7")->required();
    cgen->add_option("--n", gen.n, "sample size");
    cgen->add_option("--d", gen.d, "dimension (models with free d)");
    cgen->add_option("--seed", gen.seed, "rng seed");
    cgen->add_option("--out", gen.out, "output CSV")->required();
    cgen->callback([&] { run_gen(gen); });

    FitArgs fit;
    CLI::App* cfit = app.add_subcommand("fit", "Fit a MARS / HO-MARS / FS model to CSV data");
    cfit->add_option("--data", fit.data, "input CSV (header x1,...,xd,y)")->required();
    cfit->add_option("--method", fit.method, "mars | homars | fs");
    cfit->add_option("--iterations", fit.iterations,
                     "reflected pairs to add; yields M = 2*iterations + 1 basis functions");
    cfit->add_option("--max-degree", fit.max_degree, "factor cap per term (0: dimension)");
    cfit->add_option("--knot-subsample", fit.knot_subsample,
                     "random candidate knots per coordinate (0: all observed values)");
    cfit->add_option("--resolution", fit.resolution, "fs truncation level M");
    cfit->add_option("--alpha", fit.alpha, "fs ridge penalty");
    cfit->add_option("--seed", fit.seed, "rng seed (knot subsampling)");
    cfit->add_option("--out", fit.out, "output model JSON");
    cfit->callback([&] { run_fit(fit); });

    CompileArgs comp;
    CLI::App* ccomp = app.add_subcommand("compile", "Compile a model file to a ReLU network");
    ccomp->add_option("--model", comp.model, "MARS or FS model JSON")->required();
    ccomp->add_option("--epsilon", comp.epsilon, "target sup error in (0,1]")->required();
    ccomp->add_option("--out", comp.out, "output network JSON");
    ccomp->add_option("--certificate", comp.certificate, "output certificate JSON");
    ccomp->add_option("--verify-grid", comp.verify_grid,
                      "grid resolution for certificate verification (0: skip)");
    ccomp->callback([&] { run_compile(comp); });

    TrainArgs tr;
    CLI::App* ctr = app.add_subcommand("train", "Train a ReLU network on CSV data");
    ctr->add_option("--data", tr.data, "input CSV")->required();
    ctr->add_option("--arch", tr.arch, "widths d,h1,...,1")->required()->delimiter(',');
    ctr->add_option("--init", tr.init, "glorot | increasing");
    ctr->add_option("--lr", tr.lr, "learning rate");
    ctr->add_option("--decay", tr.decay, "per-step learning-rate decay");
    ctr->add_option("--epochs", tr.epochs, "training epochs");
    ctr->add_option("--batch", tr.batch, "minibatch size");
    ctr->add_option("--restarts", tr.restarts, "independent restarts");
    ctr->add_option("--seed", tr.seed, "rng seed");
    ctr->add_option("--out", tr.out, "output network JSON");
    ctr->add_option("--report", tr.report, "output training report JSON");
    ctr->callback([&] { run_train(tr); });

    BoundsArgs bd;
    CLI::App* cbd = app.add_subcommand("verify-bounds", "Check approximation bounds");
    cbd->add_option("--target", bd.target, "x2 | hinge | sandwich")->required();
    cbd->add_option("--epsilon", bd.epsilon, "accuracy for x2 / sandwich");
    cbd->add_option("--grid", bd.grid, "grid resolution (0: target default)");
    cbd->add_option("--M", bd.mars_terms, "MARS terms for the hinge fit");
    cbd->add_option("--fs-resolution", bd.fs_resolution, "FS level for the hinge fit");
    cbd->add_option("--samples", bd.samples, "hinge fit samples per axis");
    cbd->add_option("--out", bd.out, "output JSON (default: stdout)");
    cbd->callback([&] { run_bounds(bd); });

    BenchArgs be;
    CLI::App* cbe = app.add_subcommand("bench", "Run simulation benchmarks");
    cbe->add_option("--model", be.model, "sim1..sim7");
    cbe->add_option("--method", be.method, "mars | homars | fs | dnn");
    cbe->add_option("--reps", be.reps, "repetitions");
    cbe->add_option("--n", be.n, "training sample size");
    cbe->add_option("--d", be.d, "dimension (models with free d)");
    cbe->add_option("--test-n", be.test_n, "test points for the risk estimate");
    cbe->add_option("--seed", be.seed, "experiment seed");
    cbe->add_option("--config", be.config, "JSON experiment spec (object or array)");
    cbe->add_option("--out", be.out, "output CSV (default: stdout)");
    cbe->add_flag("--human", be.human, "aligned table instead of CSV");
    cbe->callback([&] { run_bench(be); });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
