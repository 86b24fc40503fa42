#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splinet/dataset.hpp"
#include "splinet/kernels.hpp"
#include "splinet/training.hpp"

namespace splinet {

// Benchmark regression targets.  sim1: x^2 noiseless; sim2: x^2 with
// N(0, sigma=0.2) noise; sim3: sin(10 pi x); sim4: -1/2 + 1(x >= 1/2);
// sim5: (x1+x2-1)_+; sim6: (sum_j x_j^2 - d/3)_+; sim7: same as sim6 but
// only the first 10 of d coordinates are active.
enum class SimId { sim1, sim2, sim3, sim4, sim5, sim6, sim7 };

SimId parse_sim(const std::string& name);
std::string sim_name(SimId id);

// Ambient dimension: fixed for sim1..sim5; sim6/sim7 require an explicit d.
std::size_t sim_default_d(SimId id);
std::size_t resolve_d(SimId id, std::size_t requested);
double sim_sigma(SimId id);
kernels::PointFn sim_fn(SimId id, std::size_t d);

// i.i.d. uniform design, response per the model equation, deterministic in
// the seed.
Dataset generate(SimId id, std::size_t n, std::size_t d, std::uint64_t seed);

enum class Method { mars, homars, fs, dnn };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct MethodParams {
    // mars / homars: number of basis functions added (two per forward step).
    std::size_t terms = 10;
    std::size_t max_degree = 1; // K; homars only
    // fs: table-style resolution label; the fitted level set is label-1.
    int fs_resolution = 3;
    // dnn
    std::vector<std::size_t> widths;
    Init initializer = Init::glorot_modified;
    double learning_rate = 0.001;
    double decay = 0.00021;
    std::size_t epochs = 1000;
    std::size_t batch_size = 32;
    std::size_t restarts = 5;
};

// Table defaults for each (model, method) pair.
MethodParams default_params(SimId id, Method method, std::size_t d);
std::string params_label(Method method, const MethodParams& p);

struct ExperimentSpec {
    SimId model = SimId::sim1;
    Method method = Method::mars;
    std::size_t d = 0; // 0 -> sim default
    std::size_t n = 1000;
    std::size_t repetitions = 100;
    std::size_t test_n = 100000;
    std::uint64_t seed = 1;
    bool use_default_params = true;
    MethodParams params; // honored when use_default_params is false
};

struct RepetitionResult {
    double risk = 0.0;       // noiseless target risk E[(f^ - f0)^2]
    double noisy_risk = 0.0; // noise-inclusive E[(Y' - f^)^2]
    bool failed = false;
    std::string error;
};

struct ExperimentSummary {
    std::string model;
    std::string method;
    std::string params;
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    std::vector<RepetitionResult> reps;
    std::size_t failures = 0;
    double mean = 0.0; // over successful repetitions
    double stddev = 0.0;
    double noisy_mean = 0.0;
    double noisy_stddev = 0.0;
};

// Monte-Carlo risk on fresh noiseless uniform draws; block-accumulated in a
// fixed order, so the value is independent of the thread count.
double prediction_risk(const kernels::PointFn& predictor, SimId id, std::size_t d,
                       std::size_t test_n, std::uint64_t seed);

// generate -> fit -> prediction_risk, repeated with derived per-repetition
// seeds (parallel); the test stream depends only on (seed, repetition), so
// methods are compared on identical test points.  A failed repetition is
// recorded and excluded from the mean.
ExperimentSummary run_experiment(const ExperimentSpec& spec);

// Columns: model,method,params,mean,std,n,reps,seed; 3 significant digits.
// Models with noise emit one extra row per summary (method suffixed with
// "+noise") carrying the noise-inclusive risk.
std::string emit_csv(const std::vector<ExperimentSummary>& summaries);
std::string emit_human(const std::vector<ExperimentSummary>& summaries);

} // namespace splinet
