#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splinet/dataset.hpp"
#include "splinet/relu_net.hpp"

namespace splinet {

enum class Init { glorot_modified, increasing_glorot };

struct TrainConfig {
    std::vector<std::size_t> widths; // (d, p_1, ..., p_L, 1)
    double learning_rate = 0.001;
    double decay = 0.00021; // per-step scaling lr/(1+decay*t)
    std::size_t epochs = 1000;
    std::size_t batch_size = 32;
    std::size_t restarts = 5;
    Init initializer = Init::glorot_modified;
    std::uint64_t seed = 0;
};

struct RestartTrace {
    std::vector<double> epoch_loss; // full-data loss after each epoch
    double final_loss = 0.0;
    bool failed = false; // diverged (non-finite loss or parameters)
};

struct TrainReport {
    std::vector<RestartTrace> restarts;
    std::size_t best = 0;
    double best_loss = 0.0;
};

struct TrainResult {
    ReluNetwork net;
    TrainReport report;
};

// Glorot uniform with sampled shifts: weights and shifts of hidden layer l
// are i.i.d. uniform on [-b_l, b_l], b_l = sqrt(6/(m_{l-1}+m_l)); the output
// layer samples weights only (its shift is inert).
ReluNetwork init_glorot_modified(const std::vector<std::size_t>& widths, std::uint64_t seed);

// Shape-aware variant: weights uniform on [0, b_l] (non-negative slopes) and
// hidden shifts uniform on [0, b_l], so first-layer kinks v/w land in [0,inf)
// and in [0,1] whenever v <= w.  With added biases the same construction
// would draw them from [-b_l, 0]; shifts here are subtracted, which flips
// the sign of the range.
ReluNetwork init_increasing_glorot(const std::vector<std::size_t>& widths, std::uint64_t seed);

// Flat parameter vector: per hidden layer, row-major W then v; output layer W
// only.  The inert output shift is not a trainable parameter.
std::size_t parameter_count(const ReluNetwork& net);
std::vector<double> get_parameters(const ReluNetwork& net);
void set_parameters(ReluNetwork& net, const std::vector<double>& params);

// Mean squared error over the rows listed in `rows` plus its gradient in the
// flat layout above.  Reverse-mode accumulation, ReLU subgradient at 0 is 0.
double loss_and_gradient(const ReluNetwork& net, const Dataset& data,
                         const std::vector<std::size_t>& rows, std::vector<double>& grad);
// Whole dataset as one batch.
double loss_and_gradient(const ReluNetwork& net, const Dataset& data, std::vector<double>& grad);

double empirical_loss(const ReluNetwork& net, const Dataset& data);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with per-step learning rate
// lr/(1+decay*t), best-of-restarts selection by final full-data loss.
// Restarts run in parallel on independent RNG streams; results do not depend
// on the thread count.
TrainResult train(const Dataset& data, const TrainConfig& config);

std::string report_to_json(const TrainReport& report);
void save_report(const TrainReport& report, const std::string& path);

} // namespace splinet
