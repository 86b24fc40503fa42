#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splinet/kernels.hpp"
#include "splinet/relu_net.hpp"

namespace splinet {

// One comparison of a measured approximation error against an analytic bound.
// For lower-bound entries the claim is measured >= theoretical; for upper
// bounds it is measured <= theoretical.
struct BoundReport {
    std::string target;      // approximated function, e.g. "x^2", "hinge2d"
    std::string family;      // "pwl", "mars", "fs", "dnn"
    std::string size;        // human-readable size parameter, e.g. "M=16"
    double theoretical = 0.0;
    double measured = 0.0;
    std::string method;      // "closed_form", "grid_search", "fit"
    bool lower_bound = true;
    std::string note;
    bool holds() const {
        return lower_bound ? measured >= theoretical * (1.0 - 1e-9)
                           : measured <= theoretical;
    }
};

// Minimal sup error of a continuous piecewise linear function with K pieces
// approximating x^2 on [0,1]: equal intervals of length 1/K, equioscillating
// chord on each, error (1/K)^2/8.  Correctly rounded double of 1/(8K^2).
double best_pwl_error_x2(std::size_t pieces);

// max |f-g| over the uniform grid joined with extra_points (full points).
double sup_error(const kernels::PointFn& f, const kernels::PointFn& g, std::size_t d,
                 std::size_t resolution, const std::vector<std::vector<double>>& extra_points);

// Mult(2,N) fed (x,x): a one-input network approximating x^2 within 9*2^-N.
ReluNetwork squaring_net(int accuracy);

// Three reports for the target x^2 at accuracy eps: the spline lower bounds
// (closed-form piece counting) and the network upper bound (measured).
std::vector<BoundReport> verify_x2_bounds(double epsilon, std::size_t grid_resolution = 1000000);

struct SandwichReport {
    double epsilon = 0.0;
    int accuracy = 0;              // N of the squaring network
    double net_error = 0.0;        // measured grid sup error, <= epsilon
    std::size_t net_sparsity = 0;
    std::size_t mars_terms = 0;    // M = floor(1/(6 sqrt(eps))), >= 1
    std::size_t mars_params = 0;   // 2M+1 coefficients
    double mars_bound = 0.0;       // 1/(8(M+1)^2) >= epsilon in range
    double ratio = 0.0;            // mars_bound / net_error
};

// Network beats every same-epsilon spline class on x^2: ratio >= 1.
SandwichReport x2_sandwich(double epsilon, std::size_t grid_resolution = 1000000);

struct HingeFitBudget {
    std::size_t samples_per_axis = 100; // fit data: noiseless grid samples^2
    int fs_resolution = 2;
    std::size_t mars_terms = 20;        // forward selection stops at M terms
    std::size_t grid_resolution = 400;  // sup measurement per axis
};

struct HingeBounds {
    BoundReport mars;
    BoundReport fs;
    BoundReport exact_net; // L=1, p=(2,1,1), 4 parameters, error 0
};

// Lower bounds for approximating (x1+x2-1)_+ with axis-aligned splines, with
// fitted models as witnesses, plus the 4-parameter network that is exact.
HingeBounds verify_hinge_bounds(const HingeFitBudget& budget);

std::string bound_reports_to_json(const std::vector<BoundReport>& reports);
std::string sandwich_to_json(const SandwichReport& report);

} // namespace splinet
