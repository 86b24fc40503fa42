#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "splinet/faber_schauder.hpp"
#include "splinet/mars.hpp"
#include "splinet/relu_net.hpp"

namespace splinet {

// Product network Mult(r, N): inputs in [0,1]^r, output within 3^r 2^-N of
// the product, itself in [0,1].  Hidden depth exactly (N+5) ceil(log2 r),
// widths exactly (r, 6r, ..., 6r, 1), all parameters in [-1,1], sparsity
// at most 42 r^2 (1 + hidden depth).  Requires r >= 2 and N >= 1.
ReluNetwork build_mult(std::size_t r, int accuracy);

// Width-2 fragment computing x -> c x exactly for x >= 0: repeated doubling
// through weight-1 fan-in pairs (2q - 1 hidden layers, q = ceil(log2 c)),
// then an output scale c 2^-q <= 1.  At most 4q parameters.  c < 1 or c = 1
// gives the empty fragment (identity, zero hidden layers).
ReluNetwork build_const_mult(double c);

// One product basis function as a network: a hinge layer (inactive
// coordinates feed the constant 1 via a zero row with shift -1) followed by
// build_mult(d, accuracy); for d = 1 the hinge layer alone, exact.
// Sup error against eval_basis is at most 3^d 2^-accuracy.  Terms must have
// degree 1 and use each coordinate at most once.
ReluNetwork compile_basis(const MarsTerm& term, std::size_t d, int accuracy);

struct CompileCertificate {
    // Claim parameters.
    double epsilon = 0.0;
    int accuracy = 0;       // N
    std::size_t arity = 0;  // r fed to each product subnetwork (= d)
    std::size_t d = 0;
    std::size_t terms = 0;  // M
    double coef_bound = 1.0;  // C
    double error_bound = 0.0; // C (M+1) 3^d 2^-N, <= epsilon

    // Closed-form predictions.
    std::size_t predicted_depth = 0;        // (N+5)ceil(log2 d) + 2 ceil(log2 C) + 3
    std::size_t predicted_sparsity = 0;     // M 42 d^2 ((N+5)ceil(log2 d)+2) + 2 + M(4 ceil(log2 C)+2)
    std::size_t predicted_width_bound = 0;  // 6 M d
    std::vector<std::size_t> predicted_widths;

    // Measured on the built network.
    std::size_t depth = 0;
    std::vector<std::size_t> widths;
    std::size_t sparsity = 0;
    double max_abs_param = 0.0;

    std::string source; // model digest

    // Origin fields for compiled Faber-Schauder models (set by compile_fs).
    bool from_fs = false;
    int fs_resolution = 0;
    double fs_coef_bound = 1.0;     // max(1, max |c_lambda|)
    double fs_coef_inflation = 1.0; // 2^(d(M+2)/2)
    std::size_t fs_keys_displayed = 0; // (1+2^M)^d
    std::size_t fs_keys_true = 0;      // (1+2^(M+1))^d

    // Verification (filled by verify_certificate).
    bool verified = false;
    std::size_t grid_points = 0;
    double measured_sup_error = 0.0;
    bool sup_ok = false;
    bool depth_ok = false;
    bool widths_ok = false;
    bool sparsity_ok = false;
    bool params_ok = false;
    bool width_bound_ok = false;

    bool pass() const {
        return verified && sup_ok && depth_ok && widths_ok && sparsity_ok && params_ok &&
               width_bound_ok;
    }
};

struct CompiledNet {
    ReluNetwork net;
    CompileCertificate certificate;
};

// Whole-model compilation: M basis networks joined in parallel, a widening
// layer adding the constant channel, per-channel doubling chains standing in
// for multiplication by C, and an output layer carrying beta / C.  The sup
// error over [0,1]^d is at most C (M+1) 3^d 2^-N <= epsilon.
// Throws on epsilon outside (0,1], on coefficients exceeding coef_bound, on
// degree > 1 or repeated-coordinate terms, and on knots outside [0,1].
CompiledNet compile_mars(const MarsModel& model, double epsilon);

// fs_to_mars followed by compile_mars, with the coefficient bound inflated
// to 2^(d(M+2)/2) max(1, max |c_lambda|) per the hinge embedding.
CompiledNet compile_fs(const FsModel& model, double epsilon);

// Measures sup error on a grid (grid_resolution uniform points per axis,
// with the model's knots, knot midpoints and endpoints unioned in) and
// rechecks the architecture, sparsity and parameter claims.  Returns the
// certificate with the measured fields filled.
CompileCertificate verify_certificate(const ReluNetwork& net, const CompileCertificate& cert,
                                      const MarsModel& model, std::size_t grid_resolution);
CompileCertificate verify_certificate(const ReluNetwork& net, const CompileCertificate& cert,
                                      const FsModel& model, std::size_t grid_resolution);

std::string certificate_to_json(const CompileCertificate& cert);
CompileCertificate certificate_from_json(const std::string& text);
void save_certificate(const CompileCertificate& cert, const std::string& path);
CompileCertificate load_certificate(const std::string& path);

} // namespace splinet
