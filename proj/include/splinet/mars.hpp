#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "splinet/dataset.hpp"

namespace splinet {

// One product term  prod_f (s_f (x_{c_f} - t_f))_+^q .  Coordinates may
// repeat when the term was grown with repeats allowed; q > 1 marks explicit
// truncated-power factors.
struct MarsTerm {
    double beta = 0.0;
    std::vector<std::size_t> coords; // 0-based in memory, 1-based in JSON
    std::vector<int> signs;          // each +1 or -1
    std::vector<double> knots;
    int degree = 1;

    std::size_t order() const { return coords.size(); }
};

struct MarsModel {
    std::size_t d = 0;
    double intercept = 0.0;
    double coef_bound = 1.0; // C: bound on |beta| over terms
    std::vector<MarsTerm> terms;
};

// Product of truncated powers; no domain restriction.
double eval_basis(const MarsTerm& term, const double* x);
double eval_model(const MarsModel& model, const double* x);
double eval_model(const MarsModel& model, const std::vector<double>& x);

// Greedy forward selection.  Starting from the constant function, each
// iteration scans every (existing term g, coordinate j, observed knot t)
// with j running over the coordinates where g is constant (or over all
// coordinates when repeats are allowed), and appends the reflected pair
//   (x_j - t)_+ g,  (t - x_j)_+ g
// that minimizes the least-squares fit over the enlarged basis.  Ties break
// lexicographically on (term index, coordinate, knot).  After `iterations`
// rounds the model carries 2*iterations + 1 basis functions (intercept
// included) with OLS coefficients.
struct MarsFitOptions {
    std::size_t iterations = 1;      // number of reflected pairs to add
    std::size_t max_degree = 0;      // factor cap per term; 0 means d
    bool allow_repeats = false;      // lift the distinct-coordinate rule
    std::size_t knot_subsample = 0;  // 0: all observed values are candidates
    std::uint64_t seed = 0;          // only used when knot_subsample > 0
};

struct MarsFitReport {
    struct Pick {
        std::size_t parent = 0; // index into the basis at selection time
        std::size_t coord = 0;
        double knot = 0.0;
    };
    std::vector<double> rss_path; // RSS before any pair, then after each
    std::vector<Pick> picks;
    std::vector<std::string> warnings;
    double final_rss = 0.0;
};

struct MarsFit {
    MarsModel model;
    MarsFitReport report;
};

MarsFit forward_selection(const Dataset& data, const MarsFitOptions& opt);

// Remove n_delete terms, each time the one whose removal increases RSS the
// least (full OLS refit per candidate), then refit coefficients.
MarsFit backward_deletion(const MarsModel& model, const Dataset& data, std::size_t n_delete);

// JSON layout: {"d": d, "intercept": b0, "C": C,
//               "terms": [{"beta","coords","signs","knots","degree"}]}
// with 1-based coords.  Doubles round-trip bit-exactly.
std::string mars_to_json(const MarsModel& model);
MarsModel mars_from_json(const std::string& text);
void save_mars(const MarsModel& model, const std::string& path);
MarsModel load_mars(const std::string& path);

} // namespace splinet
