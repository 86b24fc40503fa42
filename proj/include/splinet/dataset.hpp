#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace splinet {

// Regression sample: n design points in [0,1]^d plus responses.
// x is stored row-major (point i occupies x[i*d .. i*d+d)).
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> x;
    std::vector<double> y;

    const double* point(std::size_t i) const { return x.data() + i * d; }
    double coord(std::size_t i, std::size_t j) const { return x[i * d + j]; }
};

// CSV with header x1,...,xd,y; one row per observation, full-precision
// round-trip formatting on write.
Dataset read_csv(const std::string& path);
void write_csv(const Dataset& data, const std::string& path);

} // namespace splinet
