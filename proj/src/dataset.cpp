#include "splinet/dataset.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splinet {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// strtod instead of std::stod: stod raises out_of_range on subnormal values,
// which would break the bit-exact round-trip for tiny coefficients.
bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + cell.size();
}

} // namespace

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "y")
        throw std::runtime_error("read_csv: header must be x1,...,xd,y");
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "x" + std::to_string(j + 1))
            throw std::runtime_error("read_csv: header must be x1,...,xd,y");
    }

    Dataset data;
    data.d = d;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != d + 1)
            throw std::runtime_error("read_csv: bad column count at line " + std::to_string(line_no));
        for (std::size_t j = 0; j <= d; ++j) {
            double v = 0.0;
            if (!parse_double(cells[j], v))
                throw std::runtime_error("read_csv: bad number at line " + std::to_string(line_no));
            if (j < d) data.x.push_back(v); else data.y.push_back(v);
        }
        ++data.n;
    }
    return data;
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t j = 0; j < data.d; ++j) out << "x" << (j + 1) << ",";
    out << "y\n";
    char buf[64];
    for (std::size_t i = 0; i < data.n; ++i) {
        for (std::size_t j = 0; j < data.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.coord(i, j));
            out << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", data.y[i]);
        out << buf << "\n";
    }
}

} // namespace splinet
