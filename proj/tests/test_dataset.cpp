#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "splinet/dataset.hpp"

using namespace splinet;

TEST_CASE("csv round-trip is bit-exact") {
    Dataset d;
    d.n = 4;
    d.d = 2;
    d.x = {0.1, 1.0 / 3.0, 0.0, 1e-17, 0.9999999999999999, 5e-324, 1.0, 0.5};
    d.y = {-0.1, 1e300, 3.141592653589793, -0.0};

    const std::string path = "test_dataset_tmp.csv";
    write_csv(d, path);
    Dataset back = read_csv(path);
    std::remove(path.c_str());

    REQUIRE(back.n == d.n);
    REQUIRE(back.d == d.d);
    for (std::size_t i = 0; i < d.x.size(); ++i) CHECK(back.x[i] == d.x[i]);
    for (std::size_t i = 0; i < d.y.size(); ++i) CHECK(back.y[i] == d.y[i]);
}

TEST_CASE("csv header names the coordinates") {
    Dataset d;
    d.n = 1;
    d.d = 3;
    d.x = {0.25, 0.5, 0.75};
    d.y = {1.5};
    const std::string path = "test_dataset_tmp2.csv";
    write_csv(d, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    in.close();
    std::remove(path.c_str());
    CHECK(header == "x1,x2,x3,y");
}

TEST_CASE("point and coord accessors address row-major storage") {
    Dataset d;
    d.n = 2;
    d.d = 3;
    d.x = {1, 2, 3, 4, 5, 6};
    d.y = {0, 0};
    CHECK(d.point(1)[0] == 4.0);
    CHECK(d.coord(0, 2) == 3.0);
    CHECK(d.coord(1, 1) == 5.0);
}

TEST_CASE("read_csv rejects a missing file") {
    CHECK_THROWS_AS(read_csv("no_such_file_here.csv"), std::runtime_error);
}

TEST_CASE("read_csv rejects ragged rows") {
    const std::string path = "test_dataset_tmp3.csv";
    {
        std::ofstream out(path);
        out << "x1,y\n0.5,1.0\n0.25\n";
    }
    CHECK_THROWS(read_csv(path));
    std::remove(path.c_str());
}
