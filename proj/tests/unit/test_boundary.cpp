#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "stopflow/analytic.hpp"
#include "stopflow/boundary.hpp"
#include "stopflow/core_model.hpp"
#include "stopflow/errors.hpp"

using namespace stopflow;
namespace fs = std::filesystem;

TEST_CASE("piecewise-linear evaluation and flat extension") {
    const Boundary g({0.0, 1.0, 2.0}, {0.2, 0.6, 1.0});
    CHECK(g(0.0) == 0.2);
    CHECK(g(0.5) == doctest::Approx(0.4));
    CHECK(g(1.5) == doctest::Approx(0.8));
    CHECK(g(2.0) == 1.0);
    CHECK(g(50.0) == 1.0);
    CHECK(g.x_hat() == 2.0);
    CHECK_THROWS_AS(g(-0.1), ValidationError);
}

TEST_CASE("generalized inverse") {
    const Boundary g({0.0, 1.0, 2.0, 3.0}, {0.2, 0.5, 0.5, 1.0});
    CHECK(g.inverse(0.2) == 0.0);
    CHECK(g.inverse(0.35) == doctest::Approx(0.5));
    // Flat piece: the smallest x reaching the level.
    CHECK(g.inverse(0.5) == doctest::Approx(1.0));
    CHECK(g.inverse(0.75) == doctest::Approx(2.5));
    CHECK(g.inverse(1.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(g.inverse(0.1), ValidationError);
    CHECK_FALSE(g.strictly_increasing_before_hat());
    const Boundary h({0.0, 1.0}, {0.3, 0.9});
    CHECK_THROWS_AS(h.inverse(0.95), ValidationError);
    CHECK(std::isinf(h.x_hat()));
    CHECK(h.strictly_increasing_before_hat());
}

TEST_CASE("inadmissible tables are rejected") {
    CHECK_THROWS_AS(Boundary({0.0}, {0.5}), ValidationError);
    CHECK_THROWS_AS(Boundary({0.0, 1.0}, {0.5}), ValidationError);
    CHECK_THROWS_AS(Boundary({0.1, 1.0}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(Boundary({0.0, 0.0}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(Boundary({0.0, 1.0}, {0.0, 0.6}), ValidationError);
    CHECK_THROWS_AS(Boundary({0.0, 1.0}, {0.5, 1.2}), ValidationError);
    CHECK_THROWS_AS(Boundary({0.0, 1.0}, {0.6, 0.5}), ValidationError);
}

TEST_CASE("tabulated g_lambda inverts to b_lambda up to interpolation error") {
    const ModelParams p;
    const ClosedFormBoundary cf(p);
    for (double dx : {0.04, 0.02}) {
        const Grid grid = Grid::uniform(10.0, dx, 0.02);
        const Boundary g = Boundary::tabulate(grid.x_nodes, [&](double x) { return cf.g_lambda(x); });
        double worst = 0.0;
        for (double y = 0.1; y < 0.99; y += 0.01) {
            worst = std::max(worst, std::abs(g.inverse(y) - oracle::b_lambda(p, y)));
        }
        // Second-order error: the bound scales with dx^2.
        CHECK(worst < 2.0 * dx * dx);
    }
}

TEST_CASE("CSV round trip is exact") {
    const fs::path dir = fs::temp_directory_path() / "stopflow_test_boundary";
    fs::create_directories(dir);
    const ClosedFormBoundary cf(ModelParams{});
    const Grid grid = Grid::uniform(5.0, 0.02, 0.02);
    const Boundary g = Boundary::tabulate(grid.x_nodes, [&](double x) { return cf.g_lambda(x); });
    write_boundary_csv(dir / "g.csv", g);
    const Boundary back = read_boundary_csv(dir / "g.csv");
    CHECK(back.x_nodes() == g.x_nodes());
    CHECK(back.y_values() == g.y_values());

    std::ofstream(dir / "bad.csv") << "a,b\n0,0.5\n1,0.6\n";
    CHECK_THROWS_AS(read_boundary_csv(dir / "bad.csv"), IoError);
    CHECK_THROWS_AS(read_boundary_csv(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}
