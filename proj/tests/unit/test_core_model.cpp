#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stopflow/core_model.hpp"
#include "stopflow/errors.hpp"

using namespace stopflow;

namespace {

// Uniform draws over a box, keeping only admissible parameter sets.
std::vector<ModelParams> random_params(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mu(-0.5, 0.5), sigma(0.01, 1.0), rho(0.01, 2.0),
        kappa(0.1, 20.0), lambda(0.01, 5.0), theta(0.05, 0.95);
    std::vector<ModelParams> out;
    while (out.size() < n) {
        ModelParams p{mu(rng), sigma(rng), rho(rng), kappa(rng), lambda(rng), theta(rng)};
        try {
            validate(p);
            out.push_back(p);
        } catch (const ValidationError&) {
        }
    }
    return out;
}

}  // namespace

TEST_CASE("default parameters validate") {
    CHECK_NOTHROW(validate(ModelParams{}));
    RealOptionModel m(ModelParams{});
    CHECK(m.alpha_minus() < 0.0);
    CHECK(m.alpha_plus() > 1.0);
}

TEST_CASE("resolvent divergence is rejected") {
    ModelParams p;
    p.rho = 0.09;  // theta (mu + sigma^2 (theta-1)/2) = 0.095
    const double growth = p.theta * (p.mu + 0.5 * p.sigma * p.sigma * (p.theta - 1.0));
    CHECK(growth == doctest::Approx(0.095).epsilon(1e-14));
    try {
        validate(p);
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("resolvent divergence") != std::string::npos);
    }
}

TEST_CASE("each inadmissible field is reported") {
    ModelParams p;
    p.sigma = 0.0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = ModelParams{};
    p.theta = 1.0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = ModelParams{};
    p.lambda = -1.0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = ModelParams{};
    p.kappa = NAN;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = ModelParams{};
    p.lambda = 0.0;
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("characteristic roots at the default parameters") {
    const ModelParams p;
    const CharRoots r = char_roots(p);
    CHECK(std::abs(r.alpha_minus - (-9.0 - std::sqrt(181.0)) / 2.0) < 1e-12);
    CHECK(std::abs(r.alpha_plus - (-9.0 + std::sqrt(181.0)) / 2.0) < 1e-12);
    CHECK(std::abs(char_residual(p, r.alpha_minus)) < 1e-12);
    CHECK(std::abs(char_residual(p, r.alpha_plus)) < 1e-12);
}

TEST_CASE("characteristic roots over random admissible draws") {
    for (const ModelParams& p : random_params(1000, 7)) {
        const CharRoots r = char_roots(p);
        const oracle::Roots o = oracle::char_roots(p);
        REQUIRE(r.alpha_minus < 0.0);
        REQUIRE(r.alpha_plus > 0.0);
        CHECK(std::abs(char_residual(p, r.alpha_minus)) < 1e-12);
        CHECK(std::abs(char_residual(p, r.alpha_plus)) < 1e-12);
        CHECK(r.alpha_minus == doctest::Approx(o.minus).epsilon(1e-9));
        CHECK(r.alpha_plus == doctest::Approx(o.plus).epsilon(1e-9));
    }
}

TEST_CASE("resolvent constant") {
    const ModelParams p;
    CHECK(resolvent_constant(p) == doctest::Approx(1.0 / 0.405).epsilon(1e-15));
    for (const ModelParams& q : random_params(200, 11)) {
        CHECK(resolvent_constant(q) == doctest::Approx(oracle::resolvent_P(q)).epsilon(1e-13));
    }
}

TEST_CASE("resolvent solves (L - rho) H + pi = 0") {
    const RealOptionModel m(ModelParams{});
    CHECK(m.resolvent(4.0) == doctest::Approx(2.0 / 0.405).epsilon(1e-14));
    for (double x : {0.1, 0.5, 1.0, 2.0, 4.0, 9.0}) {
        const double lhs = m.generator(x, m.resolvent_prime(x), m.resolvent_second(x)) -
                           m.params().rho * m.resolvent(x) + m.profit(x);
        CHECK(std::abs(lhs) < 1e-12 * (1.0 + m.resolvent(x)));
        CHECK(m.x_resolvent_prime(x) == doctest::Approx(x * m.resolvent_prime(x)));
    }
}

TEST_CASE("resolvent derivatives match central differences") {
    const RealOptionModel m(ModelParams{});
    const double h = 1e-5;
    for (double x : {0.3, 1.0, 3.0}) {
        const double d1 = (m.resolvent(x + h) - m.resolvent(x - h)) / (2 * h);
        const double d2 =
            (m.resolvent_prime(x + h) - m.resolvent_prime(x - h)) / (2 * h);
        CHECK(m.resolvent_prime(x) == doctest::Approx(d1).epsilon(1e-8));
        CHECK(m.resolvent_second(x) == doctest::Approx(d2).epsilon(1e-7));
    }
    CHECK(std::isinf(m.resolvent_prime(0.0)));
    CHECK(m.x_resolvent_prime(0.0) == 0.0);
    CHECK_THROWS_AS(m.resolvent(-1.0), ValidationError);
}

TEST_CASE("uniform grid layout") {
    const Grid g = Grid::uniform(5.0, 0.02, 0.02);
    CHECK(g.nx() == 251);
    CHECK(g.ny() == 50);
    CHECK(g.x_nodes.front() == 0.0);
    CHECK(g.x_nodes.back() == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(g.y_nodes.front() == doctest::Approx(0.02));
    CHECK(g.y_nodes.back() == 1.0);
    CHECK_THROWS_AS(Grid::uniform(5.0, 0.0, 0.02), ValidationError);
    CHECK_THROWS_AS(Grid::uniform(5.0, 0.02, 1.5), ValidationError);
    CHECK_THROWS_AS(Grid::uniform(0.02, 0.02, 0.02), ValidationError);
}
