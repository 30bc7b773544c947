#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "stopflow/analytic.hpp"
#include "stopflow/errors.hpp"
#include "stopflow/learner.hpp"
#include "stopflow/policy_iteration.hpp"

using namespace stopflow;

namespace {

std::vector<double> optimum_on(const Grid& grid, const ModelParams& p) {
    std::vector<double> out;
    for (double x : grid.x_nodes) out.push_back(oracle::g_lambda(p, x));
    return out;
}

ValueGridEstimate synthetic(const Grid& grid, double (*f)(double, double)) {
    ValueGridEstimate e;
    e.grid = grid;
    for (double x : grid.x_nodes)
        for (double y : grid.y_nodes) e.values.push_back(f(x, y));
    e.stderrs.assign(e.values.size(), 0.0);
    e.mixed_stderrs.assign(e.values.size(), 0.0);
    return e;
}

// Closed-form J(0, y; never stop) for the discretized reward.
double zero_state_exact(const ModelParams& p, const SimConfig& s, double y) {
    const double n = std::llround(s.horizon / s.dt);
    const double total_weight = (1.0 - std::exp(-p.rho * s.dt * n)) / p.rho;
    return total_weight * (-p.rho * p.kappa * y - p.lambda * y * std::log(y));
}

}  // namespace

TEST_CASE("zero-state value is the deterministic entropy-penalized reward") {
    const ModelParams p;
    const SimConfig s;
    const auto f = zero_state_value(p, s);
    for (double y : {0.01, 0.2, 0.9}) {
        CHECK(f(y) == doctest::Approx(zero_state_exact(p, s, y)).epsilon(1e-10));
    }
    // First-order condition at y* = e^{-(1 + kappa rho / lambda)}.
    const double ys = oracle::y_lambda(p);
    CHECK(std::abs(-p.kappa - (p.lambda / p.rho) * (1.0 + std::log(ys))) < 1e-12);
}

TEST_CASE("zeroth-order initializer converges to the minimal mass level") {
    const ModelParams p;
    Y0Config cfg;
    cfg.grad_tol = 0.0;
    const Y0Result r = learn_initial_mass(zero_state_value(p, SimConfig{}), 0.5, cfg);
    const double ys = std::exp(-3.5);
    REQUIRE(r.trace.size() > 100);
    CHECK(std::abs(r.y - ys) < 1e-3);
    CHECK(r.trace.size() <= 201);
    bool hit = false;
    for (const Y0TraceRow& row : r.trace) hit = hit || std::abs(row.y - ys) < 1e-3;
    CHECK(hit);
    const double e10 = std::abs(r.trace[10].y - ys);
    const double e100 = std::abs(r.trace[100].y - ys);
    CHECK(e100 * 10.0 <= e10);
    for (std::size_t i = 0; i < r.trace.size(); ++i) CHECK(r.trace[i].iter == static_cast<int>(i));
}

TEST_CASE("initializer started at the optimum stays there") {
    const ModelParams p;
    Y0Config cfg;
    cfg.max_iters = 50;
    const double ys = std::exp(-3.5);
    const Y0Result r = learn_initial_mass(zero_state_value(p, SimConfig{}), ys, cfg);
    for (const Y0TraceRow& row : r.trace) CHECK(std::abs(row.y - ys) < cfg.c0);
}

TEST_CASE("initializer reports divergence and bad input") {
    Y0Config cfg;
    auto increasing = [](double y) { return 100.0 * y; };
    CHECK_THROWS_AS(learn_initial_mass(increasing, 0.5, cfg), NumericalError);
    CHECK_THROWS_AS(learn_initial_mass(increasing, 1.5, cfg), ValidationError);
    cfg.eta0 = 0.0;
    CHECK_THROWS_AS(learn_initial_mass(increasing, 0.5, cfg), ValidationError);
}

TEST_CASE("cross-difference of simple surfaces") {
    const Grid grid = Grid::uniform(1.0, 0.25, 0.25);
    const auto bilinear = synthetic(grid, [](double x, double y) { return x * y; });
    const auto separable = synthetic(grid, [](double x, double y) { return x * x + y * y; });
    for (std::size_t i = 1; i + 1 < grid.nx(); ++i) {
        for (std::size_t j = 1; j + 1 < grid.ny(); ++j) {
            CHECK(finite_diff_mixed(bilinear, i, j) == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(std::abs(finite_diff_mixed(separable, i, j)) < 1e-13);
        }
    }
    CHECK_THROWS_AS(finite_diff_mixed(bilinear, 0, 1), ValidationError);
    CHECK_THROWS_AS(finite_diff_mixed(bilinear, 1, grid.ny() - 1), ValidationError);
}

TEST_CASE("noise-free cross-difference is second order") {
    const ModelParams p;
    double prev = 0.0;
    for (double d : {0.04, 0.02}) {
        const Grid grid = Grid::uniform(5.0, d, d);
        const Boundary g0 = init_exponential(p, grid, 0.75);
        const PolicyValue pv(p, g0);
        const ValueGridEstimate est = exact_value_grid(p, grid, g0);
        const std::size_t i = static_cast<std::size_t>(std::llround(2.0 / d));
        const std::size_t j = static_cast<std::size_t>(std::llround(0.1 / d)) - 1;
        REQUIRE(grid.y_nodes[j + 1] < g0(grid.x_nodes[i - 1]));
        const double err = std::abs(finite_diff_mixed(est, i, j) -
                                    pv.mixed_partial(grid.x_nodes[i], grid.y_nodes[j]));
        if (prev > 0.0) CHECK(err < 0.35 * prev);
        prev = err;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("pool-adjacent-violators") {
    CHECK(isotonic_nondecreasing({1, 3, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(isotonic_nondecreasing({3, 2, 1}) == std::vector<double>{2, 2, 2});
    CHECK(isotonic_nondecreasing({0.1, 0.2}) == std::vector<double>{0.1, 0.2});
    CHECK(isotonic_nondecreasing({}).empty());
}

TEST_CASE("grid estimates under g_lambda match the closed form") {
    const ModelParams p;
    const ClosedFormSolution cf(p);
    const Grid grid = Grid::uniform(5.0, 0.5, 0.1);
    const Boundary g = Boundary::tabulate(grid.x_nodes, [&](double x) { return cf.g_lambda(x); });
    SimConfig s;
    s.n_paths = 400;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        s.seed = seed;
        const ValueGridEstimate est = estimate_value_grid(p, s, grid, g, true);
        int beyond = 0, checked = 0;
        for (std::size_t i = 1; i < grid.nx(); ++i) {
            for (std::size_t j = 0; j < grid.ny(); ++j) {
                const double se = est.stderr_at(i, j);
                REQUIRE(se > 0.0);
                const double z = (est.value(i, j) - cf.value(grid.x_nodes[i], grid.y_nodes[j])) / se;
                beyond += std::abs(z) > 4.0;
                ++checked;
            }
        }
        CHECK(checked == 100);
        CHECK(beyond == 0);
    }
}

TEST_CASE("common random numbers shrink the cross-difference variance") {
    const ModelParams p;
    const Grid grid = Grid::uniform(5.0, 0.25, 0.05);
    const Boundary g = init_exponential(p, grid, 0.75);
    SimConfig s;
    s.n_paths = 20;
    // (3.5, 0.2): the whole stencil lies below g, so paths explore before any release.
    const std::size_t i = 14, j = 3;
    double m_crn = 0, v_crn = 0, m_ind = 0, v_ind = 0;
    double sum_crn = 0, sum_ind = 0, var_crn = 0, var_ind = 0;
    const int seeds = 30;
    std::vector<double> d_crn, d_ind;
    for (int k = 0; k < seeds; ++k) {
        s.seed = 100 + k;
        const auto a = estimate_value_grid(p, s, grid, g, true);
        const auto b = estimate_value_grid(p, s, grid, g, false);
        d_crn.push_back(finite_diff_mixed(a, i, j));
        d_ind.push_back(finite_diff_mixed(b, i, j));
        sum_crn += a.value(i, j);
        sum_ind += b.value(i, j);
        var_crn += a.stderr_at(i, j) * a.stderr_at(i, j);
        var_ind += b.stderr_at(i, j) * b.stderr_at(i, j);
        if (k == 0) {
            CHECK(a.mixed_stderr(i, j) > 0.0);
            CHECK(b.mixed_stderr(i, j) > 0.0);
        }
    }
    for (int k = 0; k < seeds; ++k) m_crn += d_crn[k] / seeds, m_ind += d_ind[k] / seeds;
    for (int k = 0; k < seeds; ++k) {
        v_crn += (d_crn[k] - m_crn) * (d_crn[k] - m_crn) / (seeds - 1);
        v_ind += (d_ind[k] - m_ind) * (d_ind[k] - m_ind) / (seeds - 1);
    }
    CHECK(v_crn < v_ind);
    // Same expectation: the crn mean cross-difference lies inside the
    // independent-sampling spread.
    CHECK(std::abs(m_crn - m_ind) < 3.0 * std::sqrt(v_ind / seeds + v_crn / seeds));
    const double exact = exact_value_grid(p, grid, g).value(i, j);
    CHECK(std::abs(sum_crn / seeds - exact) < 4.0 * std::sqrt(var_crn) / seeds);
    CHECK(std::abs(sum_ind / seeds - exact) < 4.0 * std::sqrt(var_ind) / seeds);
}

TEST_CASE("grid estimation is deterministic per seed") {
    const ModelParams p;
    const Grid grid = Grid::uniform(1.0, 0.25, 0.25);
    const Boundary g = init_exponential(p, grid, 0.75);
    SimConfig s;
    s.n_paths = 10;
    const auto a = estimate_value_grid(p, s, grid, g, true, 3);
    const auto b = estimate_value_grid(p, s, grid, g, true, 3);
    const auto c = estimate_value_grid(p, s, grid, g, true, 4);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
}

TEST_CASE("oracle-mode SPI tracks model-based policy iteration") {
    const ModelParams p;
    LearnConfig cfg;
    cfg.outer_iters = 10;
    const Boundary g0 = init_exponential(p, cfg.grid, 0.75);
    const IterationReport spi =
        spi_run(cfg, g0, oracle_source(p, cfg.grid), optimum_on(cfg.grid, p));
    PIConfig pc;
    pc.max_iters = cfg.outer_iters;
    pc.boundary_tol = 1e-300;
    const IterationReport pi = run(p, pc);
    REQUIRE(pi.boundaries.size() == spi.boundaries.size());
    for (std::size_t k = 0; k < spi.boundaries.size(); ++k) {
        const auto& a = spi.boundaries[k].y_values();
        const auto& b = pi.boundaries[k].y_values();
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        CHECK_MESSAGE(worst <= cfg.grid.delta_y, "iteration " << k << ": " << worst);
    }
}

TEST_CASE("large-sample SPI update follows the model-based update") {
    const ModelParams p;
    const Grid grid = Grid::uniform(5.0, 0.1, 0.05);
    const Boundary g0 = init_exponential(p, grid, 0.75);
    SimConfig s;
    s.n_paths = 4000;
    const ValueGridEstimate est = estimate_value_grid(p, s, grid, g0, true);
    const Boundary mc = spi_update(est, g0, 0.0);
    const Boundary model = improve(PolicyValue(p, g0), 1e-10);
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        CHECK(std::abs(mc.y_values()[i] - model.y_values()[i]) <= 2.0 * grid.delta_y);
    }
}

TEST_CASE("desk-scale SPI keeps boundaries admissible and L1 nonincreasing") {
    const ModelParams p;
    LearnConfig cfg;
    const Boundary g0 = init_exponential(p, cfg.grid, 0.75);
    const IterationReport rep =
        spi_run(cfg, g0, monte_carlo_source(p, cfg), optimum_on(cfg.grid, p));
    REQUIRE(rep.boundaries.size() == 11);
    for (std::size_t k = 0; k < rep.boundaries.size(); ++k) {
        const auto& g = rep.boundaries[k].y_values();
        CHECK(g.front() == g0.front());
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(g[i] > 0.0);
            CHECK(g[i] <= 1.0);
            if (i > 0) CHECK(g[i] >= g[i - 1]);
        }
        if (k > 0) CHECK(rep.l1_err[k] <= rep.l1_err[k - 1]);
    }
    CHECK(rep.l1_err.back() < rep.l1_err.front());
}

TEST_CASE("learning configuration validation") {
    LearnConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.n_paths_per_node = 0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = LearnConfig{};
    cfg.outer_iters = 0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = LearnConfig{};
    cfg.eta0 = -1.0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg = LearnConfig{};
    cfg.gate_sigma = -1.0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
}
