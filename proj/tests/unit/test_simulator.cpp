#include <boost/random/normal_distribution.hpp>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "stopflow/analytic.hpp"
#include "stopflow/boundary.hpp"
#include "stopflow/errors.hpp"
#include "stopflow/parallel.hpp"
#include "stopflow/simulator.hpp"

using namespace stopflow;

namespace {

SimConfig quick(std::size_t paths, std::uint64_t seed = 42) {
    SimConfig c;
    c.n_paths = paths;
    c.seed = seed;
    return c;
}

ModelParams no_entropy() {
    ModelParams p;
    p.lambda = 0.0;
    return p;
}

}  // namespace

TEST_CASE("simulation config validation") {
    SimConfig c;
    CHECK_NOTHROW(validate(c));
    c.dt = 0.05;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.horizon = 0.0;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.n_paths = 0;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.antithetic = true;
    c.n_paths = 3;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = SimConfig{};
    c.reward_tol = 0.0;
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("horizon too short for the truncation tolerance") {
    SimConfig c = quick(10);
    c.horizon = 2.0;
    const Simulator sim(ModelParams{}, c);
    CHECK_THROWS_AS(sim.estimate_value(1.0, 1.0, NeverStop{}), ValidationError);
    CHECK(tail_bound(ModelParams{}, 1.0, 20.0) < 1e-2);
}

TEST_CASE("one GBM step has mean x e^{mu dt}") {
    const ModelParams p;
    const double x = 2.0, dt = 0.01;
    PhiloxStream eng(3, 0);
    boost::random::normal_distribution<double> normal;
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = step_gbm(p, x, dt, normal(eng));
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - x * std::exp(p.mu * dt)) < 4.0 * se);
    CHECK_THROWS_AS(step_gbm(p, 0.0, dt, 0.1), ValidationError);
}

TEST_CASE("randomized stopping time has CDF xi") {
    const double dt = 0.01;
    std::vector<double> xi(1001);
    for (std::size_t i = 0; i < xi.size(); ++i) {
        const double t = static_cast<double>(i) * dt;
        xi[i] = 0.8 * (1.0 - std::exp(-0.7 * t));
    }
    PhiloxStream eng(5, 0);
    const int n = 100000;
    std::vector<int> stops(xi.size(), 0);
    int never = 0;
    for (int k = 0; k < n; ++k) {
        const auto s = sample_randomized_stop(xi, eng.uniform01());
        if (s) ++stops[*s];
        else ++never;
    }
    double ks = 0.0;
    int cum = 0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        cum += stops[i];
        ks = std::max(ks, std::abs(static_cast<double>(cum) / n - xi[i]));
    }
    CHECK(ks < 0.01);
    CHECK(static_cast<double>(never) / n == doctest::Approx(1.0 - xi.back()).epsilon(0.02));
}

TEST_CASE("cumulative residual entropy") {
    const double rho = 0.5, dt = 1e-3;
    const std::size_t n = 20000;
    std::vector<double> step(n, 0.0);
    for (std::size_t i = n / 3; i < n; ++i) step[i] = 1.0;
    CHECK(cre(step, dt, rho) == 0.0);
    CHECK(cre(std::vector<double>(n, 0.0), dt, rho) == 0.0);
    const std::vector<double> flat(n, 1.0 - std::exp(-1.0));
    const double T = static_cast<double>(n) * dt;
    CHECK(cre(flat, dt, rho) ==
          doctest::Approx((1.0 / rho) * (1.0 - std::exp(-rho * T)) * std::exp(-1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(cre({0.5, 1.5}, dt, rho), ValidationError);
}

TEST_CASE("trajectories reflect at the boundary") {
    const ModelParams p;
    const ClosedFormBoundary cf(p);
    SimConfig c = quick(1);
    c.horizon = 20.0;
    const Simulator sim(p, c);
    auto g = [&](double x) { return cf.g_lambda(x); };
    const Trajectory tr = sim.simulate_policy(2.0, 1.0, g, 0);
    REQUIRE(tr.x.size() == sim.n_steps() + 1);
    CHECK(tr.y.front() == doctest::Approx(cf.g_lambda(2.0)));
    double running_min = 1.0;
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
        running_min = std::min(running_min, cf.g_lambda(tr.x[i]));
        CHECK(tr.y[i] == doctest::Approx(running_min).epsilon(1e-14));
        CHECK(tr.xi[i] == doctest::Approx(1.0 - tr.y[i]));
        if (i > 0) CHECK(tr.xi[i] >= tr.xi[i - 1]);
    }
}

TEST_CASE("never stopping without entropy pays P x^theta - kappa") {
    const ModelParams p = no_entropy();
    const Simulator sim(p, quick(2000));
    for (double x : {1.0, 4.0}) {
        const Estimate e = sim.estimate_value(x, 1.0, NeverStop{});
        const double ref = oracle::resolvent_P(p) * std::sqrt(x) - p.kappa;
        CHECK(std::abs(e.mean - ref) < 3.0 * e.stderr_);
        CHECK(e.n_paths == 2000);
    }
}

TEST_CASE("Monte Carlo value under g_lambda matches the closed form") {
    const ModelParams p;
    const ClosedFormSolution cf(p);
    const Simulator sim(p, quick(2000, 9));
    const Estimate e = sim.estimate_value(2.0, 1.0, [&](double x) { return cf.g_lambda(x); });
    CHECK(std::abs(e.mean - cf.value(2.0, 1.0)) < 3.0 * e.stderr_);
}

TEST_CASE("hitting rules against the unregularized optimum") {
    const ModelParams p = no_entropy();
    const double b = oracle::b_star(p);
    const Simulator sim(p, quick(3000, 11));
    const double x0 = 2.0 * b;
    const double v = oracle::value_unregularized(p, x0);
    const Estimate at_b = sim.estimate_value(x0, 1.0, HittingRule{b});
    CHECK(std::abs(at_b.mean - v) < 3.0 * at_b.stderr_);
    const double w = oracle::hitting_value(p, x0, 1.5 * b);
    CHECK(w < v - 0.03);
    const Estimate late = sim.estimate_value(x0, 1.0, HittingRule{1.5 * b});
    CHECK(std::abs(late.mean - w) < 3.0 * late.stderr_);
}

TEST_CASE("randomized controls do not beat the optimum without entropy") {
    const auto rows = no_exploration_benefit_test(ModelParams{}, 2.0 * oracle::b_star(ModelParams{}),
                                                  quick(2000, 13));
    REQUIRE(rows.size() == 6);
    for (const ComparisonRow& r : rows) {
        CHECK_MESSAGE(r.within, r.policy);
        CHECK(r.reference == doctest::Approx(oracle::value_unregularized(
                                 no_entropy(), 2.0 * oracle::b_star(ModelParams{}))));
    }
}

TEST_CASE("results do not depend on the thread count") {
    const ModelParams p;
    const ClosedFormBoundary cf(p);
    const Simulator sim(p, quick(64));
    auto g = [&](double x) { return cf.g_lambda(x); };
    set_default_threads(1);
    const auto one = sim.path_rewards(1.5, {0.3, 1.0}, g);
    set_default_threads(4);
    const auto four = sim.path_rewards(1.5, {0.3, 1.0}, g);
    set_default_threads(0);
    CHECK(one == four);
}

TEST_CASE("antithetic pairs share magnitudes") {
    const ModelParams p;
    SimConfig c = quick(2);
    c.antithetic = true;
    const Simulator sim(p, c);
    const Trajectory a = sim.simulate_policy(1.0, 1.0, NeverStop{}, 0);
    const Trajectory b = sim.simulate_policy(1.0, 1.0, NeverStop{}, 1);
    // log X_t - drift t is mirrored between the two paths.
    const double drift = (p.mu - 0.5 * p.sigma * p.sigma);
    for (std::size_t i = 0; i < a.x.size(); i += 997) {
        const double t = a.times[i];
        CHECK(std::log(a.x[i]) - drift * t == doctest::Approx(-(std::log(b.x[i]) - drift * t)).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("path bundle agrees with the direct simulator") {
    const ModelParams p;
    const ClosedFormBoundary cf(p);
    const SimConfig c = quick(50, 17);
    const Simulator sim(p, c);
    const PathBundle bundle(p, c);
    REQUIRE(bundle.n_paths() == 50);
    auto g = [&](double x) { return cf.g_lambda(x); };
    const std::vector<double> ys{0.1, 0.5, 1.0};
    for (double x0 : {0.5, 2.0, 4.0}) {
        const auto direct = sim.path_rewards(x0, ys, g);
        std::vector<double> out(ys.size());
        for (std::size_t path = 0; path < 50; ++path) {
            bundle.rewards(path, x0, ys, g, out.data());
            for (std::size_t j = 0; j < ys.size(); ++j) {
                CHECK(out[j] == doctest::Approx(direct[path * ys.size() + j]).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("zero initial mass earns nothing") {
    const Simulator sim(ModelParams{}, quick(20));
    const Estimate e = sim.estimate_value(1.0, 0.0, NeverStop{});
    CHECK(e.mean == 0.0);
    CHECK(e.stderr_ == 0.0);
    CHECK_THROWS_AS(sim.estimate_value(1.0, 1.5, NeverStop{}), ValidationError);
    CHECK_THROWS_AS(sim.estimate_value(-1.0, 0.5, NeverStop{}), ValidationError);
}
