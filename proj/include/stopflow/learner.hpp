#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stopflow/boundary.hpp"
#include "stopflow/core_model.hpp"
#include "stopflow/policy_iteration.hpp"
#include "stopflow/simulator.hpp"

namespace stopflow {

// ---------------------------------------------------------------------------
// Zeroth-order search for the minimal mass level

struct Y0Config {
    double eta0 = 0.05;
    double c0 = 0.01;
    int max_iters = 200;
    double grad_tol = 1e-6;
};

struct Y0TraceRow {
    int iter;
    double y;     ///< iterate after this iteration
    double grad;  ///< two-point gradient of -J used at this iteration
};

struct Y0Result {
    double y = 0.0;
    bool converged = false;  ///< stopped on the gradient tolerance
    std::vector<Y0TraceRow> trace;  ///< row 0 holds the starting point
};

/// Descends on -J(y) with two-point gradients. `value_at_zero` is treated as
/// a black box returning the simulator value at x = 0 under xi = 0.
/// Throws NumericalError when the iterate sits on a clamp for 50 steps.
Y0Result learn_initial_mass(const std::function<double(double)>& value_at_zero, double y_init,
                            const Y0Config& cfg);

/// Simulator value at x = 0 with no control, for `learn_initial_mass`.
std::function<double(double)> zero_state_value(const ModelParams& env, const SimConfig& sim);

// ---------------------------------------------------------------------------
// Grid value estimates

struct ValueGridEstimate {
    Grid grid;
    std::size_t n_paths = 0;
    std::vector<double> values;         ///< [i * ny + j]
    std::vector<double> stderrs;        ///< standard error of each value
    std::vector<double> mixed_stderrs;  ///< standard error of the cross-difference at each node

    double value(std::size_t i, std::size_t j) const { return values[i * grid.ny() + j]; }
    double stderr_at(std::size_t i, std::size_t j) const { return stderrs[i * grid.ny() + j]; }
    double mixed_stderr(std::size_t i, std::size_t j) const {
        return mixed_stderrs[i * grid.ny() + j];
    }
};

/// Monte-Carlo value of the reflection policy g at every grid node using
/// `sim.n_paths` paths per node. With crn every node replays the same paths;
/// otherwise node (i, j) draws from its own lane. `lane_base` selects a
/// fresh family of streams (e.g. one per outer iteration).
ValueGridEstimate estimate_value_grid(const ModelParams& env, const SimConfig& sim,
                                      const Grid& grid, const Boundary& g, bool crn,
                                      std::uint32_t lane_base = 0);

/// Noise-free grid values from the exact policy value (zero standard errors).
ValueGridEstimate exact_value_grid(const ModelParams& params, const Grid& grid,
                                   const Boundary& g);

/// Central cross-difference at an interior node; throws ValidationError on
/// boundary nodes.
double finite_diff_mixed(const ValueGridEstimate& est, std::size_t i, std::size_t j);

/// Least-squares nondecreasing fit (pool adjacent violators, unit weights).
std::vector<double> isotonic_nondecreasing(const std::vector<double>& v);

// ---------------------------------------------------------------------------
// Sample-based policy iteration

struct LearnConfig {
    Grid grid = Grid::uniform(5.0, 0.02, 0.02);
    std::size_t n_paths_per_node = 20;
    int outer_iters = 10;
    SimConfig sim;
    double eta0 = 0.05;
    double c0 = 0.01;
    bool crn = true;
    double gate_sigma = 3.0;  ///< keep threshold in standard errors of the cross-difference
};

void validate(const LearnConfig& cfg);

using ValueSource = std::function<ValueGridEstimate(const Boundary& g, int iteration)>;

/// One update from grid values: where the cross-difference at the highest
/// y-node under g_k(x) is significantly negative, move down to the next sign
/// change below it (linear interpolation), then restore monotonicity. The
/// last column and the top row use one-sided differences.
Boundary spi_update(const ValueGridEstimate& est, const Boundary& g, double gate_sigma);

/// Runs `outer_iters` updates from g0 drawing values from `source`, recording
/// distances to `reference` (g_lambda at the grid nodes).
IterationReport spi_run(const LearnConfig& cfg, const Boundary& g0, const ValueSource& source,
                        const std::vector<double>& reference);

/// Monte-Carlo value source with fresh streams per outer iteration.
ValueSource monte_carlo_source(const ModelParams& env, const LearnConfig& cfg);

/// Exact policy values in place of simulation.
ValueSource oracle_source(const ModelParams& params, const Grid& grid);

}  // namespace stopflow
