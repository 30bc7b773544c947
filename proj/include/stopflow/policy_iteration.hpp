#pragma once

#include <string>
#include <vector>

#include "stopflow/boundary.hpp"
#include "stopflow/core_model.hpp"
#include "stopflow/policy_value.hpp"

namespace stopflow {

enum class InitKind { linear, exponential };

InitKind parse_init_kind(const std::string& s);
std::string to_string(InitKind k);

struct PIConfig {
    Grid grid = Grid::uniform(5.0, 0.02, 0.02);
    int max_iters = 50;
    double boundary_tol = 1e-10;  ///< stop once sup|g_{k+1} - g_k| falls below this
    double root_tol = 1e-10;      ///< bisection width in y, and the keep threshold
    InitKind init_kind = InitKind::exponential;
    double init_zeta = 0.75;      ///< exponent for the exponential initialization
    bool track_value = true;      ///< compute min(u_{k+1} - u_k) over the grid
};

/// Throws ValidationError when the config is inconsistent with `params`.
void validate(const PIConfig& cfg, const ModelParams& params);

struct IterationReport {
    std::vector<Boundary> boundaries;           ///< g_0, g_1, ...
    std::vector<double> sup_err;                ///< sup over nodes |g_k - g_lambda|
    std::vector<double> l1_err;                 ///< trapezoidal integral of |g_k - g_lambda|
    std::vector<double> min_value_improvement;  ///< entry k: min(u_{k} - u_{k-1}); NaN at k = 0
    bool converged = false;
};

/// Outcome of checking an initial boundary against the initialization
/// requirements: monotone, starts at y_lambda, dominates g_lambda.
struct InitCheck {
    bool monotone = true;
    bool starts_at_y_lambda = true;
    bool dominates = true;
    double worst_x = 0.0;    ///< node with the most negative g_0 - g_lambda
    double worst_gap = 0.0;  ///< that (negative) difference, 0 if none
    bool ok() const { return monotone && starts_at_y_lambda && dominates; }
};

InitCheck check_initial_policy(const ModelParams& params, const Boundary& g0);

/// Linear ramp from y_lambda reaching 1 at x1 = (1/2)(c)^{-theta},
/// c = -alpha_-(kappa + lambda/rho)/(theta - alpha_-). Verified; throws
/// ValidationError naming the offending x when it undercuts g_lambda.
Boundary init_linear(const ModelParams& params, const Grid& grid);

/// exp(c(zeta) max(x^theta, x^zeta) - 1 - kappa rho/lambda) capped at 1, with
/// c(zeta) = (rho/lambda) P (zeta - alpha_-)/(-alpha_-). Verified as above.
Boundary init_exponential(const ModelParams& params, const Grid& grid, double zeta);

/// The textbook exponential form exp((rho/lambda)(zeta - alpha_-) x^zeta/(-alpha_-)
/// - 1 - kappa rho/lambda) capped at 1, tabulated without verification.
Boundary init_exponential_unscaled(const ModelParams& params, const Grid& grid, double zeta);

/// One boundary update: at every node x > 0 where the mixed partial at
/// (x, g_k(x)) is below -root_tol, move down to the largest root below
/// g_k(x). Nodes are solved in parallel.
Boundary improve(const PolicyValue& current, double root_tol);

/// Iterates improve() from the configured initialization.
IterationReport run(const ModelParams& params, const PIConfig& cfg);

/// sup and trapezoidal L1 distance between a boundary and g_lambda at its nodes.
struct BoundaryError {
    double sup;
    double l1;
};
BoundaryError distance_to(const Boundary& g, const std::vector<double>& reference);

}  // namespace stopflow
