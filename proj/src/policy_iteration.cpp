#include "stopflow/policy_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "stopflow/analytic.hpp"
#include "stopflow/errors.hpp"
#include "stopflow/numerics.hpp"
#include "stopflow/parallel.hpp"

namespace stopflow {

InitKind parse_init_kind(const std::string& s) {
    if (s == "linear") return InitKind::linear;
    if (s == "exponential") return InitKind::exponential;
    throw ValidationError("unknown init kind '" + s + "' (expected linear or exponential)");
}

std::string to_string(InitKind k) { return k == InitKind::linear ? "linear" : "exponential"; }

void validate(const PIConfig& cfg, const ModelParams& params) {
    std::vector<std::string> bad;
    if (cfg.max_iters < 1) bad.emplace_back("max_iters < 1");
    if (!(cfg.boundary_tol > 0.0)) bad.emplace_back("boundary_tol <= 0");
    if (!(cfg.root_tol > 0.0)) bad.emplace_back("root_tol <= 0");
    if (!(cfg.root_tol < cfg.grid.delta_y)) bad.emplace_back("root_tol >= delta_y");
    if (cfg.init_kind == InitKind::exponential &&
        !(cfg.init_zeta > params.theta && cfg.init_zeta < 1.0)) {
        bad.emplace_back("zeta outside (theta, 1)");
    }
    if (!bad.empty()) {
        std::string msg = "invalid policy-iteration config: ";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        throw ValidationError(msg);
    }
}

BoundaryError distance_to(const Boundary& g, const std::vector<double>& reference) {
    const auto& xs = g.x_nodes();
    const auto& ys = g.y_values();
    if (reference.size() != ys.size()) throw ValidationError("distance_to: size mismatch");
    BoundaryError e{0.0, 0.0};
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double d = std::abs(ys[i] - reference[i]);
        e.sup = std::max(e.sup, d);
        if (i > 0) {
            e.l1 += 0.5 * (xs[i] - xs[i - 1]) * (d + std::abs(ys[i - 1] - reference[i - 1]));
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Initializations

InitCheck check_initial_policy(const ModelParams& params, const Boundary& g0) {
    const ClosedFormBoundary cf(params);
    InitCheck c;
    c.monotone = g0.strictly_increasing_before_hat();
    c.starts_at_y_lambda =
        std::abs(g0.front() - cf.y_lambda()) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                    cf.y_lambda();
    const auto& xs = g0.x_nodes();
    const auto& ys = g0.y_values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] > g0.x_hat()) break;
        const double gap = ys[i] - cf.g_lambda(xs[i]);
        if (gap < c.worst_gap) {
            c.worst_gap = gap;
            c.worst_x = xs[i];
        }
    }
    c.dominates = c.worst_gap >= 0.0;
    return c;
}

namespace {

Boundary verified(const ModelParams& params, Boundary g0, const char* name) {
    const InitCheck c = check_initial_policy(params, g0);
    if (!c.ok()) {
        std::ostringstream os;
        os << name << " initialization rejected:";
        if (!c.monotone) os << " not strictly increasing before it reaches 1;";
        if (!c.starts_at_y_lambda) os << " g0(0) differs from y_lambda;";
        if (!c.dominates) {
            os << " g0 falls below g_lambda at x = " << c.worst_x << " (by " << -c.worst_gap
               << ");";
        }
        throw ValidationError(os.str());
    }
    return g0;
}

}  // namespace

Boundary init_linear(const ModelParams& params, const Grid& grid) {
    const RealOptionModel m(params);
    const ModelParams& p = m.params();
    const double a = m.alpha_minus();
    const double y0 = std::exp(-1.0 - p.kappa * p.rho / p.lambda);
    const double c = -a * (p.kappa + p.lambda / p.rho) / (p.theta - a);
    const double slope = 2.0 * (1.0 - y0) * std::pow(c, p.theta);
    auto g = [&](double x) { return std::min(y0 + slope * x, 1.0); };
    return verified(params, Boundary::tabulate(grid.x_nodes, g), "linear");
}

Boundary init_exponential(const ModelParams& params, const Grid& grid, double zeta) {
    const RealOptionModel m(params);
    const ModelParams& p = m.params();
    if (!(zeta > p.theta && zeta < 1.0)) throw ValidationError("zeta must lie in (theta, 1)");
    const double a = m.alpha_minus();
    const double scale = (p.rho / p.lambda) * m.P() * (zeta - a) / (-a);
    const double shift = -1.0 - p.kappa * p.rho / p.lambda;
    auto g = [&](double x) {
        const double growth = std::max(std::pow(x, p.theta), std::pow(x, zeta));
        return std::min(std::exp(scale * growth + shift), 1.0);
    };
    return verified(params, Boundary::tabulate(grid.x_nodes, g), "exponential");
}

Boundary init_exponential_unscaled(const ModelParams& params, const Grid& grid, double zeta) {
    const RealOptionModel m(params);
    const ModelParams& p = m.params();
    const double a = m.alpha_minus();
    const double scale = (p.rho / p.lambda) * (zeta - a) / (-a);
    const double shift = -1.0 - p.kappa * p.rho / p.lambda;
    auto g = [&](double x) { return std::min(std::exp(scale * std::pow(x, zeta) + shift), 1.0); };
    return Boundary::tabulate(grid.x_nodes, g);
}

// ---------------------------------------------------------------------------
// Improvement step

Boundary improve(const PolicyValue& current, double root_tol) {
    const Boundary& g = current.boundary();
    const auto& xs = g.x_nodes();
    const auto& ys = g.y_values();
    const double y_lo = ys.front() * (1.0 - 1e-12);
    std::vector<double> next(ys);

    parallel_for(xs.size(), [&](std::size_t i) {
        const double x = xs[i];
        if (x == 0.0) return;
        const double yk = ys[i];
        auto f = [&](double y) { return current.mixed_partial(x, y); };
        if (f(yk) >= -root_tol) return;

        // Locate the topmost sign change on a coarse scan, then bisect it.
        constexpr int kScan = 32;
        double prev_y = y_lo;
        bool prev_pos = f(y_lo) > 0.0;
        int changes = 0;
        double bracket_lo = y_lo;
        for (int s = 1; s <= kScan; ++s) {
            const double y = y_lo + (yk - y_lo) * s / kScan;
            const bool pos = f(y) > 0.0;
            if (pos != prev_pos) {
                ++changes;
                bracket_lo = prev_y;
            }
            prev_y = y;
            prev_pos = pos;
        }
        if (changes != 1) {
            std::ostringstream os;
            os << "improve: expected one sign change of the mixed partial below g(x) at x = " << x
               << ", found " << changes;
            throw NumericalError(os.str());
        }
        const double hi = std::min(yk, bracket_lo + (yk - y_lo) / kScan);
        next[i] = numerics::bisect(f, bracket_lo, hi, root_tol);
    });
    return Boundary(xs, std::move(next));
}

IterationReport run(const ModelParams& params, const PIConfig& cfg) {
    validate(cfg, params);
    const ClosedFormBoundary cf(params);
    std::vector<double> reference(cfg.grid.nx());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        reference[i] = cf.g_lambda(cfg.grid.x_nodes[i]);
    }

    IterationReport rep;
    auto record = [&](Boundary b, double improvement) {
        const BoundaryError e = distance_to(b, reference);
        rep.sup_err.push_back(e.sup);
        rep.l1_err.push_back(e.l1);
        rep.min_value_improvement.push_back(improvement);
        rep.boundaries.push_back(std::move(b));
    };

    Boundary g0 = cfg.init_kind == InitKind::linear
                      ? init_linear(params, cfg.grid)
                      : init_exponential(params, cfg.grid, cfg.init_zeta);
    record(std::move(g0), std::numeric_limits<double>::quiet_NaN());

    const auto& xs = cfg.grid.x_nodes;
    const auto& ys = cfg.grid.y_nodes;
    auto pv = std::make_unique<PolicyValue>(params, rep.boundaries.back());
    for (int k = 0; k < cfg.max_iters; ++k) {
        Boundary next = improve(*pv, cfg.root_tol);
        if (!next.strictly_increasing_before_hat()) {
            throw NumericalError("policy iteration produced a boundary that is not strictly "
                                 "increasing before it reaches 1 (iteration " +
                                 std::to_string(k + 1) + ")");
        }
        auto pv_next = std::make_unique<PolicyValue>(params, next);

        double improvement = std::numeric_limits<double>::quiet_NaN();
        if (cfg.track_value) {
            std::vector<double> per_x(xs.size(), std::numeric_limits<double>::infinity());
            parallel_for(xs.size(), [&](std::size_t i) {
                for (double y : ys) {
                    per_x[i] = std::min(per_x[i],
                                        pv_next->value(xs[i], y) - pv->value(xs[i], y));
                }
            });
            improvement = *std::min_element(per_x.begin(), per_x.end());
        }

        double change = 0.0;
        const auto& prev = rep.boundaries.back().y_values();
        for (std::size_t i = 0; i < prev.size(); ++i) {
            change = std::max(change, std::abs(next.y_values()[i] - prev[i]));
        }
        record(std::move(next), improvement);
        pv = std::move(pv_next);
        if (change < cfg.boundary_tol) {
            rep.converged = true;
            break;
        }
    }
    return rep;
}

}  // namespace stopflow
