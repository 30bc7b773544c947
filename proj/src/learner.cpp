#include "stopflow/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stopflow/errors.hpp"
#include "stopflow/parallel.hpp"
#include "stopflow/policy_value.hpp"

namespace stopflow {

namespace {

constexpr double kClampLo = 1e-6;
constexpr double kClampHi = 1.0 - 1e-6;
constexpr int kMaxPinned = 50;

// Running mean and sum of squared deviations.
struct Welford {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    double stderr_() const {
        return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    }
};

bool has_mixed(std::size_t i, std::size_t j) { return i >= 1 && j >= 1; }

// Central differences inside the grid; one-sided on the last column and the
// top row.
template <class U>
double cross_difference(const Grid& grid, std::size_t i, std::size_t j, const U& u) {
    const std::size_t ip = (i + 1 < grid.nx()) ? i + 1 : i;
    const std::size_t jp = (j + 1 < grid.ny()) ? j + 1 : j;
    const std::size_t im = i - 1;
    const std::size_t jm = j - 1;
    const double dx = grid.x_nodes[ip] - grid.x_nodes[im];
    const double dy = grid.y_nodes[jp] - grid.y_nodes[jm];
    return (u(ip, jp) - u(ip, jm) - u(im, jp) + u(im, jm)) / (dx * dy);
}

double mixed_at(const ValueGridEstimate& est, std::size_t i, std::size_t j) {
    return cross_difference(est.grid, i, j,
                            [&](std::size_t a, std::size_t b) { return est.value(a, b); });
}

void check_grid_for(const Grid& grid, const Boundary& g) {
    if (grid.ny() < 3 || grid.nx() < 3) {
        throw ValidationError("grid needs at least 3 nodes in each direction");
    }
    if (g.size() != grid.nx()) {
        throw ValidationError("boundary must be tabulated on the grid's x nodes");
    }
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        if (g.x_nodes()[i] != grid.x_nodes[i]) {
            throw ValidationError("boundary must be tabulated on the grid's x nodes");
        }
    }
}

ValueGridEstimate crn_grid(const ModelParams& env, const SimConfig& sim, const Grid& grid,
                           const Boundary& g, std::uint32_t lane) {
    const PathBundle bundle(env, sim, lane);
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    const std::size_t m = bundle.n_paths();

    ValueGridEstimate est;
    est.grid = grid;
    est.n_paths = m;
    est.values.assign(nx * ny, 0.0);
    est.stderrs.assign(nx * ny, 0.0);
    est.mixed_stderrs.assign(nx * ny, std::numeric_limits<double>::quiet_NaN());

    constexpr std::size_t kChunk = 16;
    const std::size_t n_chunks = (nx + kChunk - 1) / kChunk;
    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t a = c * kChunk;
        const std::size_t b = std::min(nx, a + kChunk);
        const std::size_t lo = a > 0 ? a - 1 : 0;
        const std::size_t hi = std::min(nx - 1, b);
        const std::size_t width = hi - lo + 1;
        std::vector<double> slab(width * ny);
        std::vector<Welford> val((b - a) * ny);
        std::vector<Welford> mix((b - a) * ny);
        auto u = [&](std::size_t i, std::size_t j) { return slab[(i - lo) * ny + j]; };
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t i = lo; i <= hi; ++i) {
                bundle.rewards(p, grid.x_nodes[i], grid.y_nodes, g, slab.data() + (i - lo) * ny);
            }
            for (std::size_t i = a; i < b; ++i) {
                for (std::size_t j = 0; j < ny; ++j) {
                    val[(i - a) * ny + j].add(u(i, j));
                    if (has_mixed(i, j)) {
                        mix[(i - a) * ny + j].add(cross_difference(grid, i, j, u));
                    }
                }
            }
        }
        for (std::size_t i = a; i < b; ++i) {
            for (std::size_t j = 0; j < ny; ++j) {
                const std::size_t k = i * ny + j;
                est.values[k] = val[(i - a) * ny + j].mean;
                est.stderrs[k] = val[(i - a) * ny + j].stderr_();
                if (has_mixed(i, j)) est.mixed_stderrs[k] = mix[(i - a) * ny + j].stderr_();
            }
        }
    });
    return est;
}

ValueGridEstimate independent_grid(const ModelParams& env, const SimConfig& sim,
                                   const Grid& grid, const Boundary& g, std::uint32_t lane_base) {
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    const std::uint64_t nodes = nx * ny;
    if ((static_cast<std::uint64_t>(lane_base) + 1) * nodes > 0xffffffffull) {
        throw ValidationError("too many grid nodes for independent streams");
    }

    ValueGridEstimate est;
    est.grid = grid;
    est.n_paths = sim.n_paths;
    est.values.assign(nx * ny, 0.0);
    est.stderrs.assign(nx * ny, 0.0);
    est.mixed_stderrs.assign(nx * ny, std::numeric_limits<double>::quiet_NaN());

    for (std::size_t k = 0; k < nodes; ++k) {
        const auto lane = static_cast<std::uint32_t>(lane_base * nodes + k);
        const PathBundle bundle(env, sim, lane);
        const std::vector<double> y0{grid.y_nodes[k % ny]};
        const double x0 = grid.x_nodes[k / ny];
        Welford w;
        double r = 0.0;
        for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
            bundle.rewards(p, x0, y0, g, &r);
            w.add(r);
        }
        est.values[k] = w.mean;
        est.stderrs[k] = w.stderr_();
    }
    for (std::size_t i = 1; i < nx; ++i) {
        for (std::size_t j = 1; j < ny; ++j) {
            const std::size_t ip = (i + 1 < nx) ? i + 1 : i;
            const std::size_t jp = (j + 1 < ny) ? j + 1 : j;
            const double dx = grid.x_nodes[ip] - grid.x_nodes[i - 1];
            const double dy = grid.y_nodes[jp] - grid.y_nodes[j - 1];
            double var = 0.0;
            for (std::size_t a : {ip, i - 1}) {
                for (std::size_t b : {jp, j - 1}) var += est.stderr_at(a, b) * est.stderr_at(a, b);
            }
            est.mixed_stderrs[i * ny + j] = std::sqrt(var) / (dx * dy);
        }
    }
    return est;
}

}  // namespace

// ---------------------------------------------------------------------------

Y0Result learn_initial_mass(const std::function<double(double)>& value_at_zero, double y_init,
                            const Y0Config& cfg) {
    if (!(y_init > 0.0 && y_init < 1.0)) throw ValidationError("y_init must lie in (0,1)");
    if (!(cfg.eta0 > 0.0) || !(cfg.c0 > 0.0)) throw ValidationError("eta0 and c0 must be positive");
    if (cfg.max_iters < 1) throw ValidationError("iteration count must be positive");
    if (!(cfg.grad_tol >= 0.0)) throw ValidationError("grad_tol must be nonnegative");

    Y0Result res;
    double y = std::clamp(y_init, kClampLo, kClampHi);
    res.trace.push_back({0, y, std::numeric_limits<double>::quiet_NaN()});
    int pinned = 0;
    for (int i = 1; i <= cfg.max_iters; ++i) {
        const double eps = std::min({y, 1.0 - y, cfg.c0 / i});
        const double grad = (value_at_zero(y - eps) - value_at_zero(y + eps)) / (2.0 * eps);
        if (!std::isfinite(grad)) throw NumericalError("learn_initial_mass: non-finite gradient");
        if (std::abs(grad) < cfg.grad_tol) {
            res.trace.push_back({i, y, grad});
            res.converged = true;
            break;
        }
        const double step = y - cfg.eta0 / std::sqrt(static_cast<double>(i)) * grad;
        const double next = std::clamp(step, kClampLo, kClampHi);
        pinned = (next != step) ? pinned + 1 : 0;
        if (pinned >= kMaxPinned) {
            std::ostringstream msg;
            msg << "learn_initial_mass diverged: iterate pinned at " << next << " for "
                << kMaxPinned << " steps";
            throw NumericalError(msg.str());
        }
        y = next;
        res.trace.push_back({i, y, grad});
    }
    res.y = y;
    return res;
}

std::function<double(double)> zero_state_value(const ModelParams& env, const SimConfig& sim) {
    SimConfig one = sim;
    one.n_paths = 1;
    one.antithetic = false;
    const Simulator simulator(env, one);
    return [simulator](double y) { return simulator.estimate_value(0.0, y, NeverStop{}).mean; };
}

ValueGridEstimate estimate_value_grid(const ModelParams& env, const SimConfig& sim,
                                      const Grid& grid, const Boundary& g, bool crn,
                                      std::uint32_t lane_base) {
    validate(sim);
    check_grid_for(grid, g);
    const double tail = tail_bound(env, grid.x_nodes.back(), sim.horizon);
    if (!(tail < sim.reward_tol)) {
        std::ostringstream msg;
        msg << "horizon " << sim.horizon << " too short for x up to " << grid.x_nodes.back()
            << ": tail bound " << tail << " exceeds reward_tol " << sim.reward_tol;
        throw ValidationError(msg.str());
    }
    return crn ? crn_grid(env, sim, grid, g, lane_base)
               : independent_grid(env, sim, grid, g, lane_base);
}

ValueGridEstimate exact_value_grid(const ModelParams& params, const Grid& grid,
                                   const Boundary& g) {
    check_grid_for(grid, g);
    const PolicyValue pv(params, g);
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    ValueGridEstimate est;
    est.grid = grid;
    est.values.assign(nx * ny, 0.0);
    est.stderrs.assign(nx * ny, 0.0);
    est.mixed_stderrs.assign(nx * ny, 0.0);
    parallel_for(nx, [&](std::size_t i) {
        for (std::size_t j = 0; j < ny; ++j) {
            est.values[i * ny + j] = pv.value(grid.x_nodes[i], grid.y_nodes[j]);
        }
    });
    return est;
}

double finite_diff_mixed(const ValueGridEstimate& est, std::size_t i, std::size_t j) {
    const Grid& grid = est.grid;
    if (i < 1 || i + 1 >= grid.nx() || j < 1 || j + 1 >= grid.ny()) {
        std::ostringstream msg;
        msg << "finite_diff_mixed: node (" << i << ", " << j << ") is not interior";
        throw ValidationError(msg.str());
    }
    return mixed_at(est, i, j);
}

std::vector<double> isotonic_nondecreasing(const std::vector<double>& v) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(v.size());
    for (double x : v) {
        blocks.push_back({x, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
    return out;
}

// ---------------------------------------------------------------------------

void validate(const LearnConfig& cfg) {
    validate(cfg.sim);
    std::ostringstream err;
    if (cfg.grid.nx() < 3 || cfg.grid.ny() < 3) err << "grid needs at least 3 nodes per axis; ";
    if (!cfg.grid.y_nodes.empty() && !(cfg.grid.y_nodes.front() > 0.0)) {
        err << "grid y nodes must exclude 0; ";
    }
    if (cfg.n_paths_per_node == 0) err << "paths per node must be positive; ";
    if (cfg.sim.antithetic && cfg.n_paths_per_node % 2 != 0) {
        err << "antithetic sampling needs an even paths-per-node count; ";
    }
    if (cfg.outer_iters < 1) err << "outer_iters must be positive; ";
    if (!(cfg.eta0 > 0.0)) err << "eta0 must be positive; ";
    if (!(cfg.c0 > 0.0)) err << "c0 must be positive; ";
    if (!(cfg.gate_sigma >= 0.0)) err << "gate_sigma must be nonnegative; ";
    std::string msg = err.str();
    if (!msg.empty()) {
        msg.resize(msg.size() - 2);
        throw ValidationError("invalid learner config: " + msg);
    }
}

Boundary spi_update(const ValueGridEstimate& est, const Boundary& g, double gate_sigma) {
    const Grid& grid = est.grid;
    check_grid_for(grid, g);
    const std::size_t nx = grid.nx();
    const std::vector<double>& gk = g.y_values();
    const std::vector<double>& ys = grid.y_nodes;

    std::vector<double> next = gk;
    for (std::size_t i = 1; i < nx; ++i) {
        const auto it = std::upper_bound(ys.begin(), ys.end(), gk[i] * (1.0 + 1e-12));
        if (it == ys.begin()) continue;
        const auto top = static_cast<std::size_t>(it - ys.begin()) - 1;
        if (top < 1) continue;

        double above = mixed_at(est, i, top);
        if (above >= -gate_sigma * est.mixed_stderr(i, top)) continue;

        double target = ys[1];
        for (std::size_t j = top; j-- > 1;) {
            const double d = mixed_at(est, i, j);
            if (d >= 0.0) {
                target = ys[j] + (ys[j + 1] - ys[j]) * d / (d - above);
                break;
            }
            above = d;
        }
        next[i] = std::min(target, gk[i]);
    }

    next = isotonic_nondecreasing(next);
    const double floor = gk.front();
    for (double& v : next) v = std::clamp(v, floor, 1.0);
    next.front() = floor;
    return Boundary(g.x_nodes(), std::move(next));
}

IterationReport spi_run(const LearnConfig& cfg, const Boundary& g0, const ValueSource& source,
                        const std::vector<double>& reference) {
    validate(cfg);
    IterationReport rep;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto record = [&](const Boundary& g) {
        const BoundaryError e = distance_to(g, reference);
        rep.boundaries.push_back(g);
        rep.sup_err.push_back(e.sup);
        rep.l1_err.push_back(e.l1);
        rep.min_value_improvement.push_back(nan);
    };
    record(g0);
    for (int k = 0; k < cfg.outer_iters; ++k) {
        const Boundary& cur = rep.boundaries.back();
        const ValueGridEstimate est = source(cur, k);
        Boundary next = spi_update(est, cur, cfg.gate_sigma);
        const bool same = next.y_values() == cur.y_values();
        record(next);
        rep.converged = same;
    }
    return rep;
}

ValueSource monte_carlo_source(const ModelParams& env, const LearnConfig& cfg) {
    validate(cfg);
    SimConfig sim = cfg.sim;
    sim.n_paths = cfg.n_paths_per_node;
    const Grid grid = cfg.grid;
    const bool crn = cfg.crn;
    return [env, sim, grid, crn](const Boundary& g, int k) {
        return estimate_value_grid(env, sim, grid, g, crn, static_cast<std::uint32_t>(k));
    };
}

ValueSource oracle_source(const ModelParams& params, const Grid& grid) {
    return [params, grid](const Boundary& g, int) { return exact_value_grid(params, grid, g); };
}

}  // namespace stopflow
