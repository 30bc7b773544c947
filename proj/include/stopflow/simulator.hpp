#pragma once

#include <algorithm>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stopflow/core_model.hpp"
#include "stopflow/parallel.hpp"
#include "stopflow/rng.hpp"

namespace stopflow {

struct SimConfig {
    double dt = 1e-3;
    double horizon = 20.0;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 42;
    bool antithetic = false;
    double reward_tol = 1e-2;  ///< admissible truncation error per unit initial mass
};

/// Rejects dt outside (0, 1e-2], a nonpositive horizon, zero paths, and an
/// odd path count with antithetic pairing.
void validate(const SimConfig& cfg);

/// Upper bound on the reward integrand's contribution after `horizon`,
/// started from x0 with unit mass:
/// P x0^theta exp(-horizon/P) + (kappa + lambda/(rho e)) exp(-rho horizon).
double tail_bound(const ModelParams& params, double x0, double horizon);

/// Exact log-normal transition x exp((mu - sigma^2/2) dt + sigma sqrt(dt) z).
double step_gbm(const ModelParams& params, double x, double dt, double z);

struct Trajectory {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> xi;  ///< y0 - y
    double reward = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
};

/// Index of the first entry with xi > u, or nullopt if there is none.
std::optional<std::size_t> sample_randomized_stop(const std::vector<double>& xi, double u);

/// Discounted cumulative residual entropy -sum e^{-rho t_i} w (1 - xi_i) log(1 - xi_i)
/// with the exact panel weight w = (1 - e^{-rho dt})/rho.
double cre(const std::vector<double>& xi, double dt, double rho);

/// Never-stop boundary g = 1.
struct NeverStop {
    double operator()(double) const noexcept { return 1.0; }
};

/// Pure threshold rule: keep everything above `level`, release it all at or
/// below.
struct HittingRule {
    double level;
    double operator()(double x) const noexcept { return x > level ? 1.0 : 0.0; }
};

/// Linear ramp from 0 at `lo` to 1 at `hi`; the reflection policy it induces
/// is a smoothed threshold rule.
struct RampRule {
    double lo;
    double hi;
    double operator()(double x) const noexcept {
        if (x <= lo) return 0.0;
        if (x >= hi) return 1.0;
        return (x - lo) / (hi - lo);
    }
};

/**
 * Monte-Carlo environment: geometric Brownian motion driven by reflection
 * policies Y_t = min(y0, min_{s<=t} g(X_s)).
 *
 * Path p draws its normals from PhiloxStream(seed, p) (pair p/2 when
 * antithetic, with the odd member negated), so estimates do not depend on
 * the number of worker threads.
 */
class Simulator {
public:
    Simulator(const ModelParams& params, SimConfig cfg);

    const ModelParams& params() const noexcept { return params_; }
    const SimConfig& config() const noexcept { return cfg_; }
    std::size_t n_steps() const noexcept { return n_steps_; }

    template <class G>
    Trajectory simulate_policy(double x0, double y0, const G& g, std::uint64_t path) const {
        check_start(x0, y0);
        Trajectory tr;
        tr.times.reserve(n_steps_ + 1);
        tr.x.reserve(n_steps_ + 1);
        tr.y.reserve(n_steps_ + 1);
        tr.xi.reserve(n_steps_ + 1);
        run_path(x0, &y0, 1, g, path, &tr.reward, &tr);
        return tr;
    }

    /// Discounted reward of every path for every starting mass:
    /// result[p * y0s.size() + j].
    template <class G>
    std::vector<double> path_rewards(double x0, const std::vector<double>& y0s, const G& g) const {
        check_batch(x0, y0s);
        const std::size_t ny = y0s.size();
        std::vector<double> out(cfg_.n_paths * ny, 0.0);
        parallel_for(cfg_.n_paths, [&](std::size_t p) {
            run_path(x0, y0s.data(), ny, g, p, out.data() + p * ny, nullptr);
        });
        return out;
    }

    template <class G>
    std::vector<Estimate> estimate_values(double x0, const std::vector<double>& y0s,
                                          const G& g) const {
        return summarize(path_rewards(x0, y0s, g), y0s.size());
    }

    template <class G>
    Estimate estimate_value(double x0, double y0, const G& g) const {
        return estimate_values(x0, std::vector<double>{y0}, g).front();
    }

    /// Mean and standard error per column of a path-major reward matrix,
    /// honouring antithetic pairing.
    std::vector<Estimate> summarize(const std::vector<double>& rewards, std::size_t ny) const;

    static constexpr std::size_t kMaxBatch = 16;

private:
    void check_start(double x0, double y0) const;
    void check_batch(double x0, const std::vector<double>& y0s) const;

    template <class G>
    void run_path(double x0, const double* y0s, std::size_t ny, const G& g, std::uint64_t path,
                  double* rewards, Trajectory* trace) const;

    ModelParams params_;
    SimConfig cfg_;
    std::size_t n_steps_;
    double drift_;
    double vol_;
    double weight_;  // (1 - e^{-rho dt}) / rho
    double decay_;   // e^{-rho dt}
};

template <class G>
void Simulator::run_path(double x0, const double* y0s, std::size_t ny, const G& g,
                         std::uint64_t path, double* rewards, Trajectory* trace) const {
    const bool anti = cfg_.antithetic;
    PhiloxStream eng(cfg_.seed, anti ? path / 2 : path);
    const double sign = (anti && (path % 2 == 1)) ? -1.0 : 1.0;
    boost::random::normal_distribution<double> normal;

    double ys[kMaxBatch];
    double ylogy[kMaxBatch];
    const ModelParams& p = params_;
    double running_min = g(x0);
    std::size_t alive = 0;
    for (std::size_t j = 0; j < ny; ++j) {
        rewards[j] = 0.0;
        ys[j] = std::min(y0s[j], running_min);
        ylogy[j] = ys[j] > 0.0 ? ys[j] * std::log(ys[j]) : 0.0;
        if (ys[j] > 0.0) ++alive;
    }

    auto record = [&](std::size_t i, double x) {
        if (!trace) return;
        trace->times.push_back(static_cast<double>(i) * cfg_.dt);
        trace->x.push_back(x);
        trace->y.push_back(ys[0]);
        trace->xi.push_back(y0s[0] - ys[0]);
    };

    double x = x0;
    double log_x = x0 > 0.0 ? std::log(x0) : 0.0;
    double df = 1.0;
    for (std::size_t i = 0; i < n_steps_; ++i) {
        record(i, x);
        if (alive == 0 && !trace) return;
        const double profit = x > 0.0 ? std::exp(p.theta * log_x) : 0.0;
        const double base = df * weight_;
        for (std::size_t j = 0; j < ny; ++j) {
            rewards[j] += base * ((profit - p.rho * p.kappa) * ys[j] - p.lambda * ylogy[j]);
        }
        const double z = sign * normal(eng);
        if (x > 0.0) {
            log_x += drift_ + vol_ * z;
            x = std::exp(log_x);
        }
        const double gx = g(x);
        if (gx < running_min) {
            running_min = gx;
            for (std::size_t j = 0; j < ny; ++j) {
                if (running_min < ys[j]) {
                    if (running_min <= 0.0) --alive;
                    ys[j] = running_min;
                    ylogy[j] = ys[j] > 0.0 ? ys[j] * std::log(ys[j]) : 0.0;
                }
            }
        }
        df *= decay_;
    }
    record(n_steps_, x);
}

/**
 * Unit-start paths E_t = X_t / x0 shared by every starting point.
 *
 * Under a nondecreasing boundary the reflected mass is
 * min(y0, g(x0 * m_t)) with m_t the running minimum of E, so each path is
 * stored as segments of constant running minimum carrying the discounted
 * panel weight and the discounted weighted sum of E^theta. Rewards for any
 * (x0, y0) then cost one pass over the segments instead of a resimulation.
 * Path p uses the same normals as Simulator path p on the same lane.
 */
class PathBundle {
public:
    struct Segment {
        double running_min;
        double weight;         ///< sum of e^{-rho t_i} w over the segment's panels
        double profit_weight;  ///< sum of e^{-rho t_i} w E_i^theta
    };

    PathBundle(const ModelParams& params, const SimConfig& cfg, std::uint32_t lane = 0);

    std::size_t n_paths() const noexcept { return offsets_.size() - 1; }
    const SimConfig& config() const noexcept { return cfg_; }

    /// Rewards of path p from x0 for every starting mass in y0s (any count).
    template <class G>
    void rewards(std::size_t p, double x0, const std::vector<double>& y0s, const G& g,
                 double* out) const;

private:
    ModelParams params_;
    SimConfig cfg_;
    std::vector<Segment> segments_;
    std::vector<std::size_t> offsets_;
};

template <class G>
void PathBundle::rewards(std::size_t p, double x0, const std::vector<double>& y0s, const G& g,
                         double* out) const {
    const double scale = x0 > 0.0 ? std::pow(x0, params_.theta) : 0.0;
    const double rk = params_.rho * params_.kappa;
    const double lam = params_.lambda;
    for (std::size_t j = 0; j < y0s.size(); ++j) out[j] = 0.0;
    for (std::size_t s = offsets_[p]; s < offsets_[p + 1]; ++s) {
        const Segment& seg = segments_[s];
        const double cap = g(x0 * seg.running_min);
        bool any = false;
        for (std::size_t j = 0; j < y0s.size(); ++j) {
            const double y = std::min(y0s[j], cap);
            if (y <= 0.0) continue;
            any = true;
            out[j] += (scale * seg.profit_weight - rk * seg.weight) * y -
                      lam * seg.weight * y * std::log(y);
        }
        if (!any) break;
    }
}

// ---------------------------------------------------------------------------
// Statistical checks built on the simulator

struct ComparisonRow {
    std::string policy;
    double mean;
    double stderr_;
    double reference;  ///< unregularized value V(x0)
    bool within;       ///< mean <= reference + 3 stderr
};

/// Compares randomized threshold controls against the unregularized optimum
/// with the entropy term switched off.
std::vector<ComparisonRow> no_exploration_benefit_test(const ModelParams& params, double x0,
                                                       const SimConfig& cfg);

}  // namespace stopflow
