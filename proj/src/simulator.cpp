#include "stopflow/simulator.hpp"

#include <cmath>
#include <sstream>

#include "stopflow/analytic.hpp"
#include "stopflow/errors.hpp"

namespace stopflow {

void validate(const SimConfig& cfg) {
    std::ostringstream err;
    if (!(cfg.dt > 0.0 && cfg.dt <= 1e-2)) err << "dt must lie in (0, 1e-2]; ";
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) err << "horizon must be positive; ";
    if (!(cfg.horizon >= cfg.dt)) err << "horizon must be at least dt; ";
    if (cfg.n_paths == 0) err << "n_paths must be positive; ";
    if (cfg.antithetic && cfg.n_paths % 2 != 0) {
        err << "antithetic sampling needs an even n_paths; ";
    }
    if (!(cfg.reward_tol > 0.0)) err << "reward_tol must be positive; ";
    std::string msg = err.str();
    if (!msg.empty()) {
        msg.resize(msg.size() - 2);
        throw ValidationError("invalid simulation config: " + msg);
    }
}

double tail_bound(const ModelParams& params, double x0, double horizon) {
    const double P = resolvent_constant(params);
    const double growth = x0 > 0.0 ? P * std::pow(x0, params.theta) * std::exp(-horizon / P) : 0.0;
    const double fixed =
        (params.kappa + params.lambda / (params.rho * std::exp(1.0))) * std::exp(-params.rho * horizon);
    return growth + fixed;
}

double step_gbm(const ModelParams& params, double x, double dt, double z) {
    if (!(x > 0.0)) throw ValidationError("step_gbm: x must be positive");
    const double s = params.sigma;
    return x * std::exp((params.mu - 0.5 * s * s) * dt + s * std::sqrt(dt) * z);
}

std::optional<std::size_t> sample_randomized_stop(const std::vector<double>& xi, double u) {
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (xi[i] > u) return i;
    }
    return std::nullopt;
}

double cre(const std::vector<double>& xi, double dt, double rho) {
    if (!(dt > 0.0) || !(rho > 0.0)) throw ValidationError("cre: dt and rho must be positive");
    const double w = -std::expm1(-rho * dt) / rho;
    const double decay = std::exp(-rho * dt);
    double df = 1.0;
    double total = 0.0;
    for (double v : xi) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("cre: xi must lie in [0,1]");
        const double r = 1.0 - v;
        if (r > 0.0 && r < 1.0) total -= df * w * r * std::log(r);
        df *= decay;
    }
    return total;
}

Simulator::Simulator(const ModelParams& params, SimConfig cfg)
    : params_(validate(params)), cfg_(cfg) {
    validate(cfg_);
    n_steps_ = static_cast<std::size_t>(std::llround(cfg_.horizon / cfg_.dt));
    const double s = params_.sigma;
    drift_ = (params_.mu - 0.5 * s * s) * cfg_.dt;
    vol_ = s * std::sqrt(cfg_.dt);
    weight_ = -std::expm1(-params_.rho * cfg_.dt) / params_.rho;
    decay_ = std::exp(-params_.rho * cfg_.dt);
}

void Simulator::check_start(double x0, double y0) const {
    if (!(x0 >= 0.0) || !std::isfinite(x0)) throw ValidationError("x0 must be nonnegative");
    if (!(y0 >= 0.0 && y0 <= 1.0)) throw ValidationError("y0 must lie in [0,1]");
    const double tail = tail_bound(params_, x0, cfg_.horizon);
    if (!(tail < cfg_.reward_tol)) {
        std::ostringstream msg;
        msg << "horizon " << cfg_.horizon << " too short for x0 = " << x0 << ": tail bound "
            << tail << " exceeds reward_tol " << cfg_.reward_tol;
        throw ValidationError(msg.str());
    }
}

void Simulator::check_batch(double x0, const std::vector<double>& y0s) const {
    if (y0s.empty()) throw ValidationError("at least one starting mass is required");
    if (y0s.size() > kMaxBatch) {
        throw ValidationError("at most " + std::to_string(kMaxBatch) +
                              " starting masses per batch");
    }
    for (double y0 : y0s) check_start(x0, y0);
}

std::vector<Estimate> Simulator::summarize(const std::vector<double>& rewards,
                                           std::size_t ny) const {
    if (ny == 0 || rewards.size() % ny != 0) {
        throw ValidationError("summarize: reward matrix shape mismatch");
    }
    const std::size_t n = rewards.size() / ny;
    const std::size_t group = cfg_.antithetic ? 2 : 1;
    if (n == 0 || n % group != 0) throw ValidationError("summarize: bad path count");
    const std::size_t m = n / group;

    std::vector<Estimate> out(ny);
    for (std::size_t j = 0; j < ny; ++j) {
        double sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            double v = 0.0;
            for (std::size_t r = 0; r < group; ++r) v += rewards[(k * group + r) * ny + j];
            sum += v / static_cast<double>(group);
        }
        const double mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            double v = 0.0;
            for (std::size_t r = 0; r < group; ++r) v += rewards[(k * group + r) * ny + j];
            const double d = v / static_cast<double>(group) - mean;
            ss += d * d;
        }
        out[j].mean = mean;
        out[j].stderr_ =
            m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
        out[j].n_paths = n;
    }
    return out;
}

PathBundle::PathBundle(const ModelParams& params, const SimConfig& cfg, std::uint32_t lane)
    : params_(validate(params)), cfg_(cfg) {
    validate(cfg_);
    const auto n_steps = static_cast<std::size_t>(std::llround(cfg_.horizon / cfg_.dt));
    const double s = params_.sigma;
    const double drift = (params_.mu - 0.5 * s * s) * cfg_.dt;
    const double vol = s * std::sqrt(cfg_.dt);
    const double w = -std::expm1(-params_.rho * cfg_.dt) / params_.rho;
    const double decay = std::exp(-params_.rho * cfg_.dt);
    const double theta = params_.theta;

    std::vector<std::vector<Segment>> per_path(cfg_.n_paths);
    parallel_for(cfg_.n_paths, [&](std::size_t p) {
        const bool anti = cfg_.antithetic;
        PhiloxStream eng(cfg_.seed, anti ? p / 2 : p, lane);
        const double sign = (anti && (p % 2 == 1)) ? -1.0 : 1.0;
        boost::random::normal_distribution<double> normal;
        std::vector<Segment>& segs = per_path[p];
        double log_e = 0.0;
        double log_min = 0.0;
        double df = 1.0;
        Segment cur{1.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n_steps; ++i) {
            cur.weight += df * w;
            cur.profit_weight += df * w * std::exp(theta * log_e);
            log_e += drift + vol * sign * normal(eng);
            if (log_e < log_min) {
                log_min = log_e;
                segs.push_back(cur);
                cur = Segment{std::exp(log_e), 0.0, 0.0};
            }
            df *= decay;
        }
        segs.push_back(cur);
    });

    offsets_.assign(1, 0);
    for (const auto& segs : per_path) {
        segments_.insert(segments_.end(), segs.begin(), segs.end());
        offsets_.push_back(segments_.size());
    }
}

std::vector<ComparisonRow> no_exploration_benefit_test(const ModelParams& params, double x0,
                                                       const SimConfig& cfg) {
    ModelParams p0 = params;
    p0.lambda = 0.0;
    const UnregularizedSolution exact(p0);
    const Simulator sim(p0, cfg);
    const double b = exact.b_star();
    const double reference = exact.value(x0);

    std::vector<ComparisonRow> rows;
    auto add = [&](std::string name, const Estimate& e) {
        rows.push_back({std::move(name), e.mean, e.stderr_, reference,
                        e.mean <= reference + 3.0 * e.stderr_});
    };
    add("hit_b*", sim.estimate_value(x0, 1.0, HittingRule{b}));
    add("hit_1.5b*", sim.estimate_value(x0, 1.0, HittingRule{1.5 * b}));
    add("never", sim.estimate_value(x0, 1.0, NeverStop{}));
    add("ramp_0.5b*_b*", sim.estimate_value(x0, 1.0, RampRule{0.5 * b, b}));
    add("ramp_0.8b*_1.2b*", sim.estimate_value(x0, 1.0, RampRule{0.8 * b, 1.2 * b}));
    add("ramp_b*_1.5b*", sim.estimate_value(x0, 1.0, RampRule{b, 1.5 * b}));
    return rows;
}

}  // namespace stopflow
