#include "stopflow/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "stopflow/errors.hpp"
#include "stopflow/numerics.hpp"

namespace stopflow {

namespace {

constexpr double kQuadAbsTol = 1e-10;
constexpr double kQuadRelTol = 1e-12;

double threshold_constant(const RealOptionModel& m) {
    const double a = m.alpha_minus();
    return -a / (m.P() * (m.params().theta - a));
}

ModelParams require_temperature(const ModelParams& p) {
    if (!(p.lambda > 0.0)) {
        throw ValidationError("closed-form regularized solution needs lambda > 0; "
                              "use the unregularized solution for lambda = 0");
    }
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// ClosedFormBoundary

ClosedFormBoundary::ClosedFormBoundary(const ModelParams& params)
    : model_(require_temperature(params)) {
    const ModelParams& p = model_.params();
    log_y_lambda_ = -1.0 - p.kappa * p.rho / p.lambda;
    y_lambda_ = std::exp(log_y_lambda_);
    c_b_ = threshold_constant(model_);
    g_scale_ = (p.rho / p.lambda) / c_b_;
    b_star_ = std::pow(c_b_ * p.kappa, 1.0 / p.theta);
    x_hat_ = numerics::bracket_and_solve([this](double x) { return log_g_uncapped(x); }, 0.0,
                                         std::max(1.0, b_star_), 1e-15);
}

double ClosedFormBoundary::boundary_lhs(double x) const {
    return model_.x_resolvent_prime(x) / (-model_.alpha_minus()) + model_.resolvent(x);
}

double ClosedFormBoundary::log_g_uncapped(double x) const {
    if (!(x >= 0.0)) throw ValidationError("g_lambda: x must be nonnegative");
    return g_scale_ * std::pow(x, model_.params().theta) + log_y_lambda_;
}

double ClosedFormBoundary::g_lambda(double x) const {
    if (x >= x_hat_) return 1.0;
    return std::min(std::exp(log_g_uncapped(x)), 1.0);
}

double ClosedFormBoundary::g_lambda_prime(double x) const {
    if (x >= x_hat_) return 0.0;
    const ModelParams& p = model_.params();
    const double a = model_.alpha_minus();
    const double dlhs = model_.resolvent_prime(x) * (p.theta - a) / (-a);
    return g_lambda(x) * (p.rho / p.lambda) * dlhs;
}

double ClosedFormBoundary::b_lambda_log(double log_y) const {
    if (!(log_y <= 0.0)) throw ValidationError("b_lambda: y must lie in (0,1]");
    if (log_y <= log_y_lambda_) return 0.0;
    const ModelParams& p = model_.params();
    const double n = p.kappa + (p.lambda / p.rho) * (1.0 + log_y);
    if (n <= 0.0) return 0.0;
    return std::pow(c_b_ * n, 1.0 / p.theta);
}

double ClosedFormBoundary::b_lambda(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw ValidationError("b_lambda: y must lie in (0,1]");
    return b_lambda_log(std::log(y));
}

// ---------------------------------------------------------------------------
// ClosedFormSolution

ClosedFormSolution::ClosedFormSolution(const ModelParams& params, std::size_t n_panels)
    : ClosedFormBoundary(params), n_panels_(n_panels) {
    if (n_panels_ == 0) throw ValidationError("A2 table needs at least one panel");
    panel_width_ = -log_y_lambda_ / static_cast<double>(n_panels_);
    prefix_.assign(n_panels_ + 1, 0.0);
    auto f = [this](double s) { return a2_integrand_log(s); };
    for (std::size_t k = 0; k < n_panels_; ++k) {
        const double s0 = log_y_lambda_ + static_cast<double>(k) * panel_width_;
        const double s1 = (k + 1 == n_panels_) ? 0.0 : s0 + panel_width_;
        prefix_[k + 1] = prefix_[k] + numerics::integrate(f, s0, s1, kQuadAbsTol, kQuadRelTol);
    }
}

double ClosedFormSolution::a2_integrand_log(double s) const {
    const double b = b_lambda_log(std::min(s, 0.0));
    if (b == 0.0) return 0.0;
    const ModelParams& p = model_.params();
    const double n = p.kappa + (p.lambda / p.rho) * (1.0 + s);
    return (n - model_.resolvent(b)) * std::pow(b, -model_.alpha_minus()) * std::exp(s);
}

double ClosedFormSolution::a2_prime(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw ValidationError("a2_prime: y must lie in (0,1]");
    const double s = std::log(y);
    if (s <= log_y_lambda_) return 0.0;
    return a2_integrand_log(s) / y;
}

double ClosedFormSolution::partial_a2(double log_y) const {
    const double offset = log_y - log_y_lambda_;
    if (offset <= 0.0) return 0.0;
    auto k = static_cast<std::size_t>(offset / panel_width_);
    if (k >= n_panels_) k = n_panels_ - 1;
    const double s0 = log_y_lambda_ + static_cast<double>(k) * panel_width_;
    if (log_y <= s0) return prefix_[k];
    return prefix_[k] + numerics::integrate([this](double s) { return a2_integrand_log(s); }, s0,
                                            log_y, kQuadAbsTol, kQuadRelTol);
}

double ClosedFormSolution::a2(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw ValidationError("a2: y must lie in (0,1]");
    const double s = std::log(y);
    // Rounding in exp/log may put y_lambda itself a hair below the table start.
    if (s < log_y_lambda_ - 1e-12 * std::max(1.0, -log_y_lambda_)) {
        std::ostringstream os;
        os << "a2: y = " << y << " lies below y_lambda = " << y_lambda_;
        throw ValidationError(os.str());
    }
    return partial_a2(s);
}

double ClosedFormSolution::exploration_value(double x, double y) const {
    const ModelParams& p = model_.params();
    double v = model_.resolvent(x) * y - p.kappa * y - (p.lambda / p.rho) * numerics::xlogx(y);
    if (y > y_lambda_) {
        const double a = a2(y);
        if (a != 0.0) v += a * std::pow(x, model_.alpha_minus());
    }
    return v;
}

double ClosedFormSolution::value(double x, double y) const {
    if (!(x >= 0.0)) throw ValidationError("value: x must be nonnegative");
    if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("value: y must lie in [0,1]");
    if (y == 0.0) return 0.0;
    const double gx = g_lambda(x);
    return exploration_value(x, std::min(y, gx));
}

ValueDerivatives ClosedFormSolution::derivatives(double x, double y) const {
    if (!(x > 0.0)) throw ValidationError("derivatives: x must be positive");
    if (!(y > 0.0 && y <= 1.0)) throw ValidationError("derivatives: y must lie in (0,1]");
    const ModelParams& p = model_.params();
    const double a = model_.alpha_minus();
    const double gx = g_lambda(x);
    const bool stopping = y > gx;
    const double yy = stopping ? gx : y;

    ValueDerivatives d;
    d.u = exploration_value(x, yy);
    d.ux = model_.resolvent_prime(x) * yy;
    d.uxx = model_.resolvent_second(x) * yy;
    d.uy = model_.resolvent(x) - p.kappa - (p.lambda / p.rho) * (1.0 + std::log(yy));
    if (yy > y_lambda_) {
        const double coef = a2(yy);
        const double xa = std::pow(x, a);
        d.ux += a * coef * xa / x;
        d.uxx += a * (a - 1.0) * coef * xa / (x * x);
        d.uy += a2_prime(yy) * xa;
    }
    if (stopping) d.uy = 0.0;
    return d;
}

HjbReport ClosedFormSolution::verify_hjb(const std::vector<double>& xs,
                                         const std::vector<double>& ys) const {
    const ModelParams& p = model_.params();
    HjbReport rep;
    rep.points.reserve(xs.size() * ys.size());
    double worst = -1.0;
    for (double x : xs) {
        if (!(x > 0.0)) throw ValidationError("verify_hjb: grid must avoid x = 0");
        const double gx = g_lambda(x);
        for (double y : ys) {
            const ValueDerivatives d = derivatives(x, y);
            const double res = model_.generator(x, d.ux, d.uxx) - p.rho * d.u +
                               (model_.profit(x) - p.rho * p.kappa) * y -
                               p.lambda * numerics::xlogx(y);
            HjbPoint pt{x, y, y <= gx, res, d.uy};
            double violation = 0.0;
            if (pt.exploration) {
                ++rep.n_exploration;
                rep.max_abs_pde_exploration = std::max(rep.max_abs_pde_exploration, std::abs(res));
                rep.max_neg_uy_exploration = std::max(rep.max_neg_uy_exploration, -d.uy);
                violation = std::max(std::abs(res), -d.uy);
            } else {
                ++rep.n_stopping;
                rep.max_abs_uy_stopping = std::max(rep.max_abs_uy_stopping, std::abs(d.uy));
                rep.max_pde_stopping = std::max(rep.max_pde_stopping, res);
                violation = std::max(std::abs(d.uy), res);
            }
            if (violation > worst) {
                worst = violation;
                rep.worst_index = rep.points.size();
            }
            rep.points.push_back(pt);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Unregularized problem

double unregularized_threshold(const ModelParams& params) {
    const RealOptionModel m(params);
    return std::pow(threshold_constant(m) * m.params().kappa, 1.0 / m.params().theta);
}

UnregularizedSolution::UnregularizedSolution(const ModelParams& params)
    : model_(params), b_star_(unregularized_threshold(params)) {
    // Value matching V(b*) = 0.
    B_ = (model_.params().kappa - model_.resolvent(b_star_)) *
         std::pow(b_star_, -model_.alpha_minus());
}

double UnregularizedSolution::value(double x) const {
    if (!(x >= 0.0)) throw ValidationError("value: x must be nonnegative");
    if (x <= b_star_) return 0.0;
    return B_ * std::pow(x, model_.alpha_minus()) + model_.resolvent(x) - model_.params().kappa;
}

double UnregularizedSolution::value_prime(double x) const {
    if (!(x >= 0.0)) throw ValidationError("value_prime: x must be nonnegative");
    if (x < b_star_) return 0.0;
    const double a = model_.alpha_minus();
    return a * B_ * std::pow(x, a - 1.0) + model_.resolvent_prime(x);
}

// ---------------------------------------------------------------------------
// Vanishing entropy

VanishTable vanishing_sweep(const ModelParams& params, std::vector<double> lambdas,
                            const std::vector<double>& y_points) {
    for (double l : lambdas) {
        if (!(l > 0.0 && l <= 1.0)) throw ValidationError("vanishing_sweep: lambda must lie in (0,1]");
    }
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    const double b_star = unregularized_threshold(params);

    VanishTable table;
    std::vector<std::vector<double>> gaps(y_points.size());
    for (double l : lambdas) {
        ModelParams p = params;
        p.lambda = l;
        const ClosedFormBoundary cf(p);
        for (std::size_t j = 0; j < y_points.size(); ++j) {
            const double b = cf.b_lambda(y_points[j]);
            table.rows.push_back({l, y_points[j], b, b - b_star});
            gaps[j].push_back(b - b_star);
        }
    }

    table.monotone_ok.assign(y_points.size(), true);
    for (std::size_t j = 0; j < y_points.size(); ++j) {
        const double shift = 1.0 + std::log(y_points[j]);
        const auto& gj = gaps[j];
        bool ok = true;
        if (std::abs(shift) < 1e-12) {
            for (double g : gj) ok = ok && std::abs(g) <= 1e-10 * std::max(1.0, b_star);
        } else if (shift > 0.0) {
            // Above e^{-1}: gap positive and shrinking as lambda decreases.
            for (std::size_t k = 0; k < gj.size(); ++k) {
                ok = ok && gj[k] > 0.0;
                if (k > 0) ok = ok && gj[k] < gj[k - 1];
            }
        } else {
            for (std::size_t k = 0; k < gj.size(); ++k) {
                ok = ok && gj[k] < 0.0;
                if (k > 0) ok = ok && gj[k] >= gj[k - 1];
            }
        }
        table.monotone_ok[j] = ok;
    }
    return table;
}

}  // namespace stopflow
