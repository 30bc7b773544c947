#include "stopflow/policy_value.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stopflow/errors.hpp"
#include "stopflow/numerics.hpp"

namespace stopflow {

namespace {
constexpr double kQuadAbsTol = 1e-10;
constexpr double kQuadRelTol = 1e-12;

ModelParams require_temperature(const ModelParams& p) {
    if (!(p.lambda > 0.0)) throw ValidationError("policy valuation needs lambda > 0");
    return p;
}
}  // namespace

PolicyValue::PolicyValue(const ModelParams& params, Boundary g)
    : model_(require_temperature(params)), g_(std::move(g)) {
    const auto& xs = g_.x_nodes();
    const auto& ys = g_.y_values();
    knot_y_.push_back(ys.front());
    knot_x_.push_back(xs.front());
    for (std::size_t i = 1; i < ys.size(); ++i) {
        if (ys[i] > knot_y_.back()) {
            knot_y_.push_back(ys[i]);
            knot_x_.push_back(xs[i]);
        }
    }
    prefix_.assign(knot_y_.size(), 0.0);
    for (std::size_t k = 1; k < knot_y_.size(); ++k) {
        prefix_[k] = prefix_[k - 1] +
                     numerics::integrate([this, k](double u) { return integrand(u, k); },
                                         knot_y_[k - 1], knot_y_[k], kQuadAbsTol, kQuadRelTol);
    }
}

double PolicyValue::integrand(double u, std::size_t k) const {
    const double t = (u - knot_y_[k - 1]) / (knot_y_[k] - knot_y_[k - 1]);
    const double z = knot_x_[k - 1] + t * (knot_x_[k] - knot_x_[k - 1]);
    if (z <= 0.0) return 0.0;
    const ModelParams& p = model_.params();
    const double n = p.kappa + (p.lambda / p.rho) * (1.0 + std::log(u));
    return (n - model_.resolvent(z)) * std::pow(z, -model_.alpha_minus());
}

std::size_t PolicyValue::panel_of(double y) const {
    if (!(y <= knot_y_.back())) {
        std::ostringstream os;
        os << "y = " << y << " above the boundary range (max " << knot_y_.back() << ")";
        throw ValidationError(os.str());
    }
    auto k = static_cast<std::size_t>(std::lower_bound(knot_y_.begin(), knot_y_.end(), y) -
                                      knot_y_.begin());
    return std::max<std::size_t>(k, 1);
}

double PolicyValue::a_prime(double y) const {
    if (!(y > 0.0)) throw ValidationError("a_prime: y must be positive");
    if (y <= knot_y_.front() || knot_y_.size() < 2) {
        if (y > knot_y_.back()) panel_of(y);
        return 0.0;
    }
    return integrand(y, panel_of(y));
}

double PolicyValue::a_coefficient(double y) const {
    if (!(y > 0.0)) throw ValidationError("a_coefficient: y must be positive");
    if (y <= knot_y_.front() || knot_y_.size() < 2) {
        if (y > knot_y_.back()) panel_of(y);
        return 0.0;
    }
    const std::size_t k = panel_of(y);
    if (y == knot_y_[k]) return prefix_[k];
    return prefix_[k - 1] +
           numerics::integrate([this, k](double u) { return integrand(u, k); }, knot_y_[k - 1], y,
                               kQuadAbsTol, kQuadRelTol);
}

double PolicyValue::exploration_value(double x, double y) const {
    const ModelParams& p = model_.params();
    double v = model_.resolvent(x) * y - p.kappa * y - (p.lambda / p.rho) * numerics::xlogx(y);
    const double a = a_coefficient(y);
    if (a != 0.0) v += a * std::pow(x, model_.alpha_minus());
    return v;
}

double PolicyValue::value(double x, double y) const {
    if (!(x >= 0.0)) throw ValidationError("value: x must be nonnegative");
    if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("value: y must lie in [0,1]");
    if (y == 0.0) return 0.0;
    return exploration_value(x, std::min(y, g_(x)));
}

ValueDerivatives PolicyValue::derivatives(double x, double y) const {
    if (!(x > 0.0)) throw ValidationError("derivatives: x must be positive");
    if (!(y > 0.0 && y <= 1.0)) throw ValidationError("derivatives: y must lie in (0,1]");
    const ModelParams& p = model_.params();
    const double a = model_.alpha_minus();
    const double gx = g_(x);
    const bool stopping = y > gx;
    const double yy = stopping ? gx : y;
    const double coef = a_coefficient(yy);
    const double xa = std::pow(x, a);

    ValueDerivatives d;
    d.u = exploration_value(x, yy);
    d.ux = model_.resolvent_prime(x) * yy + a * coef * xa / x;
    d.uxx = model_.resolvent_second(x) * yy + a * (a - 1.0) * coef * xa / (x * x);
    d.uy = stopping ? 0.0
                    : a_prime(yy) * xa + model_.resolvent(x) - p.kappa -
                          (p.lambda / p.rho) * (1.0 + std::log(yy));
    return d;
}

double PolicyValue::mixed_partial(double x, double y) const {
    if (!(x > 0.0)) throw ValidationError("mixed_partial: x must be positive");
    const double gx = g_(x);
    if (!(y > 0.0) || y > gx * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "mixed_partial: y = " << y << " outside the exploration region (0, " << gx
           << "] at x = " << x;
        throw ValidationError(os.str());
    }
    const double a = model_.alpha_minus();
    return a * std::pow(x, a - 1.0) * a_prime(std::min(y, gx)) + model_.resolvent_prime(x);
}

}  // namespace stopflow
