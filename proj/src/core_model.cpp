#include "stopflow/core_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "stopflow/errors.hpp"

namespace stopflow {

ModelParams validate(const ModelParams& p) {
    std::vector<std::string> failures;
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(p.mu) || !finite(p.sigma) || !finite(p.rho) || !finite(p.kappa) ||
        !finite(p.lambda) || !finite(p.theta)) {
        throw ValidationError("model parameters must be finite");
    }
    if (!(p.sigma > 0.0)) failures.emplace_back("sigma <= 0");
    if (!(p.rho > 0.0)) failures.emplace_back("rho <= 0");
    if (!(p.kappa > 0.0)) failures.emplace_back("kappa <= 0");
    if (!(p.lambda >= 0.0)) failures.emplace_back("lambda < 0");
    if (!(p.theta > 0.0 && p.theta < 1.0)) failures.emplace_back("theta outside (0,1)");
    // Finiteness of E int e^{-rho t} X_t^theta dt.
    const double growth = p.theta * (p.mu + 0.5 * p.sigma * p.sigma * (p.theta - 1.0));
    if (!(p.rho > growth)) {
        std::ostringstream os;
        os << "resolvent divergence: rho <= theta*(mu + sigma^2 (theta-1)/2) = " << growth;
        failures.push_back(os.str());
    }
    if (!(p.rho > p.mu)) failures.emplace_back("rho <= mu");

    if (!failures.empty()) {
        std::string msg = "invalid model parameters: ";
        for (std::size_t i = 0; i < failures.size(); ++i) {
            if (i) msg += "; ";
            msg += failures[i];
        }
        throw ValidationError(msg);
    }
    return p;
}

CharRoots char_roots(const ModelParams& p) {
    // a alpha^2 + b alpha + c = 0
    const double a = 0.5 * p.sigma * p.sigma;
    const double b = p.mu - a;
    const double c = -p.rho;
    const double disc = b * b - 4.0 * a * c;
    // Large-magnitude root first, the other from the product c/a.
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b == 0.0 ? 1.0 : b));
    const double r1 = q / a;
    const double r2 = c / q;
    return r1 < r2 ? CharRoots{r1, r2} : CharRoots{r2, r1};
}

double char_residual(const ModelParams& p, double alpha) {
    return 0.5 * p.sigma * p.sigma * alpha * (alpha - 1.0) + p.mu * alpha - p.rho;
}

double resolvent_constant(const ModelParams& p) {
    return 1.0 /
           (p.rho + 0.5 * p.sigma * p.sigma * p.theta * (1.0 - p.theta) - p.theta * p.mu);
}

RealOptionModel::RealOptionModel(const ModelParams& params)
    : params_(validate(params)), roots_(char_roots(params_)), P_(resolvent_constant(params_)) {}

namespace {
void require_nonnegative(double x) {
    if (!(x >= 0.0)) throw ValidationError("state x must be nonnegative");
}
}  // namespace

double RealOptionModel::profit(double x) const {
    require_nonnegative(x);
    return std::pow(x, params_.theta);
}

double RealOptionModel::resolvent(double x) const {
    require_nonnegative(x);
    return P_ * std::pow(x, params_.theta);
}

double RealOptionModel::resolvent_prime(double x) const {
    require_nonnegative(x);
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    return params_.theta * P_ * std::pow(x, params_.theta - 1.0);
}

double RealOptionModel::resolvent_second(double x) const {
    require_nonnegative(x);
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    return params_.theta * (params_.theta - 1.0) * P_ * std::pow(x, params_.theta - 2.0);
}

double RealOptionModel::x_resolvent_prime(double x) const {
    require_nonnegative(x);
    return params_.theta * P_ * std::pow(x, params_.theta);
}

double RealOptionModel::generator(double x, double ux, double uxx) const {
    return params_.mu * x * ux + 0.5 * params_.sigma * params_.sigma * x * x * uxx;
}

Grid Grid::uniform(double x_max, double delta_x, double delta_y) {
    if (!(x_max > 0.0) || !(delta_x > 0.0) || !(delta_y > 0.0) || delta_y > 1.0) {
        throw ValidationError("grid requires x_max > 0, delta_x > 0 and delta_y in (0,1]");
    }
    Grid g;
    g.x_max = x_max;
    g.delta_x = delta_x;
    g.delta_y = delta_y;
    const auto n = static_cast<std::size_t>(std::llround(x_max / delta_x));
    if (n < 2) throw ValidationError("grid needs at least two x intervals");
    g.x_nodes.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g.x_nodes[i] = static_cast<double>(i) * delta_x;
    const auto m = static_cast<std::size_t>(std::floor(1.0 / delta_y + 1e-9));
    g.y_nodes.resize(m);
    for (std::size_t j = 0; j < m; ++j) g.y_nodes[j] = static_cast<double>(j + 1) * delta_y;
    if (std::abs(g.y_nodes.back() - 1.0) < 1e-9) g.y_nodes.back() = 1.0;
    return g;
}

}  // namespace stopflow
