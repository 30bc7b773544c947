#pragma once

#include <vector>

#include "stopflow/analytic.hpp"
#include "stopflow/boundary.hpp"
#include "stopflow/core_model.hpp"

namespace stopflow {

/**
 * Exact value of the reflection policy induced by an arbitrary admissible
 * boundary g:
 *
 *   u(x,y) = A(y) x^alpha_- + H(x) y - kappa y - (lambda/rho) y log y,  y <= g(x)
 *   u(x,y) = u(x, g(x)),                                                 y >  g(x)
 *
 * with A(y) = int_{g(0)}^{y} [kappa + (lambda/rho)(1 + log u) - H(z)] z^{-alpha_-} du,
 * z = g^{-1}(u). A is tabulated at the distinct boundary values and only the
 * last partial panel is integrated per call. A vanishes below g(0).
 */
class PolicyValue {
public:
    PolicyValue(const ModelParams& params, Boundary g);

    const RealOptionModel& model() const noexcept { return model_; }
    const Boundary& boundary() const noexcept { return g_; }

    /// dA/dy; zero at and below g(0).
    double a_prime(double y) const;
    /// A(y) for y in (0, g(last node)].
    double a_coefficient(double y) const;

    double value(double x, double y) const;
    ValueDerivatives derivatives(double x, double y) const;

    /// d^2 u / dx dy on the closed exploration region, x > 0:
    /// alpha_- x^{alpha_- - 1} A'(y) + H'(x).
    double mixed_partial(double x, double y) const;

private:
    double integrand(double u, std::size_t panel) const;
    std::size_t panel_of(double y) const;
    double exploration_value(double x, double y) const;

    RealOptionModel model_;
    Boundary g_;
    std::vector<double> knot_y_;  // strictly increasing boundary values
    std::vector<double> knot_x_;  // generalized inverse at each knot
    std::vector<double> prefix_;  // A at each knot
};

}  // namespace stopflow
