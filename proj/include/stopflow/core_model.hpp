#pragma once

#include <cstddef>
#include <vector>

namespace stopflow {

/**
 * Constants of the real-option stopping problem.
 *
 * The state follows dX = mu X dt + sigma X dW, the running profit is
 * pi(x) = x^theta, stopping pays kappa, and lambda weights the cumulative
 * residual entropy of the randomized stopping time.
 */
struct ModelParams {
    double mu = 0.2;      ///< drift, 1/time
    double sigma = 0.2;   ///< volatility, 1/sqrt(time)
    double rho = 0.5;     ///< discount rate, 1/time
    double kappa = 5.0;   ///< stopping reward level
    double lambda = 1.0;  ///< temperature (entropy weight)
    double theta = 0.5;   ///< profit exponent in (0,1)
};

/// Returns `params` unchanged when admissible; throws ValidationError naming
/// every violated inequality otherwise.
ModelParams validate(const ModelParams& params);

/// Roots of (1/2) sigma^2 a(a-1) + mu a - rho = 0.
struct CharRoots {
    double alpha_minus;  ///< < 0
    double alpha_plus;   ///< > 1
};

CharRoots char_roots(const ModelParams& params);

/// P = 1 / (rho + sigma^2 theta (1-theta)/2 - theta mu), so that the
/// resolvent of x^theta is P x^theta.
double resolvent_constant(const ModelParams& params);

/// Residual of the characteristic quadratic at `alpha`.
double char_residual(const ModelParams& params, double alpha);

/**
 * Validated parameters bundled with the derived constants every other
 * module consumes. Immutable; all members are pure.
 */
class RealOptionModel {
public:
    explicit RealOptionModel(const ModelParams& params);

    const ModelParams& params() const noexcept { return params_; }
    double alpha_minus() const noexcept { return roots_.alpha_minus; }
    double alpha_plus() const noexcept { return roots_.alpha_plus; }
    double P() const noexcept { return P_; }

    /// pi(x) = x^theta.
    double profit(double x) const;
    /// H(x) = E int e^{-rho t} pi(X_t^x) dt = P x^theta.
    double resolvent(double x) const;
    /// H'(x) = theta P x^{theta-1}; +infinity at x = 0.
    double resolvent_prime(double x) const;
    /// H''(x) = theta (theta-1) P x^{theta-2}; -infinity at x = 0.
    double resolvent_second(double x) const;
    /// x H'(x) = theta P x^theta, finite (zero) at x = 0.
    double x_resolvent_prime(double x) const;

    /// (mu x d/dx + sigma^2 x^2/2 d^2/dx^2) applied to a function with
    /// first and second derivatives `ux`, `uxx` at `x`.
    double generator(double x, double ux, double uxx) const;

private:
    ModelParams params_;
    CharRoots roots_;
    double P_;
};

/// Uniform computational grid: x in {0, dx, ..., x_max}, y in {dy, ..., 1}.
struct Grid {
    double x_max = 5.0;
    double delta_x = 0.02;
    double delta_y = 0.02;
    std::vector<double> x_nodes;
    std::vector<double> y_nodes;

    static Grid uniform(double x_max, double delta_x, double delta_y);

    std::size_t nx() const noexcept { return x_nodes.size(); }
    std::size_t ny() const noexcept { return y_nodes.size(); }
};

}  // namespace stopflow
