#pragma once

#include <cstddef>
#include <vector>

#include "stopflow/core_model.hpp"

namespace stopflow {

/**
 * Closed-form free boundary of the entropy-regularized problem.
 *
 * Cheap to build (no quadrature), so it is also what the vanishing-entropy
 * sweep instantiates per temperature.
 */
class ClosedFormBoundary {
public:
    /// Throws ValidationError when lambda == 0.
    explicit ClosedFormBoundary(const ModelParams& params);

    const RealOptionModel& model() const noexcept { return model_; }

    /// log of the minimal mass level, -1 - kappa rho / lambda. Finite even
    /// when the level itself underflows.
    double log_y_lambda() const noexcept { return log_y_lambda_; }
    double y_lambda() const noexcept { return y_lambda_; }
    /// Smallest x with g_lambda(x) = 1.
    double x_hat() const noexcept { return x_hat_; }
    /// Unregularized threshold solving x H'(x)/(-alpha_-) + H(x) = kappa.
    double b_star() const noexcept { return b_star_; }

    /// Exponent of g_lambda before capping at 1.
    double log_g_uncapped(double x) const;
    double g_lambda(double x) const;
    /// g_lambda'(x); zero beyond x_hat.
    double g_lambda_prime(double x) const;
    /// Inverse of g_lambda on [y_lambda, 1]; 0 below y_lambda.
    double b_lambda(double y) const;
    /// Same, taking log y (usable when y itself underflows).
    double b_lambda_log(double log_y) const;

    /// x H'(x)/(-alpha_-) + H(x), the left side of the boundary equation.
    double boundary_lhs(double x) const;

protected:
    RealOptionModel model_;
    double log_y_lambda_;
    double y_lambda_;
    double c_b_;       // -alpha_- / (P (theta - alpha_-))
    double g_scale_;   // (rho/lambda) P (theta - alpha_-) / (-alpha_-)
    double b_star_;
    double x_hat_;
};

struct ValueDerivatives {
    double u = 0.0;
    double ux = 0.0;
    double uxx = 0.0;
    double uy = 0.0;
};

struct HjbPoint {
    double x;
    double y;
    bool exploration;      ///< y <= g_lambda(x)
    double pde_residual;   ///< (L - rho) u + (pi - rho kappa) y - lambda y log y
    double uy;
};

struct HjbReport {
    std::vector<HjbPoint> points;
    double max_abs_pde_exploration = 0.0;  ///< |residual| on the exploration region
    double max_neg_uy_exploration = 0.0;   ///< max(-u_y, 0) on the exploration region
    double max_abs_uy_stopping = 0.0;      ///< |u_y| on the stopping region
    double max_pde_stopping = 0.0;         ///< max(residual, 0) on the stopping region
    std::size_t worst_index = 0;           ///< point with the largest violation
    std::size_t n_exploration = 0;
    std::size_t n_stopping = 0;

    bool passes(double tol) const {
        return max_abs_pde_exploration < tol && max_neg_uy_exploration <= tol &&
               max_abs_uy_stopping <= tol && max_pde_stopping <= tol;
    }
};

/**
 * Full closed-form solution: boundary plus the coefficient A2 and the
 * piecewise value function.
 *
 * A2 is tabulated once at construction as prefix sums of panel integrals in
 * s = log u; evaluation integrates only the final partial panel.
 */
class ClosedFormSolution : public ClosedFormBoundary {
public:
    explicit ClosedFormSolution(const ModelParams& params, std::size_t n_panels = 512);

    /// d A2 / dy, in the boundary-equation form; 0 at y = y_lambda.
    double a2_prime(double y) const;
    /// A2(y) = integral of a2_prime from y_lambda to y.
    double a2(double y) const;

    /// A2(y) x^alpha_- + H(x) y - kappa y - (lambda/rho) y log y.
    double exploration_value(double x, double y) const;

    double value(double x, double y) const;
    ValueDerivatives derivatives(double x, double y) const;

    /// Checks the variational inequality at every (x, y) in xs x ys (x > 0).
    HjbReport verify_hjb(const std::vector<double>& xs, const std::vector<double>& ys) const;

private:
    double a2_integrand_log(double s) const;  // a2_prime(e^s) e^s
    double partial_a2(double log_y) const;

    std::size_t n_panels_;
    double panel_width_;
    std::vector<double> prefix_;  // A2 at panel left edges, plus the total
};

/// The lambda = 0 problem: stop (payoff 0 relative to kappa) at the first
/// time X falls to b*; V(x) = B x^alpha_- + P x^theta - kappa above b*.
class UnregularizedSolution {
public:
    explicit UnregularizedSolution(const ModelParams& params);

    double b_star() const noexcept { return b_star_; }
    double coefficient() const noexcept { return B_; }
    double value(double x) const;
    double value_prime(double x) const;

private:
    RealOptionModel model_;
    double b_star_;
    double B_;
};

/// b* from the closed form, valid for any admissible params (lambda ignored).
double unregularized_threshold(const ModelParams& params);

struct VanishRow {
    double lambda;
    double y;
    double b_lambda;
    double gap;  ///< b_lambda - b*
};

struct VanishTable {
    std::vector<VanishRow> rows;  ///< sorted by lambda descending, then by y
    /// Per requested y: the gap has the sign and monotonicity in lambda
    /// predicted by the sign of 1 + log y.
    std::vector<bool> monotone_ok;
};

VanishTable vanishing_sweep(const ModelParams& params, std::vector<double> lambdas,
                            const std::vector<double>& y_points);

}  // namespace stopflow
