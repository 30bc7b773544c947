#pragma once

#include <cmath>
#include <functional>

namespace stopflow::numerics {

/// Adaptive Simpson integration of `f` over [a, b].
///
/// The interval is seeded with eight panels, each halved until the Richardson
/// estimate meets its share of max(abs_tol, rel_tol * L1), L1 being a coarse
/// estimate of the integral of |f|. Throws NumericalError when the recursion
/// depth runs out first.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 double rel_tol);

/// Bisection on a sign-changing bracket [lo, hi]; stops when the bracket is
/// narrower than `tol`. Returns the midpoint of the final bracket.
/// Throws NumericalError when f(lo) and f(hi) share a sign.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol);

/// TOMS 748 root of `f` on a bracket grown geometrically from [lo, hi] to the
/// right until the sign changes (at most `max_growth` doublings).
double bracket_and_solve(const std::function<double(double)>& f, double lo, double hi,
                         double rel_tol, int max_growth = 200);

/// y log y with 0 log 0 = 0.
inline double xlogx(double y) { return y > 0.0 ? y * std::log(y) : 0.0; }

}  // namespace stopflow::numerics
