#include "stopflow/numerics.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "stopflow/errors.hpp"

namespace stopflow::numerics {

namespace {

struct Simpson {
    const std::function<double(double)>& f;
    double tol_per_length;
    int max_depth;
    bool exhausted = false;

    double refine(double a, double fa, double m, double fm, double b, double fb, double whole,
                  int depth) {
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        if (!std::isfinite(flm) || !std::isfinite(frm)) {
            throw NumericalError("non-finite integrand near x = " + std::to_string(lm));
        }
        const double h = b - a;
        const double left = h / 12.0 * (fa + 4.0 * flm + fm);
        const double right = h / 12.0 * (fm + 4.0 * frm + fb);
        const double both = left + right;
        const double diff = both - whole;
        const double tol = tol_per_length * h;
        const double noise = 32.0 * std::numeric_limits<double>::epsilon() *
                             (std::abs(left) + std::abs(right));
        if (std::abs(diff) <= std::max(15.0 * tol, noise)) return both + diff / 15.0;
        if (depth >= max_depth) {
            exhausted = true;
            return both + diff / 15.0;
        }
        return refine(a, fa, lm, flm, m, fm, left, depth + 1) +
               refine(m, fm, rm, frm, b, fb, right, depth + 1);
    }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 double rel_tol) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, abs_tol, rel_tol);

    // Coarse composite pass to size the relative budget.
    constexpr int kSeed = 8;
    const double h = (b - a) / kSeed;
    std::vector<double> nodes(2 * kSeed + 1);
    std::vector<double> vals(2 * kSeed + 1);
    double l1 = 0.0;
    for (int i = 0; i <= 2 * kSeed; ++i) {
        nodes[i] = (i == 2 * kSeed) ? b : a + 0.5 * h * i;
        vals[i] = f(nodes[i]);
        if (!std::isfinite(vals[i])) {
            throw NumericalError("non-finite integrand at x = " + std::to_string(nodes[i]));
        }
    }
    for (int k = 0; k < kSeed; ++k) {
        l1 += h / 6.0 *
              (std::abs(vals[2 * k]) + 4.0 * std::abs(vals[2 * k + 1]) + std::abs(vals[2 * k + 2]));
    }
    const double budget = std::max(abs_tol, rel_tol * l1);
    Simpson s{f, budget / (b - a), 50};
    double total = 0.0;
    for (int k = 0; k < kSeed; ++k) {
        const double x0 = nodes[2 * k];
        const double x2 = nodes[2 * k + 2];
        const double whole =
            (x2 - x0) / 6.0 * (vals[2 * k] + 4.0 * vals[2 * k + 1] + vals[2 * k + 2]);
        total += s.refine(x0, vals[2 * k], nodes[2 * k + 1], vals[2 * k + 1], x2, vals[2 * k + 2],
                          whole, 0);
    }
    if (!std::isfinite(total) || s.exhausted) {
        std::ostringstream os;
        os << "quadrature on [" << a << ", " << b << "] did not reach tolerance " << budget;
        throw NumericalError(os.str());
    }
    return total;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) {
        std::ostringstream os;
        os << "no sign change on [" << lo << ", " << hi << "]: f = " << flo << ", " << fhi;
        throw NumericalError(os.str());
    }
    auto done = [tol](double l, double h) { return std::abs(h - l) <= tol; };
    std::uintmax_t iters = 2000;
    const auto br = boost::math::tools::bisect(f, lo, hi, done, iters);
    return 0.5 * (br.first + br.second);
}

double bracket_and_solve(const std::function<double(double)>& f, double lo, double hi,
                         double rel_tol, int max_growth) {
    double flo = f(lo);
    double fhi = f(hi);
    int grown = 0;
    while ((flo < 0.0) == (fhi < 0.0) && fhi != 0.0) {
        if (++grown > max_growth) throw NumericalError("could not bracket root");
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
    }
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    auto done = [rel_tol](double l, double h) {
        return std::abs(h - l) <= rel_tol * std::max(std::abs(l), std::abs(h));
    };
    std::uintmax_t iters = 500;
    const auto br = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iters);
    return 0.5 * (br.first + br.second);
}

}  // namespace stopflow::numerics
