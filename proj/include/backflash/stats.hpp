#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace backflash {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a),
// series for x < a + 1, continued fraction otherwise.
inline double regularized_gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0)
        throw std::domain_error("regularized_gamma_q: require a > 0, x >= 0");
    if (x == 0.0) return 1.0;

    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        // P(a,x) by series, Q = 1 - P
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Lentz continued fraction for Q
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

// Survival function of the chi-squared distribution with k degrees of freedom.
inline double chi_squared_sf(double statistic, double dof) {
    if (dof <= 0.0) throw std::domain_error("chi_squared_sf: dof must be positive");
    if (statistic <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * dof, 0.5 * statistic);
}

} // namespace backflash
