#pragma once

#include "cattest/error.hpp"

#include <cmath>
#include <limits>

namespace cattest {

namespace detail {

inline constexpr int gamma_max_iterations = 100000;
inline constexpr double gamma_epsilon = 1e-16;

// log of x^a e^-x / Gamma(a), the common prefactor of both expansions.
inline double gamma_log_prefactor(double a, double x) {
    return a * std::log(x) - x - std::lgamma(a);
}

// Power series for P(a, x); converges quickly for x < a + 1.
inline double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double denom = a;
    for (int k = 0; k < gamma_max_iterations; ++k) {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if (std::abs(term) < std::abs(sum) * gamma_epsilon) {
            break;
        }
    }
    return sum * std::exp(gamma_log_prefactor(a, x));
}

// Continued fraction for Q(a, x) by modified Lentz; used for x >= a + 1.
inline double upper_gamma_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / gamma_epsilon;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < gamma_max_iterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < gamma_epsilon) {
            break;
        }
    }
    return std::exp(gamma_log_prefactor(a, x)) * h;
}

} // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw InputError("regularized_gamma_p requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (std::isinf(x)) {
        return 1.0;
    }
    return x < a + 1.0 ? detail::lower_gamma_series(a, x) : 1.0 - detail::upper_gamma_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw InputError("regularized_gamma_q requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 1.0;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    return x < a + 1.0 ? 1.0 - detail::lower_gamma_series(a, x) : detail::upper_gamma_fraction(a, x);
}

/// P(chi^2_dof >= x).
inline double chi_square_sf(double x, int dof) {
    if (dof < 1) {
        throw InputError("chi-square degrees of freedom must be >= 1");
    }
    if (!(x >= 0.0)) {
        throw InputError("chi-square statistic must be non-negative");
    }
    return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

/// P(chi^2_dof <= x).
inline double chi_square_cdf(double x, int dof) {
    if (dof < 1) {
        throw InputError("chi-square degrees of freedom must be >= 1");
    }
    if (!(x >= 0.0)) {
        throw InputError("chi-square statistic must be non-negative");
    }
    return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

} // namespace cattest
