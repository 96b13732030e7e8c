#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace jumptail::quad {

using Integrand = std::function<double(double)>;
using Integrand2 = std::function<double(double, double)>;

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Absolute/relative tolerance pair; the looser of the two bounds applies.
struct Tolerance {
    double abs = 1e-9;
    double rel = 1e-8;

    double target(double value) const;
    Tolerance scaled(double factor) const { return {abs * factor, rel * factor}; }

    // Tolerance used when a quadrature result serves as a reference value.
    static Tolerance oracle() { return {1e-12, 1e-12}; }
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::size_t evaluations = 0;

    QuadratureResult& operator+=(const QuadratureResult& other);
    QuadratureResult& operator-=(const QuadratureResult& other);
};

QuadratureResult operator+(QuadratureResult a, const QuadratureResult& b);
QuadratureResult operator-(QuadratureResult a, const QuadratureResult& b);
QuadratureResult operator*(double s, QuadratureResult a);

inline constexpr int default_max_subdivisions = 4000;

// Globally adaptive Gauss-Kronrod (21/10) integration over a finite interval.
// b < a integrates in the reverse orientation and returns the negated value.
QuadratureResult integrate_interval(const Integrand& f, double a, double b, Tolerance tol = {},
                                    int max_subdivisions = default_max_subdivisions);

// Integral over [a, inf) through r = a + L*s/(1-s) with L = max(|a|, 0.01).
QuadratureResult integrate_semi_infinite(const Integrand& f, double a, Tolerance tol = {});

// Integral over (-inf, b].
QuadratureResult integrate_semi_infinite_left(const Integrand& f, double b, Tolerance tol = {});

// Integral over [a, b] where either end may be infinite. The range is split at every
// breakpoint strictly inside it. b < a flips the sign.
QuadratureResult integrate_range(const Integrand& f, double a, double b, Tolerance tol = {},
                                 const std::vector<double>& breakpoints = {});

// Integral over {|r| > eps}. With eps = 0 the neighbourhood of the origin is covered by
// dyadic shells [2^-(k+1), 2^-k] on both sides, accumulated until a shell contributes less
// than a tenth of the tolerance; eight successive growing shells raise DivergenceError.
QuadratureResult integrate_punctured(const Integrand& f, double eps, Tolerance tol = {},
                                     const std::vector<double>& breakpoints = {});

// Oriented integral from 0 to `end` (either sign) by dyadic shells toward the origin,
// for integrands with an integrable singularity at 0.
QuadratureResult integrate_to_origin(const Integrand& f, double end, Tolerance tol = {});

// Integral over {0 < |r| <= eps} by dyadic shells toward the origin.
QuadratureResult integrate_small_jumps(const Integrand& f, double eps, Tolerance tol = {});

// Integral over [a, inf), a > 0, by blocks [a 2^k, a 2^(k+1)]; eight successive growing
// blocks raise DivergenceError. Used where divergence must be detected, not assumed away.
QuadratureResult integrate_blocks_to_infinity(const Integrand& f, double a, Tolerance tol = {});

// Iterated integral of f(outer, inner) over outer in [a, b] and inner in [lo(outer), hi(outer)].
// Inner bounds may be infinite. The inner tolerance is tol / (10 * outer piece count).
QuadratureResult integrate_double(const Integrand2& f, double a, double b,
                                  const std::function<double(double)>& inner_lo,
                                  const std::function<double(double)>& inner_hi, Tolerance tol = {},
                                  const std::vector<double>& outer_breakpoints = {},
                                  const std::vector<double>& inner_breakpoints = {});

}  // namespace jumptail::quad
