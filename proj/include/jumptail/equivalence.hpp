#pragma once

#include <utility>
#include <vector>

#include "jumptail/model.hpp"

namespace jumptail {

// Reparameterization of the small jumps |r| <= eps: the mark distribution of the dominating
// density h is mapped onto that of nu(x, .) by matching cumulative intensities from the
// band edge inward.
class ReparamContext {
public:
    ReparamContext(ModelSpec model, double eps);

    const ModelSpec& model() const { return model_; }
    double eps() const { return eps_; }

    // psi(w) = -integral_w^eps h for w > 0 and integral_{-eps}^w h for w < 0; 0 < |w| < eps.
    double psi(double w) const;
    // The w in (-eps, eps) \ {0} with psi(w) = v, v != 0.
    double psi_inverse(double v) const;
    // psi with nu(x, .) in place of h.
    double psi_bar(double x, double w) const;
    double psi_bar_inverse(double x, double v) const;
    // gamma(x, psi_bar^-1(x, psi(w))), extended by 0 at w = 0.
    double delta(double x, double w) const;
    // psi^-1(psi_bar(x, gamma^-1(x, w))); w must lie in the range of delta(x, .).
    double delta_inverse(double x, double w) const;

private:
    // Integral of f over [lo, hi] inside one side of the band, split geometrically toward 0.
    double band_integral(const Fn1& f, double lo, double hi) const;
    double side_inverse(const Fn1& cumulative, double v) const;

    ModelSpec model_;
    double eps_;
};

// |integral of 1{gamma(x, r) in (a, b)} nu(x, r) 1{|r| <= eps} dr
//  - integral of 1{delta(x, w) in (a, b)} 1{|w| <= eps} h(w) dw|.
// The interval must stay away from 0.
double kernel_equivalence_error(const ReparamContext& ctx, double x, double a, double b);

struct DeltaBoundReport {
    double max_abs_d2 = 0.0;              // grid maximum of |d delta / dw|
    double k0 = 0.0;                      // max |delta| / |w|
    double k1 = 0.0;                      // max |d delta / dx| / |w|
    double k2 = 0.0;                      // max |d2 delta / dx2| / |w|
    double min_one_plus_d1 = 0.0;         // min |1 + d delta / dx|
    double max_range_excess = 0.0;        // max of |psi_bar^-1(x, psi(w))| - |w|
    bool one_plus_d1_ok = false;          // min_one_plus_d1 > eta
    bool range_ok = false;                // max_range_excess <= 1e-12 |w|
    bool all_finite = false;
    bool passed() const { return one_plus_d1_ok && range_ok && all_finite; }
};

// Finite-difference regularity proxies for delta on a grid of states and small marks.
DeltaBoundReport delta_bound_check(const ReparamContext& ctx, const std::vector<double>& x_grid,
                                   const std::vector<double>& w_grid, double eta = 1e-6);

// 20 intervals inside the band: on each side of 0, every pair (f_i eps, f_j eps) drawn from
// the fractions {0.05, 0.1, 0.2, 0.4, 0.7}.
std::vector<std::pair<double, double>> kernel_interval_family(double eps);

}  // namespace jumptail
