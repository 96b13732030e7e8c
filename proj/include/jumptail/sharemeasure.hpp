#pragma once

#include "jumptail/expansion.hpp"
#include "jumptail/model.hpp"

namespace jumptail {

struct OptionExpansion {
    double s0 = 1.0;
    double k = 0.0;
    double t = 0.0;
    double first_term = 0.0;   // t s0 (P1# - e^k P1)
    double second_term = 0.0;  // t^2/2 s0 (P2# - e^k P2)
    double total = 0.0;
    double p1_plain = 0.0;
    double p2_plain = 0.0;
    double p1_sharp = 0.0;
    double p2_sharp = 0.0;
};

// Upper bound c on |d gamma / dr|: 1 for the identity, otherwise the grid maximum plus 10%.
double mark_slope_bound(const ModelSpec& model);

// Throws MomentConditionError unless the integral of exp(c r) g(r) over r >= 1 converges.
void check_moment_condition(const ModelSpec& model);

// exp(gamma) - 1 - gamma evaluated without cancellation for small gamma.
double expm1_minus_linear(double g);

// b(x) + sigma^2(x)/2 + integral of (exp(gamma) - 1 - 1{|r|<=1} gamma) nu dr.
double martingale_residual(const ModelSpec& model, double x);

// The drift that makes exp(X) a martingale, evaluated lazily and memoized per state.
SmoothField calibrate_drift(const SmoothField& sigma, const JumpTransform& gamma, const JumpIntensity& nu);

// b#(x) written as b + sigma^2 + integral of (exp(gamma) - 1) 1{|r|<=1} gamma nu dr; it agrees
// with the drift of share_transform only when the martingale restriction holds.
double share_drift_before_restriction(const ModelSpec& model, double x);

// The model under the share measure: nu# = exp(gamma) nu, drift b#, dominating density
// exp(c max(r, 0)) h(r).
ModelSpec share_transform(const ModelSpec& model);

// Short-maturity expansion of E[(S_t - K)+] for K = s0 exp(k), k > 0.
OptionExpansion otm_price_expansion(const ModelSpec& model, double s0, double k, double t,
                                    const TruncationConfig& trunc, const ExpansionOptions& opts = {});
OptionExpansion otm_price_expansion(const ModelSpec& model, double s0, double k, double t);

// t s0 times the integral of (exp(gamma(0, r)) - exp(k))+ nu(0, r) dr.
double leading_term_direct(const ModelSpec& model, double s0, double k, double t);

// exp(kappa) c_kk / t: the jump intensity implied by the strike curvature of call prices.
double implied_intensity_from_curvature(double c_kk, double t, double kappa);

// s0 times e^k nu(0, k) + int_k^inf (e^r + e^k)/2 d1nu(0, r) dr + int_k^inf (e^r - e^k)/2 d11nu(0, r) dr.
double vol_effect_on_price(const ModelSpec& model, double s0, double k);

}  // namespace jumptail
