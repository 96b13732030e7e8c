#pragma once

#include "jumptail/model.hpp"
#include "jumptail/quadrature.hpp"

namespace jumptail {

struct ExpansionOptions {
    quad::Tolerance tol{1e-9, 1e-8};
    // Adds -2 d1nu(x, r*) (d1 ginv - d2 ginv) to the sigma^2(x)/2 block of the drift-diffusion
    // term. This is the mixed contribution that appears when the second state derivative of
    // the tail integral is taken with its moving lower limit. Off by default.
    bool diffusion_cross_term = false;
};

struct ExpansionResult {
    double t = 0.0;
    double eps = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    double d_term = 0.0;
    double j_term = 0.0;
    double order1 = 0.0;
    double order2 = 0.0;
    double order2_clamped = 0.0;  // order2 clipped to [0, 1]; order2 keeps the raw value
    double quadrature_error = 0.0;
};

// The four blocks of the drift-diffusion term, in the order they are summed.
struct DTermParts {
    double start_drift = 0.0;      // b_eps(x) block
    double start_diffusion = 0.0;  // sigma^2(x)/2 block
    double end_drift = 0.0;        // (b_eps(x+y) - sigma sigma'(x+y)) block
    double end_diffusion = 0.0;    // -sigma^2(x+y)/2 block
    double error = 0.0;
    double sum() const { return start_drift + start_diffusion + end_drift + end_diffusion; }
};

// The five integrals of the jump term, in the order they are summed.
struct JTermParts {
    double small_then_large = 0.0;  // small jump from x, then a large jump to the threshold
    double large_then_small = 0.0;  // large jump near the threshold, then a small jump
    double two_large = 0.0;         // two large jumps that together reach the threshold
    double landing_mass = 0.0;      // minus the large-jump mass after landing beyond the threshold
    double product = 0.0;           // minus P1 times the large-jump mass at x
    double error = 0.0;
    double sum() const { return small_then_large + large_then_small + two_large + landing_mass + product; }
};

// Default truncation for a threshold y: eps = min(0.01, y/10).
TruncationConfig default_truncation(double y);

// True when |gamma(x, +-eps)| < y/2 and gamma^-1(x, y) > eps.
bool check_eps_compatible(const ModelSpec& model, const TruncationConfig& trunc, double x, double y);

quad::QuadratureResult p1(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                          const ExpansionOptions& opts = {});
DTermParts d_term_parts(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                        const ExpansionOptions& opts = {});
JTermParts j_term_parts(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                        const ExpansionOptions& opts = {});
double d_term(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
              const ExpansionOptions& opts = {});
double j_term(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
              const ExpansionOptions& opts = {});

// P[X_t >= x + y] ~ t P1 + t^2 P2 / 2 for a general jump transform.
ExpansionResult tail_expansion(const ModelSpec& model, const TruncationConfig& trunc, double x, double y, double t,
                               const ExpansionOptions& opts = {});

// The same expansion written out for gamma(x, r) = r, with no inverse maps involved.
ExpansionResult tail_expansion_identity_r(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                                          double t, const ExpansionOptions& opts = {});

// 2 nu(x, y) + integral_y^inf d1nu(x, r) dr: the coefficient of t^2 b / 2.
double drift_sensitivity(const ModelSpec& model, double x, double y, quad::Tolerance tol = quad::Tolerance::oracle());

enum class VolVariant {
    constant_sigma,  // -d2nu(x, y) + 1/2 integral_y^inf d11nu(x, r) dr
    general_sigma,   // the functional Lambda(x, y) for state-dependent sigma
};

double vol_sensitivity(const ModelSpec& model, double x, double y, VolVariant variant = VolVariant::constant_sigma,
                       quad::Tolerance tol = quad::Tolerance::oracle());

}  // namespace jumptail
