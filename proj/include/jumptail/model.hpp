#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jumptail/quadrature.hpp"

namespace jumptail {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

enum class DerivativeMode { analytic, finite_difference };

// A scalar coefficient of the state, such as the drift b(x) or the volatility sigma(x).
class SmoothField {
public:
    SmoothField();  // identically zero

    // derivatives[i] is the (i+1)-th derivative; missing orders fall back to differencing.
    static SmoothField analytic(Fn1 f, std::vector<Fn1> derivatives);
    static SmoothField finite_difference(Fn1 f);
    static SmoothField constant(double c);

    double operator()(double x) const { return f_(x); }
    double eval(double x) const { return f_(x); }
    // n-th derivative, 0 <= n <= 4.
    double deriv(int n, double x) const;
    DerivativeMode mode() const { return mode_; }

private:
    Fn1 f_;
    std::vector<Fn1> derivatives_;
    DerivativeMode mode_ = DerivativeMode::analytic;
};

// Central differences used wherever an analytic derivative is absent.
double fd_first(const Fn1& f, double x);
double fd_second(const Fn1& f, double x);

// The jump map r -> gamma(x, r): increasing in r with gamma(x, 0) = 0.
struct JumpTransform {
    Fn2 value;
    Fn2 d1;   // d/dx
    Fn2 d2;   // d/dr
    Fn2 d11;  // d2/dx2
    Fn2 d12;  // d2/dxdr
    Fn2 d22;  // d2/dr2
    Fn2 inverse;  // optional closed form of r with gamma(x, r) = y
    bool is_identity = false;

    static JumpTransform identity();
    // Partials not supplied are filled in by central differences of `value`.
    static JumpTransform from_partials(Fn2 value, Fn2 d1 = {}, Fn2 d2 = {}, Fn2 d11 = {}, Fn2 d12 = {},
                                       Fn2 d22 = {}, Fn2 inverse = {});
    // gamma(x, r) = r * (1 + k * tanh(x)), |k| < 1: a state-dependent test transform.
    static JumpTransform scaled_tanh(double k);
    // gamma identically zero. Not invertible; only meaningful for degenerate checks.
    static JumpTransform zero();

    double operator()(double x, double r) const { return value(x, r); }
};

// The state-dependent jump intensity nu(x, r) and its dominating Levy density h(r).
struct JumpIntensity {
    Fn2 value;  // nu
    Fn2 d1;     // d nu / dx
    Fn2 d11;    // d2 nu / dx2
    Fn2 d2;     // d nu / dr
    Fn1 h;
    Fn1 h_prime;
    double alpha = 1.0;
    bool state_free = false;  // nu does not depend on x
    bool symmetric = false;   // nu(x, -r) = nu(x, r) and h(-r) = h(r)
    bool vanishes = false;    // nu identically zero
    // Set when h(r) = scale * |r|^(-1-alpha) exactly, which allows closed-form sampling.
    std::optional<double> power_law_scale;
    // Mark values other than 0 where nu or h fails to be smooth (support edges).
    std::vector<double> breakpoints;

    double operator()(double x, double r) const { return value(x, r); }
    // nu(x, r) / h(r).
    double ratio(double x, double r) const;
    // g(r) = h(r) |r|^(alpha + 1).
    double g(double r) const;

    static JumpIntensity none();
    // nu(x, r) = c(x) * shape(r) with dominating density h. shape_prime = d shape / dr.
    static JumpIntensity separable(SmoothField c, Fn1 shape, Fn1 shape_prime, Fn1 h, Fn1 h_prime,
                                   double alpha);
    // Fills missing partials with central differences of `value`.
    void complete_partials();
};

struct ModelSpec {
    SmoothField b;
    SmoothField sigma;
    JumpTransform gamma;
    JumpIntensity nu;
    std::string label;
};

// Sharp truncation: jumps with |r| > eps are "large".
struct TruncationConfig {
    double eps = 0.01;
};

struct ConditionCheck {
    std::string name;
    bool passed = true;
    double margin = 0.0;  // smallest observed slack; negative when violated
    double witness_x = 0.0;
    double witness_r = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ConditionCheck> checks;
    bool all_passed() const;
    const ConditionCheck& check(const std::string& name) const;
};

struct ValidationGrids {
    std::vector<double> x;
    std::vector<double> r;
    // 41 uniform points on [-5, 5]; 80 log-spaced |r| on [1e-4, 5] with both signs.
    static ValidationGrids defaults();
};

ValidationReport validate_assumptions(const ModelSpec& model, const std::vector<double>& x_grid,
                                      const std::vector<double>& r_grid, double eta = 1e-6);

// 1 when the candidate mark r fired at state x is kept, i.e. u < nu(x, r) / h(r).
int thinning_indicator(const ModelSpec& model, double x, double r, double u);

// r with gamma(x, r) = y.
double gamma_inverse(const ModelSpec& model, double x, double y);
// z with z + gamma(z, r) = u.
double gamma_bar(const ModelSpec& model, double u, double r);

// Total mass of h outside [-eps, eps].
quad::QuadratureResult lambda_eps(const ModelSpec& model, const TruncationConfig& trunc,
                                  quad::Tolerance tol = quad::Tolerance::oracle());
// b(x) minus the drift of the jumps with eps < |r| <= 1.
double b_eps(const ModelSpec& model, const TruncationConfig& trunc, double x,
             quad::Tolerance tol = quad::Tolerance::oracle());
// Variance rate of the jumps with |gamma(x, r)| <= eps.
double sigma_hat_eps(const ModelSpec& model, const TruncationConfig& trunc, double x,
                     quad::Tolerance tol = quad::Tolerance::oracle());
// Drift of the approximating finite-activity process:
// b(x) - integral of gamma (1{|r|<=1} - 1{|gamma|<=eps}) nu dr.
double b_tilde_eps(const ModelSpec& model, const TruncationConfig& trunc, double x,
                   quad::Tolerance tol = quad::Tolerance::oracle());

// Breakpoints of the model's jump intensity plus the given extra points.
std::vector<double> mark_breakpoints(const ModelSpec& model, std::initializer_list<double> extra = {});

}  // namespace jumptail
