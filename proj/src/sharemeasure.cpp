#include "jumptail/sharemeasure.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "jumptail/errors.hpp"

namespace jumptail {

using quad::inf;
using quad::QuadratureResult;
using quad::Tolerance;

namespace {

// Write-once cache in front of an expensive pure function of one variable.
class Memo {
public:
    explicit Memo(Fn1 f) : f_(std::move(f)) {}

    double operator()(double x) {
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(x);
            if (it != cache_.end()) return it->second;
        }
        const double v = f_(x);
        std::unique_lock lock(mutex_);
        cache_.emplace(x, v);
        return v;
    }

private:
    Fn1 f_;
    std::shared_mutex mutex_;
    std::unordered_map<double, double> cache_;
};

Fn1 memoized(Fn1 f) {
    auto memo = std::make_shared<Memo>(std::move(f));
    return [memo](double x) { return (*memo)(x); };
}

const Tolerance kOracle = Tolerance::oracle();

// exp(g) * f computed as a single exponential so a large g against a tiny f stays finite.
double exp_times(double g, double f) {
    if (f == 0.0) return 0.0;
    return std::copysign(std::exp(g + std::log(std::fabs(f))), f);
}

// Integral over r != 0 of small(r) on 0 < |r| <= 1 and large(r) on |r| > 1, with divergence
// detection on both tails.
double jump_integral(const Fn1& small, const Fn1& large) {
    try {
        double v = quad::integrate_small_jumps(small, 1.0, kOracle).value;
        v += quad::integrate_blocks_to_infinity(large, 1.0, kOracle).value;
        v += quad::integrate_blocks_to_infinity([&](double r) { return large(-r); }, 1.0, kOracle).value;
        return v;
    } catch (const DivergenceError& e) {
        throw MomentConditionError(std::string("exponential moment of the jumps is infinite: ") + e.what());
    } catch (const IntegrationError& e) {
        throw MomentConditionError(std::string("exponential moment of the jumps could not be integrated: ") +
                                   e.what());
    }
}

// Integral of (exp(gamma) - 1 - 1{|r|<=1} gamma) nu over r != 0.
double exponential_compensator(const JumpTransform& gamma, const JumpIntensity& nu, double x) {
    if (nu.vanishes) return 0.0;
    return jump_integral([&](double r) { return expm1_minus_linear(gamma.value(x, r)) * nu.value(x, r); },
                         [&](double r) { return std::expm1(gamma.value(x, r)) * nu.value(x, r); });
}

}  // namespace

double expm1_minus_linear(double g) {
    if (std::fabs(g) < 1e-2) {
        // Taylor series; the first omitted term is below 1e-16 relative.
        double term = 0.5 * g * g;
        double sum = term;
        for (int n = 3; n <= 9; ++n) {
            term *= g / n;
            sum += term;
        }
        return sum;
    }
    return std::expm1(g) - g;
}

double mark_slope_bound(const ModelSpec& model) {
    if (model.gamma.is_identity) return 1.0;
    const ValidationGrids grids = ValidationGrids::defaults();
    double c = 0.0;
    for (double x : grids.x)
        for (double r : grids.r) c = std::max(c, std::fabs(model.gamma.d2(x, r)));
    return 1.1 * c;
}

void check_moment_condition(const ModelSpec& model) {
    if (model.nu.vanishes) return;
    const double c = mark_slope_bound(model);
    const JumpIntensity& nu = model.nu;
    try {
        quad::integrate_blocks_to_infinity([&](double r) { return std::exp(c * r) * nu.g(r); }, 1.0, kOracle);
    } catch (const DivergenceError& e) {
        throw MomentConditionError(std::string("integral of exp(c r) g(r) over r >= 1 diverges: ") + e.what());
    } catch (const IntegrationError& e) {
        throw MomentConditionError(std::string("integral of exp(c r) g(r) over r >= 1 failed: ") + e.what());
    }
}

double martingale_residual(const ModelSpec& model, double x) {
    check_moment_condition(model);
    const double s = model.sigma(x);
    return model.b(x) + 0.5 * s * s + exponential_compensator(model.gamma, model.nu, x);
}

SmoothField calibrate_drift(const SmoothField& sigma, const JumpTransform& gamma, const JumpIntensity& nu) {
    check_moment_condition(ModelSpec{SmoothField{}, sigma, gamma, nu, "calibration"});
    return SmoothField::finite_difference(memoized([sigma, gamma, nu](double x) {
        const double s = sigma(x);
        return -0.5 * s * s - exponential_compensator(gamma, nu, x);
    }));
}

double share_drift_before_restriction(const ModelSpec& model, double x) {
    const double s = model.sigma(x);
    double v = model.b(x) + s * s;
    if (!model.nu.vanishes) {
        auto f = [&](double r) {
            const double g = model.gamma.value(x, r);
            return std::expm1(g) * g * model.nu.value(x, r);  // |r| <= 1, so no overflow
        };
        v += quad::integrate_small_jumps(f, 1.0, kOracle).value;
    }
    return v;
}

ModelSpec share_transform(const ModelSpec& model) {
    check_moment_condition(model);
    const double c = mark_slope_bound(model);
    const JumpTransform gamma = model.gamma;
    const JumpIntensity nu = model.nu;
    const SmoothField sigma = model.sigma;

    ModelSpec out;
    out.sigma = sigma;
    out.gamma = gamma;
    out.label = model.label + "#";
    out.b = SmoothField::finite_difference(memoized([sigma, gamma, nu](double x) {
        const double s = sigma(x);
        if (nu.vanishes) return 0.5 * s * s;
        // exp(g) - 1 - exp(g) g 1{|r|<=1}, split so the small-jump part has no cancellation.
        const double jumps = jump_integral(
            [&](double r) {
                const double g = gamma.value(x, r);
                return (expm1_minus_linear(g) - g * std::expm1(g)) * nu.value(x, r);
            },
            [&](double r) { return std::expm1(gamma.value(x, r)) * nu.value(x, r); });
        return 0.5 * s * s - jumps;
    }));

    JumpIntensity sharp;
    sharp.value = [gamma, nu](double x, double r) { return exp_times(gamma.value(x, r), nu.value(x, r)); };
    sharp.d1 = [gamma, nu](double x, double r) {
        const double g = gamma.value(x, r);
        return exp_times(g, gamma.d1(x, r) * nu.value(x, r)) + exp_times(g, nu.d1(x, r));
    };
    sharp.d11 = [gamma, nu](double x, double r) {
        const double g = gamma.value(x, r);
        const double gx = gamma.d1(x, r);
        return exp_times(g, (gx * gx + gamma.d11(x, r)) * nu.value(x, r)) + exp_times(g, 2.0 * gx * nu.d1(x, r)) +
               exp_times(g, nu.d11(x, r));
    };
    sharp.d2 = [gamma, nu](double x, double r) {
        const double g = gamma.value(x, r);
        return exp_times(g, gamma.d2(x, r) * nu.value(x, r)) + exp_times(g, nu.d2(x, r));
    };
    sharp.h = [c, nu](double r) { return exp_times(c * std::max(r, 0.0), nu.h(r)); };
    sharp.h_prime = [c, nu](double r) {
        if (r <= 0.0) return nu.h_prime(r);
        return exp_times(c * r, c * nu.h(r)) + exp_times(c * r, nu.h_prime(r));
    };
    sharp.alpha = nu.alpha;
    sharp.state_free = nu.state_free && gamma.is_identity;
    sharp.symmetric = false;
    sharp.vanishes = nu.vanishes;
    sharp.breakpoints = nu.breakpoints;
    out.nu = sharp;
    return out;
}

OptionExpansion otm_price_expansion(const ModelSpec& model, double s0, double k, double t,
                                    const TruncationConfig& trunc, const ExpansionOptions& opts) {
    if (!(k > 0.0)) throw DomainError("the log-moneyness k must be positive");
    if (!(s0 > 0.0)) throw DomainError("the spot s0 must be positive");
    if (t < 0.0) throw DomainError("t must be nonnegative");
    for (int i = 0; i <= 10; ++i) {
        const double x = -1.0 + 0.2 * i;
        const double res = martingale_residual(model, x);
        if (!(std::fabs(res) <= 1e-6)) {
            throw CalibrationError("drift violates the martingale restriction at x = " + std::to_string(x) +
                                   " (residual " + std::to_string(res) + ")");
        }
    }
    const ExpansionResult plain = tail_expansion(model, trunc, 0.0, k, t, opts);
    const ExpansionResult sharp = tail_expansion(share_transform(model), trunc, 0.0, k, t, opts);
    OptionExpansion o;
    o.s0 = s0;
    o.k = k;
    o.t = t;
    o.p1_plain = plain.p1;
    o.p2_plain = plain.p2;
    o.p1_sharp = sharp.p1;
    o.p2_sharp = sharp.p2;
    const double ek = std::exp(k);
    o.first_term = t * s0 * (sharp.p1 - ek * plain.p1);
    o.second_term = 0.5 * t * t * s0 * (sharp.p2 - ek * plain.p2);
    o.total = o.first_term + o.second_term;
    return o;
}

OptionExpansion otm_price_expansion(const ModelSpec& model, double s0, double k, double t) {
    return otm_price_expansion(model, s0, k, t, default_truncation(k));
}

double leading_term_direct(const ModelSpec& model, double s0, double k, double t) {
    if (!(k > 0.0)) throw DomainError("the log-moneyness k must be positive");
    if (model.nu.vanishes) return 0.0;
    check_moment_condition(model);
    const double ek = std::exp(k);
    const double r0 = gamma_inverse(model, 0.0, k);
    auto f = [&](double r) {
        const double v = model.nu.value(0.0, r);
        return std::max(exp_times(model.gamma.value(0.0, r), v) - ek * v, 0.0);
    };
    return t * s0 * quad::integrate_range(f, r0, inf, kOracle, model.nu.breakpoints).value;
}

double implied_intensity_from_curvature(double c_kk, double t, double kappa) {
    if (!(t > 0.0)) throw DomainError("t must be positive");
    return std::exp(kappa) * c_kk / t;
}

double vol_effect_on_price(const ModelSpec& model, double s0, double k) {
    if (!(k > 0.0)) throw DomainError("the log-moneyness k must be positive");
    if (model.nu.vanishes) return 0.0;
    const double ek = std::exp(k);
    double v = ek * model.nu.value(0.0, k);
    if (!model.nu.state_free) {
        const auto& bp = model.nu.breakpoints;
        v += quad::integrate_range([&](double r) {
            const double d = 0.5 * model.nu.d1(0.0, r);
            return exp_times(r, d) + ek * d;
        }, k, inf,
                                   kOracle, bp)
                 .value;
        v += quad::integrate_range([&](double r) {
            const double d = 0.5 * model.nu.d11(0.0, r);
            return exp_times(r, d) - ek * d;
        }, k, inf,
                                   kOracle, bp)
                 .value;
    }
    return s0 * v;
}

}  // namespace jumptail
