#include "jumptail/models.hpp"

#include <cmath>

#include "jumptail/errors.hpp"
#include "jumptail/sharemeasure.hpp"

namespace jumptail::models {

SmoothField atan_intensity(double base, double slope) {
    return SmoothField::analytic([=](double x) { return base + slope * std::atan(x); },
                                 {
                                     [=](double x) { return slope / (1.0 + x * x); },
                                     [=](double x) {
                                         const double q = 1.0 + x * x;
                                         return -2.0 * slope * x / (q * q);
                                     },
                                     [=](double x) {
                                         const double q = 1.0 + x * x;
                                         return slope * (6.0 * x * x - 2.0) / (q * q * q);
                                     },
                                     [=](double x) {
                                         const double q = 1.0 + x * x;
                                         return 24.0 * slope * x * (1.0 - x * x) / (q * q * q * q);
                                     },
                                 });
}

ModelSpec local_stable(const LocalStableParams& p) {
    if (!(p.alpha > 0.0 && p.alpha < 2.0)) throw ConfigurationError("alpha must lie in (0, 2)");
    if (p.tempering < 0.0) throw ConfigurationError("tempering must be nonnegative");
    const double alpha = p.alpha;
    const double tau = p.tempering;

    auto shape = [alpha, tau](double r) {
        const double a = std::fabs(r);
        return std::exp(-tau * a) * std::pow(a, -1.0 - alpha);
    };
    auto shape_prime = [alpha, tau, shape](double r) {
        const double a = std::fabs(r);
        const double s = r > 0.0 ? 1.0 : -1.0;
        return s * shape(r) * (-tau - (1.0 + alpha) / a);
    };

    ModelSpec m;
    m.label = p.label;
    const SmoothField c = atan_intensity(p.intensity_base, p.intensity_slope);
    m.nu = JumpIntensity::separable(c, shape, shape_prime, shape, shape_prime, alpha);
    m.nu.symmetric = true;
    m.nu.state_free = p.intensity_slope == 0.0;
    if (tau == 0.0) m.nu.power_law_scale = 1.0;

    const double s0 = p.sigma_base;
    const double s1 = p.sigma_sin_amplitude;
    if (s1 == 0.0) {
        m.sigma = SmoothField::constant(s0);
    } else {
        m.sigma = SmoothField::analytic([=](double x) { return s0 + s1 * std::sin(x); },
                                        {
                                            [=](double x) { return s1 * std::cos(x); },
                                            [=](double x) { return -s1 * std::sin(x); },
                                            [=](double x) { return -s1 * std::cos(x); },
                                            [=](double x) { return s1 * std::sin(x); },
                                        });
    }

    m.gamma = p.gamma_tanh == 0.0 ? JumpTransform::identity() : JumpTransform::scaled_tanh(p.gamma_tanh);

    if (p.drift == "sin") {
        m.b = SmoothField::analytic([](double x) { return std::sin(x); },
                                    {
                                        [](double x) { return std::cos(x); },
                                        [](double x) { return -std::sin(x); },
                                        [](double x) { return -std::cos(x); },
                                        [](double x) { return std::sin(x); },
                                    });
    } else if (p.drift == "constant") {
        m.b = SmoothField::constant(p.drift_value);
    } else if (p.drift == "martingale") {
        m.b = calibrate_drift(m.sigma, m.gamma, m.nu);
    } else {
        throw ConfigurationError("unknown drift kind '" + p.drift + "' (expected sin, constant or martingale)");
    }
    return m;
}

ModelSpec model_a() {
    LocalStableParams p;
    p.label = "modelA";
    return local_stable(p);
}

ModelSpec model_b(double sigma) {
    LocalStableParams p;
    p.tempering = 2.0;
    p.drift = "martingale";
    p.sigma_base = sigma;
    p.sigma_sin_amplitude = 0.0;
    p.label = "modelB";
    return local_stable(p);
}

ModelSpec compound_uniform(double rate, double lo, double hi, double b, double sigma) {
    if (!(rate >= 0.0) || !(lo > 0.0) || !(hi > lo)) {
        throw ConfigurationError("compound_uniform needs rate >= 0 and 0 < lo < hi");
    }
    const double density = rate / (2.0 * (hi - lo));
    auto p = [=](double r) {
        const double a = std::fabs(r);
        return (a >= lo && a <= hi) ? density : 0.0;
    };
    auto zero1 = [](double) { return 0.0; };
    auto zero2 = [](double, double) { return 0.0; };

    ModelSpec m;
    m.label = "compound_uniform";
    m.b = SmoothField::constant(b);
    m.sigma = SmoothField::constant(sigma);
    m.gamma = JumpTransform::identity();
    m.nu.value = [p](double, double r) { return p(r); };
    m.nu.d1 = zero2;
    m.nu.d11 = zero2;
    m.nu.d2 = zero2;
    m.nu.h = p;
    m.nu.h_prime = zero1;
    m.nu.alpha = 1.0;
    m.nu.state_free = true;
    m.nu.symmetric = true;
    m.nu.vanishes = rate == 0.0;
    m.nu.breakpoints = {-hi, -lo, lo, hi};
    return m;
}

ModelSpec pure_diffusion(double b, double sigma) {
    ModelSpec m;
    m.label = "pure_diffusion";
    m.b = SmoothField::constant(b);
    m.sigma = SmoothField::constant(sigma);
    m.gamma = JumpTransform::identity();
    m.nu = JumpIntensity::none();
    return m;
}

ModelSpec by_label(const std::string& label) {
    if (label == "modelA") return model_a();
    if (label == "modelB") return model_b();
    throw ConfigurationError("unknown model label '" + label + "' (expected modelA or modelB)");
}

}  // namespace jumptail::models
