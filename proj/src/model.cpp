#include "jumptail/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "jumptail/errors.hpp"
#include "jumptail/roots.hpp"

namespace jumptail {

namespace {

double step1(double x) { return 1e-5 * std::max(1.0, std::fabs(x)); }
double step2(double x) { return 1e-4 * std::max(1.0, std::fabs(x)); }
double step34(double x) { return 1e-3 * std::max(1.0, std::fabs(x)); }

}  // namespace

double fd_first(const Fn1& f, double x) {
    const double h = step1(x);
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double fd_second(const Fn1& f, double x) {
    const double h = step2(x);
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

namespace {

double fd_third(const Fn1& f, double x) {
    const double h = step34(x);
    return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
}

double fd_fourth(const Fn1& f, double x) {
    const double h = step34(x);
    return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) / (h * h * h * h);
}

}  // namespace

SmoothField::SmoothField() : f_([](double) { return 0.0; }) {
    derivatives_.assign(4, [](double) { return 0.0; });
}

SmoothField SmoothField::analytic(Fn1 f, std::vector<Fn1> derivatives) {
    SmoothField s;
    s.f_ = std::move(f);
    s.derivatives_ = std::move(derivatives);
    s.mode_ = DerivativeMode::analytic;
    return s;
}

SmoothField SmoothField::finite_difference(Fn1 f) {
    SmoothField s;
    s.f_ = std::move(f);
    s.derivatives_.clear();
    s.mode_ = DerivativeMode::finite_difference;
    return s;
}

SmoothField SmoothField::constant(double c) {
    SmoothField s;
    s.f_ = [c](double) { return c; };
    return s;
}

double SmoothField::deriv(int n, double x) const {
    if (n < 0 || n > 4) throw DomainError("SmoothField::deriv supports orders 0 to 4");
    if (n == 0) return f_(x);
    if (static_cast<std::size_t>(n) <= derivatives_.size() && derivatives_[n - 1]) return derivatives_[n - 1](x);
    switch (n) {
        case 1: return fd_first(f_, x);
        case 2: return fd_second(f_, x);
        case 3: return fd_third(f_, x);
        default: return fd_fourth(f_, x);
    }
}

JumpTransform JumpTransform::identity() {
    JumpTransform g;
    g.value = [](double, double r) { return r; };
    g.d1 = [](double, double) { return 0.0; };
    g.d2 = [](double, double) { return 1.0; };
    g.d11 = [](double, double) { return 0.0; };
    g.d12 = [](double, double) { return 0.0; };
    g.d22 = [](double, double) { return 0.0; };
    g.inverse = [](double, double y) { return y; };
    g.is_identity = true;
    return g;
}

JumpTransform JumpTransform::from_partials(Fn2 value, Fn2 d1, Fn2 d2, Fn2 d11, Fn2 d12, Fn2 d22, Fn2 inverse) {
    JumpTransform g;
    g.value = value;
    g.d1 = d1 ? d1 : [value](double x, double r) { return fd_first([&](double z) { return value(z, r); }, x); };
    g.d2 = d2 ? d2 : [value](double x, double r) { return fd_first([&](double s) { return value(x, s); }, r); };
    g.d11 = d11 ? d11 : [value](double x, double r) { return fd_second([&](double z) { return value(z, r); }, x); };
    g.d22 = d22 ? d22 : [value](double x, double r) { return fd_second([&](double s) { return value(x, s); }, r); };
    g.d12 = d12 ? d12 : [value](double x, double r) {
        const double hx = step2(x);
        const double hr = step2(r);
        return (value(x + hx, r + hr) - value(x + hx, r - hr) - value(x - hx, r + hr) + value(x - hx, r - hr)) /
               (4.0 * hx * hr);
    };
    g.inverse = std::move(inverse);
    return g;
}

JumpTransform JumpTransform::scaled_tanh(double k) {
    auto sech2 = [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
    };
    return from_partials([k](double x, double r) { return r * (1.0 + k * std::tanh(x)); },
                         [k, sech2](double x, double r) { return r * k * sech2(x); },
                         [k](double x, double) { return 1.0 + k * std::tanh(x); },
                         [k, sech2](double x, double r) { return -2.0 * r * k * sech2(x) * std::tanh(x); },
                         [k, sech2](double x, double) { return k * sech2(x); },
                         [](double, double) { return 0.0; });
}

JumpTransform JumpTransform::zero() {
    JumpTransform g;
    auto z = [](double, double) { return 0.0; };
    g.value = z;
    g.d1 = z;
    g.d2 = z;
    g.d11 = z;
    g.d12 = z;
    g.d22 = z;
    return g;
}

double JumpIntensity::ratio(double x, double r) const {
    const double hr = h(r);
    const double v = value(x, r);
    if (hr > 0.0) return v / hr;
    return v == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

double JumpIntensity::g(double r) const { return h(r) * std::pow(std::fabs(r), alpha + 1.0); }

JumpIntensity JumpIntensity::none() {
    JumpIntensity nu;
    auto z2 = [](double, double) { return 0.0; };
    nu.value = z2;
    nu.d1 = z2;
    nu.d11 = z2;
    nu.d2 = z2;
    nu.h = [](double) { return 0.0; };
    nu.h_prime = [](double) { return 0.0; };
    nu.alpha = 1.0;
    nu.state_free = true;
    nu.symmetric = true;
    nu.vanishes = true;
    return nu;
}

JumpIntensity JumpIntensity::separable(SmoothField c, Fn1 shape, Fn1 shape_prime, Fn1 h, Fn1 h_prime,
                                       double alpha) {
    JumpIntensity nu;
    nu.value = [c, shape](double x, double r) { return c(x) * shape(r); };
    nu.d1 = [c, shape](double x, double r) { return c.deriv(1, x) * shape(r); };
    nu.d11 = [c, shape](double x, double r) { return c.deriv(2, x) * shape(r); };
    if (!shape_prime) shape_prime = [shape](double r) { return fd_first(shape, r); };
    nu.d2 = [c, shape_prime](double x, double r) { return c(x) * shape_prime(r); };
    if (!h_prime) h_prime = [h](double r) { return fd_first(h, r); };
    nu.h = std::move(h);
    nu.h_prime = std::move(h_prime);
    nu.alpha = alpha;
    return nu;
}

void JumpIntensity::complete_partials() {
    const Fn2 v = value;
    if (!d1) d1 = [v](double x, double r) { return fd_first([&](double z) { return v(z, r); }, x); };
    if (!d11) d11 = [v](double x, double r) { return fd_second([&](double z) { return v(z, r); }, x); };
    if (!d2) d2 = [v](double x, double r) { return fd_first([&](double s) { return v(x, s); }, r); };
    if (!h_prime && h) {
        const Fn1 hh = h;
        h_prime = [hh](double r) { return fd_first(hh, r); };
    }
}

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.passed; });
}

const ConditionCheck& ValidationReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw ConfigurationError("no validation check named " + name);
}

ValidationGrids ValidationGrids::defaults() {
    ValidationGrids g;
    for (int i = 0; i <= 40; ++i) g.x.push_back(-5.0 + 0.25 * i);
    std::vector<double> mags;
    const double lo = std::log(1e-4);
    const double hi = std::log(5.0);
    for (int i = 0; i < 80; ++i) mags.push_back(std::exp(lo + (hi - lo) * i / 79.0));
    for (auto it = mags.rbegin(); it != mags.rend(); ++it) g.r.push_back(-*it);
    for (double m : mags) g.r.push_back(m);
    return g;
}

namespace {

// Tracks the smallest margin seen for one condition.
struct Tracker {
    ConditionCheck c;
    bool seen = false;
    explicit Tracker(std::string name) { c.name = std::move(name); }
    void observe(double margin, double x, double r) {
        if (!seen || margin < c.margin) {
            c.margin = margin;
            c.witness_x = x;
            c.witness_r = r;
            seen = true;
        }
    }
    ConditionCheck finish(bool passed, std::string detail) {
        c.passed = passed;
        c.detail = std::move(detail);
        return c;
    }
};

double finite_or_throw(double v, const char* what, double x, double r) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << what << " is not finite at x = " << x << ", r = " << r;
        throw EvaluationError(os.str(), x, r);
    }
    return v;
}

}  // namespace

ValidationReport validate_assumptions(const ModelSpec& model, const std::vector<double>& x_grid,
                                      const std::vector<double>& r_grid, double eta) {
    if (x_grid.empty() || r_grid.empty()) throw ConfigurationError("validation grids must be non-empty");
    for (double r : r_grid)
        if (r == 0.0) throw ConfigurationError("the mark grid must exclude 0");

    const JumpIntensity& nu = model.nu;
    const JumpTransform& gm = model.gamma;
    double r_abs_max = 0.0;
    for (double r : r_grid) r_abs_max = std::max(r_abs_max, std::fabs(r));
    // Points treated as "near the origin" for the asymptotic conditions.
    const double near_zero = std::min(0.1, r_abs_max);

    Tracker domination("domination");
    Tracker ratio("intensity_ratio_near_zero");
    Tracker diffusion("nondegenerate_diffusion");
    Tracker zero_jump("zero_at_origin");
    Tracker monotone("monotone_in_mark");
    Tracker flow("invertible_flow");
    Tracker stable("stable_like_near_zero");
    double ratio_slope_max = 0.0;
    double ratio_state_max = 0.0;
    double g_max = 0.0;
    double rg_prime_max = 0.0;

    for (double x : x_grid) {
        const double s = finite_or_throw(model.sigma(x), "sigma", x, 0.0);
        diffusion.observe(s - eta, x, 0.0);
        const double g0 = finite_or_throw(gm.value(x, 0.0), "gamma", x, 0.0);
        zero_jump.observe(-std::fabs(g0), x, 0.0);
        for (double r : r_grid) {
            const double v = finite_or_throw(nu.value(x, r), "nu", x, r);
            const double hr = finite_or_throw(nu.h(r), "h", x, r);
            if (hr > 0.0)
                domination.observe(1.0 - v / hr, x, r);
            else
                domination.observe(v == 0.0 ? 0.0 : -v, x, r);
            monotone.observe(finite_or_throw(gm.d2(x, r), "d gamma / dr", x, r) - eta, x, r);
            flow.observe(std::fabs(1.0 + finite_or_throw(gm.d1(x, r), "d gamma / dx", x, r)) - eta, x, r);
            if (std::fabs(r) <= near_zero && !nu.vanishes) {
                const double ratio_v = hr > 0.0 ? v / hr : 0.0;
                ratio.observe(ratio_v - eta, x, r);
                if (hr > 0.0) {
                    const double hp = finite_or_throw(nu.h_prime(r), "h'", x, r);
                    const double d2 = finite_or_throw(nu.d2(x, r), "d nu / dr", x, r);
                    const double slope = (d2 * hr - v * hp) / (hr * hr);
                    ratio_slope_max = std::max(ratio_slope_max, std::fabs(r * slope));
                    ratio_state_max = std::max(ratio_state_max, std::fabs(nu.d1(x, r) / hr));
                    ratio_state_max = std::max(ratio_state_max, std::fabs(nu.d11(x, r) / hr));
                }
            }
        }
    }
    if (!nu.vanishes) {
        for (double r : r_grid) {
            if (std::fabs(r) > near_zero) continue;
            const double gv = finite_or_throw(nu.g(r), "g", 0.0, r);
            stable.observe(gv - eta, 0.0, r);
            g_max = std::max(g_max, gv);
            // r g'(r) = r h'(r) |r|^(a+1) + (a+1) g(r)
            const double rgp = r * nu.h_prime(r) * std::pow(std::fabs(r), nu.alpha + 1.0) + (nu.alpha + 1.0) * gv;
            rg_prime_max = std::max(rg_prime_max, std::fabs(finite_or_throw(rgp, "r g'", 0.0, r)));
        }
    }

    ValidationReport report;
    report.checks.push_back(domination.finish(domination.c.margin >= -1e-12, "min over grid of 1 - nu/h"));
    if (nu.vanishes) {
        report.checks.push_back(ratio.finish(true, "no jumps"));
        report.checks.push_back(stable.finish(true, "no jumps"));
    } else {
        std::ostringstream os;
        os << "min nu/h - eta near 0; max |r d(nu/h)/dr| = " << ratio_slope_max
           << "; max |d^i(nu/h)/dx^i| = " << ratio_state_max;
        report.checks.push_back(ratio.finish(ratio.seen && ratio.c.margin > 0.0, os.str()));
    }
    report.checks.push_back(diffusion.finish(diffusion.c.margin > 0.0, "min sigma - eta"));
    report.checks.push_back(zero_jump.finish(zero_jump.c.margin >= -1e-12, "-max |gamma(x, 0)|"));
    report.checks.push_back(monotone.finish(monotone.c.margin > 0.0, "min d gamma / dr - eta"));
    report.checks.push_back(flow.finish(flow.c.margin > 0.0, "min |1 + d gamma / dx| - eta"));
    if (!nu.vanishes) {
        std::ostringstream os;
        os << "min g - eta near 0; max g = " << g_max << "; max |r g'| = " << rg_prime_max;
        report.checks.push_back(stable.finish(stable.seen && stable.c.margin > 0.0, os.str()));
    }
    return report;
}

int thinning_indicator(const ModelSpec& model, double x, double r, double u) {
    if (r == 0.0) throw DomainError("thinning_indicator needs r != 0");
    const double hr = model.nu.h(r);
    if (!(hr > 0.0)) throw DomainError("thinning_indicator: dominating density vanishes at the mark");
    return u < model.nu.value(x, r) / hr ? 1 : 0;
}

double gamma_inverse(const ModelSpec& model, double x, double y) {
    const JumpTransform& g = model.gamma;
    if (g.inverse) return g.inverse(x, y);
    return roots::solve_increasing([&](double r) { return g.value(x, r); }, y, 0.0);
}

double gamma_bar(const ModelSpec& model, double u, double r) {
    if (r == 0.0) return u;
    const JumpTransform& g = model.gamma;
    if (g.is_identity) return u - r;
    return roots::solve_increasing([&](double z) { return z + g.value(z, r); }, u, u - g.value(u, r));
}

std::vector<double> mark_breakpoints(const ModelSpec& model, std::initializer_list<double> extra) {
    std::vector<double> out = model.nu.breakpoints;
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

quad::QuadratureResult lambda_eps(const ModelSpec& model, const TruncationConfig& trunc, quad::Tolerance tol) {
    if (!(trunc.eps > 0.0)) throw ConfigurationError("eps must be positive");
    if (model.nu.vanishes) return {};
    return quad::integrate_punctured(model.nu.h, trunc.eps, tol, model.nu.breakpoints);
}

double b_eps(const ModelSpec& model, const TruncationConfig& trunc, double x, quad::Tolerance tol) {
    if (!(trunc.eps > 0.0)) throw ConfigurationError("eps must be positive");
    const double bx = model.b(x);
    if (model.nu.vanishes || trunc.eps >= 1.0) return bx;
    if (model.nu.symmetric && model.gamma.is_identity) return bx;
    auto f = [&](double r) { return model.gamma.value(x, r) * model.nu.value(x, r); };
    const auto bp = model.nu.breakpoints;
    const double drift = quad::integrate_range(f, -1.0, -trunc.eps, tol, bp).value +
                         quad::integrate_range(f, trunc.eps, 1.0, tol, bp).value;
    return bx - drift;
}

double sigma_hat_eps(const ModelSpec& model, const TruncationConfig& trunc, double x, quad::Tolerance tol) {
    if (!(trunc.eps > 0.0)) throw ConfigurationError("eps must be positive");
    if (model.nu.vanishes) return 0.0;
    const double lo = gamma_inverse(model, x, -trunc.eps);
    const double hi = gamma_inverse(model, x, trunc.eps);
    auto f = [&](double r) {
        const double g = model.gamma.value(x, r);
        return g * g * model.nu.value(x, r);
    };
    return quad::integrate_to_origin(f, hi, tol).value - quad::integrate_to_origin(f, lo, tol).value;
}

double b_tilde_eps(const ModelSpec& model, const TruncationConfig& trunc, double x, quad::Tolerance tol) {
    if (!(trunc.eps > 0.0)) throw ConfigurationError("eps must be positive");
    const double bx = model.b(x);
    if (model.nu.vanishes) return bx;
    if (model.nu.symmetric && model.gamma.is_identity) return bx;
    // Integral of gamma nu over [-1, 1] minus the same over [lo, hi] = {|gamma| <= eps}.
    const double lo = gamma_inverse(model, x, -trunc.eps);
    const double hi = gamma_inverse(model, x, trunc.eps);
    auto f = [&](double r) { return model.gamma.value(x, r) * model.nu.value(x, r); };
    const auto bp = model.nu.breakpoints;
    const double drift = quad::integrate_range(f, -1.0, lo, tol, bp).value + quad::integrate_range(f, hi, 1.0, tol, bp).value;
    return bx - drift;
}

}  // namespace jumptail
