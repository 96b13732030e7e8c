#include "jumptail/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jumptail/errors.hpp"
#include "jumptail/roots.hpp"

namespace jumptail {

namespace {

const quad::Tolerance kBand{1e-300, 1e-13};

// Integral of f from a to b for a, b on the same side of 0, split into geometric pieces
// growing away from the endpoint nearer to 0.
double signed_integral(const Fn1& f, double a, double b) {
    if (a == b) return 0.0;
    if (a > b) return -signed_integral(f, b, a);
    const bool negative = b < 0.0;
    const double near = negative ? -b : a;
    const double far = negative ? -a : b;
    auto g = [&](double s) { return negative ? f(-s) : f(s); };
    double total = 0.0;
    double lo = near;
    while (lo < far) {
        const double hi = std::min(2.0 * lo, far);
        total += quad::integrate_interval(g, lo, hi, kBand).value;
        lo = hi;
    }
    return total;
}

double sign_of(double w) { return w > 0.0 ? 1.0 : -1.0; }

}  // namespace

ReparamContext::ReparamContext(ModelSpec model, double eps) : model_(std::move(model)), eps_(eps) {
    if (!(eps > 0.0)) throw ConfigurationError("reparameterization needs eps > 0");
}

double ReparamContext::band_integral(const Fn1& f, double lo, double hi) const { return signed_integral(f, lo, hi); }

double ReparamContext::psi(double w) const {
    if (!(w != 0.0 && std::fabs(w) < eps_)) throw DomainError("psi needs 0 < |w| < eps");
    if (model_.nu.power_law_scale) {
        const double s = *model_.nu.power_law_scale;
        const double a = model_.nu.alpha;
        const double mag = s * (std::pow(std::fabs(w), -a) - std::pow(eps_, -a)) / a;
        return w > 0.0 ? -mag : mag;
    }
    return band_integral(model_.nu.h, sign_of(w) * eps_, w);
}

double ReparamContext::psi_inverse(double v) const {
    if (!(v != 0.0) || !std::isfinite(v)) throw DomainError("psi_inverse needs a finite v != 0");
    if (model_.nu.power_law_scale) {
        const double s = *model_.nu.power_law_scale;
        const double a = model_.nu.alpha;
        const double mag = std::pow(std::pow(eps_, -a) + a * std::fabs(v) / s, -1.0 / a);
        return v < 0.0 ? mag : -mag;
    }
    const Fn1 h = model_.nu.h;
    return side_inverse([this, h](double w) { return band_integral(h, sign_of(w) * eps_, w); }, v);
}

double ReparamContext::psi_bar(double x, double w) const {
    if (!(w != 0.0 && std::fabs(w) < eps_)) throw DomainError("psi_bar needs 0 < |w| < eps");
    return band_integral([&](double r) { return model_.nu.value(x, r); }, sign_of(w) * eps_, w);
}

double ReparamContext::psi_bar_inverse(double x, double v) const {
    if (!(v != 0.0) || !std::isfinite(v)) throw DomainError("psi_bar_inverse needs a finite v != 0");
    const JumpIntensity nu = model_.nu;
    return side_inverse(
        [this, nu, x](double w) { return band_integral([&](double r) { return nu.value(x, r); }, sign_of(w) * eps_, w); },
        v);
}

// Solves cumulative(w) = v on the side of the band selected by the sign of v, in the
// logarithmic coordinate w = +-eps exp(-s).
double ReparamContext::side_inverse(const Fn1& cumulative, double v) const {
    const double side = v < 0.0 ? 1.0 : -1.0;
    // cumulative decreases toward 0 on the positive side and increases on the negative side.
    auto g = [&](double s) { return -side * cumulative(side * eps_ * std::exp(-s)); };
    roots::RootOptions opts;
    opts.initial_step = 1.0;
    const double s = roots::solve_increasing(g, -side * v, 1.0, opts);
    return side * eps_ * std::exp(-s);
}

double ReparamContext::delta(double x, double w) const {
    if (w == 0.0) return 0.0;
    if (!(std::fabs(w) < eps_)) throw DomainError("delta needs |w| < eps");
    return model_.gamma.value(x, psi_bar_inverse(x, psi(w)));
}

double ReparamContext::delta_inverse(double x, double w) const {
    if (w == 0.0) return 0.0;
    const double r = gamma_inverse(model_, x, w);
    if (!(std::fabs(r) < eps_)) throw DomainError("delta_inverse needs w inside the range of delta(x, .)");
    return psi_inverse(psi_bar(x, r));
}

double kernel_equivalence_error(const ReparamContext& ctx, double x, double a, double b) {
    if (!(a < b)) return 0.0;
    if (a <= 0.0 && b >= 0.0) throw DomainError("the interval must stay away from 0");
    const ModelSpec& m = ctx.model();
    const double eps = ctx.eps();
    const double range_lo = m.gamma.value(x, -eps);
    const double range_hi = m.gamma.value(x, eps);
    const double lo = std::max(a, range_lo);
    const double hi = std::min(b, range_hi);
    if (!(lo < hi)) return 0.0;

    // Band edges map to +-eps exactly on both sides.
    const double r_lo = lo == range_lo ? -eps : gamma_inverse(m, x, lo);
    const double r_hi = hi == range_hi ? eps : gamma_inverse(m, x, hi);
    const double w_lo = lo == range_lo ? -eps : ctx.delta_inverse(x, lo);
    const double w_hi = hi == range_hi ? eps : ctx.delta_inverse(x, hi);

    const double lhs = signed_integral([&](double r) { return m.nu.value(x, r); }, r_lo, r_hi);
    const double rhs = signed_integral(m.nu.h, w_lo, w_hi);
    return std::fabs(lhs - rhs);
}

DeltaBoundReport delta_bound_check(const ReparamContext& ctx, const std::vector<double>& x_grid,
                                   const std::vector<double>& w_grid, double eta) {
    DeltaBoundReport rep;
    rep.min_one_plus_d1 = std::numeric_limits<double>::infinity();
    rep.max_range_excess = -std::numeric_limits<double>::infinity();
    bool finite = true;
    bool range_ok = true;
    for (double x : x_grid) {
        const double hx = 1e-4 * std::max(1.0, std::fabs(x));
        const double hxx = 1e-3 * std::max(1.0, std::fabs(x));
        for (double w : w_grid) {
            if (w == 0.0 || !(std::fabs(w) < ctx.eps())) continue;
            const double aw = std::fabs(w);
            const double hw = 1e-4 * aw;
            const double d = ctx.delta(x, w);
            const double d2 = (ctx.delta(x, w + hw) - ctx.delta(x, w - hw)) / (2.0 * hw);
            const double d1 = (ctx.delta(x + hx, w) - ctx.delta(x - hx, w)) / (2.0 * hx);
            const double d11 = (ctx.delta(x + hxx, w) - 2.0 * d + ctx.delta(x - hxx, w)) / (hxx * hxx);
            finite = finite && std::isfinite(d) && std::isfinite(d2) && std::isfinite(d1) && std::isfinite(d11);
            rep.max_abs_d2 = std::max(rep.max_abs_d2, std::fabs(d2));
            rep.k0 = std::max(rep.k0, std::fabs(d) / aw);
            rep.k1 = std::max(rep.k1, std::fabs(d1) / aw);
            rep.k2 = std::max(rep.k2, std::fabs(d11) / aw);
            rep.min_one_plus_d1 = std::min(rep.min_one_plus_d1, std::fabs(1.0 + d1));
            const double excess = std::fabs(ctx.psi_bar_inverse(x, ctx.psi(w))) - aw;
            rep.max_range_excess = std::max(rep.max_range_excess, excess);
            if (excess > 1e-10 * aw) range_ok = false;
        }
    }
    rep.all_finite = finite && std::isfinite(rep.min_one_plus_d1);
    rep.one_plus_d1_ok = rep.min_one_plus_d1 > eta;
    rep.range_ok = range_ok;
    return rep;
}

std::vector<std::pair<double, double>> kernel_interval_family(double eps) {
    const double f[] = {0.05, 0.1, 0.2, 0.4, 0.7};
    std::vector<std::pair<double, double>> out;
    for (double side : {1.0, -1.0}) {
        for (int i = 0; i < 5; ++i) {
            for (int j = i + 1; j < 5; ++j) {
                const double a = side * f[i] * eps;
                const double b = side * f[j] * eps;
                out.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
    }
    return out;
}

}  // namespace jumptail
