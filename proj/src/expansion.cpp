#include "jumptail/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "jumptail/errors.hpp"
#include "jumptail/roots.hpp"

namespace jumptail {

using quad::inf;
using quad::QuadratureResult;
using quad::Tolerance;

TruncationConfig default_truncation(double y) { return {std::min(0.01, y / 10.0)}; }

bool check_eps_compatible(const ModelSpec& model, const TruncationConfig& trunc, double x, double y) {
    if (!(y > 0.0) || !(trunc.eps > 0.0)) return false;
    const double up = model.gamma.value(x, trunc.eps);
    const double down = model.gamma.value(x, -trunc.eps);
    if (!(std::fabs(up) < 0.5 * y) || !(std::fabs(down) < 0.5 * y)) return false;
    return gamma_inverse(model, x, y) > trunc.eps;
}

namespace {

void require_compatible(const ModelSpec& model, const TruncationConfig& trunc, double x, double y) {
    if (!(y > 0.0)) throw DomainError("the threshold y must be positive");
    if (!check_eps_compatible(model, trunc, x, y))
        throw ConfigurationError("truncation eps is too large for the threshold y");
}

// Integral of f over [a, inf) with the band [-eps, eps] removed; a may be -inf.
QuadratureResult tail_eps(const quad::Integrand& f, double a, double eps, Tolerance tol,
                          const std::vector<double>& bp) {
    if (a >= eps) return quad::integrate_range(f, a, inf, tol, bp);
    QuadratureResult right = quad::integrate_range(f, eps, inf, tol, bp);
    if (a > -eps) return right;
    return quad::integrate_range(f, a, -eps, tol, bp) + right;
}

// Integral over {|r| > eps} with extra breakpoints.
QuadratureResult large_jumps(const quad::Integrand& f, double eps, Tolerance tol, const std::vector<double>& bp) {
    return quad::integrate_range(f, -inf, -eps, tol, bp) + quad::integrate_range(f, eps, inf, tol, bp);
}

// Integral of K(r) h(r) over 0 < |r| <= eps for a bracket K(r) = O(r^2) that can only be
// evaluated as a difference of O(r) quantities. Below |r| = r_c the bracket is replaced on
// each side by the quadratic-plus-cubic interpolant through r_c and r_c/2, which keeps
// cancellation noise out of the singular weight.
QuadratureResult small_jump_bracket(const quad::Integrand& bracket, const quad::Integrand& h, double eps,
                                    Tolerance tol) {
    const double rc = std::min(1e-3, eps / 4.0);
    QuadratureResult total;
    for (double side : {1.0, -1.0}) {
        const double r1 = side * rc;
        const double k1 = bracket(r1);
        const double k2 = bracket(0.5 * r1);
        const double b = 2.0 * (k1 - 4.0 * k2) / (r1 * r1 * r1);
        const double a = (k1 - b * r1 * r1 * r1) / (r1 * r1);
        auto model = [&](double r) { return (a * r * r + b * r * r * r) * h(r); };
        auto direct = [&](double r) {
            const double hr = h(r);
            return hr == 0.0 ? 0.0 : bracket(r) * hr;
        };
        // Oriented integrals from 0 outward, turned into positive-orientation measures.
        QuadratureResult near = quad::integrate_to_origin(model, r1, tol.scaled(0.5));
        QuadratureResult far = quad::integrate_interval(direct, r1, side * eps, tol.scaled(0.5));
        if (side < 0.0) {
            near.value = -near.value;
            far.value = -far.value;
        }
        total += near;
        total += far;
    }
    return total;
}

// Partial derivatives of r = gamma^-1(x, y) by implicit differentiation of gamma(x, r) = y.
struct InversePartials {
    double r = 0.0;
    double dy = 0.0;
    double dx = 0.0;
    double dyy = 0.0;
    double dxy = 0.0;
    double dxx = 0.0;
};

InversePartials inverse_partials(const ModelSpec& model, double x, double y) {
    const JumpTransform& g = model.gamma;
    InversePartials p;
    p.r = gamma_inverse(model, x, y);
    const double gr = g.d2(x, p.r);
    const double gx = g.d1(x, p.r);
    const double grr = g.d22(x, p.r);
    const double grx = g.d12(x, p.r);
    const double gxx = g.d11(x, p.r);
    p.dy = 1.0 / gr;
    p.dx = -gx / gr;
    p.dyy = -grr / (gr * gr * gr);
    p.dxy = -(grx - grr * gx / gr) / (gr * gr);
    p.dxx = -((gxx + grx * p.dx) * gr - gx * (grx + grr * p.dx)) / (gr * gr);
    return p;
}

// Quantities shared by the drift-diffusion and jump terms at one (x, y, eps).
struct Setup {
    const ModelSpec& m;
    double x;
    double y;
    double eps;
    Tolerance tol;
    Tolerance inner;
    Tolerance bracket{1e-15, 1e-12};  // for the O(r) pieces of the small-jump brackets
    std::vector<double> bp;
    InversePartials inv;
    double nu_star = 0.0;      // nu_eps(x, r*)
    double d2nu_star = 0.0;    // d2 nu_eps(x, r*)
    double d1nu_star = 0.0;    // d1 nu_eps(x, r*)
    QuadratureResult tail1;    // integral_{r*}^inf d1 nu_eps(x, r) dr
    QuadratureResult tail11;   // integral_{r*}^inf d11 nu_eps(x, r) dr
    double lead_slope = 0.0;   // d1 ginv - d2 ginv

    Setup(const ModelSpec& model, const TruncationConfig& trunc, double x_, double y_, const ExpansionOptions& opts)
        : m(model), x(x_), y(y_), eps(trunc.eps), tol(opts.tol), inner(opts.tol.scaled(0.01)), bp(model.nu.breakpoints) {
        inv = inverse_partials(model, x, y);
        nu_star = nu_eps(x, inv.r);
        d2nu_star = std::fabs(inv.r) > eps ? model.nu.d2(x, inv.r) : 0.0;
        d1nu_star = std::fabs(inv.r) > eps ? model.nu.d1(x, inv.r) : 0.0;
        lead_slope = inv.dx - inv.dy;
        if (!model.nu.state_free) {
            tail1 = tail_eps([&](double r) { return model.nu.d1(x, r); }, inv.r, eps, inner, bp);
            tail11 = tail_eps([&](double r) { return model.nu.d11(x, r); }, inv.r, eps, inner, bp);
        }
    }

    double nu_eps(double z, double r) const { return std::fabs(r) > eps ? m.nu.value(z, r) : 0.0; }

    double ratio_small(double z, double r) const {
        if (std::fabs(r) > eps) return 0.0;
        const double hr = m.nu.h(r);
        return hr > 0.0 ? m.nu.value(z, r) / hr : 0.0;
    }

    // Total large-jump mass at state z.
    QuadratureResult large_mass(double z) const {
        return large_jumps([&](double r) { return m.nu.value(z, r); }, eps, inner, bp);
    }
};

}  // namespace

QuadratureResult p1(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                    const ExpansionOptions& opts) {
    require_compatible(model, trunc, x, y);
    if (model.nu.vanishes) return {};
    const double r0 = gamma_inverse(model, x, y);
    return tail_eps([&](double r) { return model.nu.value(x, r); }, r0, trunc.eps, opts.tol, model.nu.breakpoints);
}

namespace {

DTermParts d_parts_from(const Setup& s, const ExpansionOptions& opts) {
    DTermParts d;
    if (s.m.nu.vanishes) return d;
    const ModelSpec& m = s.m;
    const double x = s.x;
    const double q = s.x + s.y;
    const TruncationConfig trunc{s.eps};
    const double sx2 = m.sigma(x) * m.sigma(x);
    const double sq = m.sigma(q);
    const double L1 = s.lead_slope;
    const double L2 = s.inv.dxx - 2.0 * s.inv.dxy + s.inv.dyy;

    d.start_drift = b_eps(m, trunc, x) * (-s.nu_star * L1 + s.tail1.value);
    double diffusion = -s.d2nu_star * L1 * L1 + s.tail11.value - s.nu_star * L2;
    if (opts.diffusion_cross_term) diffusion += -2.0 * s.d1nu_star * L1;
    d.start_diffusion = 0.5 * sx2 * diffusion;
    d.end_drift = (b_eps(m, trunc, q) - sq * m.sigma.deriv(1, q)) * s.nu_star * s.inv.dy;
    d.end_diffusion = -0.5 * sq * sq * (s.d2nu_star * s.inv.dy * s.inv.dy + s.nu_star * s.inv.dyy);
    d.error = std::fabs(b_eps(m, trunc, x)) * s.tail1.abs_error + 0.5 * sx2 * s.tail11.abs_error;
    return d;
}

// Outer marks at which the inner lower limit of the two-large-jump integral crosses +-eps or
// a breakpoint of the intensity; the inner integral has a kink there.
std::vector<double> two_jump_breakpoints(const Setup& s) {
    std::vector<double> levels{-s.eps, s.eps};
    levels.insert(levels.end(), s.bp.begin(), s.bp.end());
    std::vector<double> out = s.bp;
    out.push_back(s.inv.r);
    for (double c : levels) {
        if (s.m.gamma.is_identity) {
            out.push_back(s.y - c);
            continue;
        }
        try {
            auto lower = [&](double r1) {
                const double g = s.m.gamma.value(s.x, r1);
                return -gamma_inverse(s.m, s.x + g, s.y - g);
            };
            roots::RootOptions ro;
            ro.residual_tol = 1e-10;
            out.push_back(roots::solve_increasing(lower, -c, s.inv.r, ro));
        } catch (const Error&) {
            // No crossing: the inner integral is smooth in the outer mark at this level.
        }
    }
    return out;
}

JTermParts j_parts_from(const Setup& s, const QuadratureResult& p1v) {
    JTermParts j;
    if (s.m.nu.vanishes) return j;
    const ModelSpec& m = s.m;
    const double x = s.x;
    const double y = s.y;
    const double eps = s.eps;
    const double rstar = s.inv.r;
    const double q = x + y;
    const double grad = -s.nu_star * s.lead_slope + s.tail1.value;  // d/dz of the tail at z = x
    const auto& h = m.nu.h;

    // Small jump from x to z = x + gamma(x, r), then the tail from z:
    // G(z) - G(x) - gamma(x, r) G'(x) with G(z) = integral over {gamma(z, .) >= q - z} of nu_eps(z, .).
    auto bracket1 = [&](double r) {
        const double g = m.gamma.value(x, r);
        const double z = x + g;
        const double lower = gamma_inverse(m, z, y - g);
        double diff = quad::integrate_interval([&](double r1) { return s.nu_eps(z, r1); }, lower, rstar, s.bracket).value;
        if (!m.nu.state_free)
            diff += tail_eps([&](double r1) { return m.nu.value(z, r1) - m.nu.value(x, r1); }, rstar, eps, s.bracket, s.bp)
                        .value;
        return (diff - g * grad) * s.ratio_small(x, r);
    };
    QuadratureResult t1 = small_jump_bracket(bracket1, h, eps, s.tol.scaled(0.2));
    j.small_then_large = t1.value;

    // Large jump to a state r1 just below q, then a small jump r across q.
    auto psi = [&](double r1) {
        const double mark = gamma_inverse(m, x, r1 - x);
        return s.nu_eps(x, mark) / m.gamma.d2(x, mark);
    };
    const double psi_q = s.nu_star * s.inv.dy;
    auto bracket2 = [&](double r) {
        const double start = gamma_bar(m, q, r);
        const double end_ratio = s.ratio_small(q, r);
        double v = quad::integrate_interval([&](double r1) { return psi(r1) * s.ratio_small(r1, r) - psi_q * end_ratio; },
                                            start, q, s.bracket)
                       .value;
        v += psi_q * end_ratio * (m.gamma.value(start, r) - m.gamma.value(q, r));
        return v;
    };
    QuadratureResult t2 = small_jump_bracket(bracket2, h, eps, s.tol.scaled(0.2));
    j.large_then_small = t2.value;

    // Two large jumps; the second is governed by the intensity at the post-jump state.
    auto inner_two = [&](double r1) {
        const double v1 = m.nu.value(x, r1);
        if (v1 == 0.0) return 0.0;
        const double g = m.gamma.value(x, r1);
        const double z = x + g;
        const double lower = gamma_inverse(m, z, y - g);
        return v1 * tail_eps([&](double r2) { return m.nu.value(z, r2); }, lower, eps, s.inner, s.bp).value;
    };
    QuadratureResult t3 = large_jumps(inner_two, eps, s.tol.scaled(0.2), two_jump_breakpoints(s));
    j.two_large = t3.value;

    auto landing = [&](double r1) {
        const double v1 = m.nu.value(x, r1);
        if (v1 == 0.0) return 0.0;
        return v1 * s.large_mass(x + m.gamma.value(x, r1)).value;
    };
    QuadratureResult t4 = tail_eps(landing, rstar, eps, s.tol.scaled(0.2), s.bp);
    j.landing_mass = -t4.value;

    QuadratureResult mass = s.large_mass(x);
    j.product = -p1v.value * mass.value;
    j.error = t1.abs_error + t2.abs_error + t3.abs_error + t4.abs_error + p1v.abs_error * mass.value +
              mass.abs_error * p1v.value;
    return j;
}

ExpansionResult assemble(double t, double eps, double p1v, double d, double j, double err) {
    if (t < 0.0) throw DomainError("t must be nonnegative");
    ExpansionResult out;
    out.t = t;
    out.eps = eps;
    out.p1 = p1v;
    out.d_term = d;
    out.j_term = j;
    out.p2 = d + j;
    out.order1 = t * p1v;
    out.order2 = t * p1v + 0.5 * t * t * out.p2;
    out.order2_clamped = std::clamp(out.order2, 0.0, 1.0);
    out.quadrature_error = err;
    return out;
}

}  // namespace

DTermParts d_term_parts(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                        const ExpansionOptions& opts) {
    require_compatible(model, trunc, x, y);
    if (model.nu.vanishes) return {};
    Setup s(model, trunc, x, y, opts);
    return d_parts_from(s, opts);
}

JTermParts j_term_parts(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                        const ExpansionOptions& opts) {
    require_compatible(model, trunc, x, y);
    if (model.nu.vanishes) return {};
    Setup s(model, trunc, x, y, opts);
    return j_parts_from(s, p1(model, trunc, x, y, opts));
}

double d_term(const ModelSpec& model, const TruncationConfig& trunc, double x, double y, const ExpansionOptions& opts) {
    return d_term_parts(model, trunc, x, y, opts).sum();
}

double j_term(const ModelSpec& model, const TruncationConfig& trunc, double x, double y, const ExpansionOptions& opts) {
    return j_term_parts(model, trunc, x, y, opts).sum();
}

ExpansionResult tail_expansion(const ModelSpec& model, const TruncationConfig& trunc, double x, double y, double t,
                               const ExpansionOptions& opts) {
    require_compatible(model, trunc, x, y);
    if (t < 0.0) throw DomainError("t must be nonnegative");
    if (model.nu.vanishes) return assemble(t, trunc.eps, 0.0, 0.0, 0.0, 0.0);
    Setup s(model, trunc, x, y, opts);
    const QuadratureResult p = p1(model, trunc, x, y, opts);
    const DTermParts d = d_parts_from(s, opts);
    const JTermParts j = j_parts_from(s, p);
    return assemble(t, trunc.eps, p.value, d.sum(), j.sum(), p.abs_error + d.error + j.error);
}

ExpansionResult tail_expansion_identity_r(const ModelSpec& model, const TruncationConfig& trunc, double x, double y,
                                          double t, const ExpansionOptions& opts) {
    if (!model.gamma.is_identity) throw ConfigurationError("tail_expansion_identity_r needs gamma(x, r) = r");
    if (!(y > 0.0)) throw DomainError("the threshold y must be positive");
    if (!(trunc.eps > 0.0 && trunc.eps < 0.5 * y)) throw ConfigurationError("truncation eps is too large for y");
    if (t < 0.0) throw DomainError("t must be nonnegative");
    if (model.nu.vanishes) return assemble(t, trunc.eps, 0.0, 0.0, 0.0, 0.0);

    const JumpIntensity& nu = model.nu;
    const double eps = trunc.eps;
    const Tolerance tol = opts.tol;
    const Tolerance inner = opts.tol.scaled(0.01);
    const Tolerance bracket{1e-15, 1e-12};
    const auto& bp = nu.breakpoints;
    const double q = x + y;
    double err = 0.0;
    auto track = [&](const QuadratureResult& r) {
        err += r.abs_error;
        return r.value;
    };
    auto upper_tail = [&](const quad::Integrand& f, double a, Tolerance tl) {
        return quad::integrate_range(f, a, inf, tl, bp);
    };
    auto mass_eps = [&](double z) {
        return quad::integrate_range([&](double r) { return nu.value(z, r); }, -inf, -eps, inner, bp).value +
               quad::integrate_range([&](double r) { return nu.value(z, r); }, eps, inf, inner, bp).value;
    };
    auto ratio_small = [&](double z, double r) {
        if (std::fabs(r) > eps) return 0.0;
        const double hr = nu.h(r);
        return hr > 0.0 ? nu.value(z, r) / hr : 0.0;
    };

    const double p1v = track(upper_tail([&](double r) { return nu.value(x, r); }, y, tol));
    const double nu_y = nu.value(x, y);
    const double d2nu_y = nu.d2(x, y);
    const double i1 = track(upper_tail([&](double r) { return nu.d1(x, r); }, y, inner));
    const double i2 = track(upper_tail([&](double r) { return nu.d11(x, r); }, y, inner));
    const double sx = model.sigma(x);
    const double sq = model.sigma(q);

    double start_diffusion = -d2nu_y + i2;
    if (opts.diffusion_cross_term) start_diffusion += 2.0 * nu.d1(x, y);
    const double d = b_eps(model, trunc, x) * (nu_y + i1) + 0.5 * sx * sx * start_diffusion +
                     (b_eps(model, trunc, q) - sq * model.sigma.deriv(1, q)) * nu_y - 0.5 * sq * sq * d2nu_y;

    // Small jump r, then the tail from x + r.
    auto bracket1 = [&](double r) {
        double diff = quad::integrate_interval([&](double r1) { return nu.value(x + r, r1); }, y - r, y, bracket).value;
        diff += upper_tail([&](double r1) { return nu.value(x + r, r1) - nu.value(x, r1); }, y, bracket).value;
        return (diff - r * (nu_y + i1)) * ratio_small(x, r);
    };
    const double j1 = track(small_jump_bracket(bracket1, nu.h, eps, tol.scaled(0.2)));

    // Large jump r1 to just below the threshold, then a small jump r across it.
    auto bracket2 = [&](double r) {
        const double end_ratio = ratio_small(q, r);
        return quad::integrate_interval(
                   [&](double r1) { return nu.value(x, r1) * ratio_small(x + r1, r) - nu_y * end_ratio; }, y - r, y,
                   bracket)
            .value;
    };
    const double j2 = track(small_jump_bracket(bracket2, nu.h, eps, tol.scaled(0.2)));

    // Two large jumps, the second at the post-jump state.
    auto two = [&](double r1) {
        const double v1 = nu.value(x, r1);
        if (v1 == 0.0) return 0.0;
        const double lower = y - r1;
        auto f = [&](double r2) { return nu.value(x + r1, r2); };
        double v = 0.0;
        if (lower >= eps) {
            v = upper_tail(f, lower, inner).value;
        } else {
            v = upper_tail(f, eps, inner).value;
            if (lower < -eps) v += quad::integrate_range(f, lower, -eps, inner, bp).value;
        }
        return v1 * v;
    };
    std::vector<double> outer_bp = bp;
    outer_bp.insert(outer_bp.end(), {y - eps, y + eps, y});
    for (double b : bp) outer_bp.push_back(y - b);
    const double j3 = track(quad::integrate_range(two, -inf, -eps, tol.scaled(0.2), outer_bp)) +
                      track(quad::integrate_range(two, eps, inf, tol.scaled(0.2), outer_bp));

    const double j4 = -track(upper_tail([&](double r1) { return nu.value(x, r1) * mass_eps(x + r1); }, y, tol.scaled(0.2)));
    const double j5 = -p1v * mass_eps(x);

    return assemble(t, eps, p1v, d, j1 + j2 + j3 + j4 + j5, err);
}

double drift_sensitivity(const ModelSpec& model, double x, double y, Tolerance tol) {
    if (!(y > 0.0)) throw DomainError("the threshold y must be positive");
    if (model.nu.vanishes) return 0.0;
    double tail = 0.0;
    if (!model.nu.state_free)
        tail = quad::integrate_range([&](double r) { return model.nu.d1(x, r); }, y, inf, tol, model.nu.breakpoints).value;
    return 2.0 * model.nu.value(x, y) + tail;
}

double vol_sensitivity(const ModelSpec& model, double x, double y, VolVariant variant, Tolerance tol) {
    if (!(y > 0.0)) throw DomainError("the threshold y must be positive");
    if (model.nu.vanishes) return 0.0;
    double tail = 0.0;
    if (!model.nu.state_free)
        tail = quad::integrate_range([&](double r) { return model.nu.d11(x, r); }, y, inf, tol, model.nu.breakpoints).value;
    if (variant == VolVariant::constant_sigma) return -model.nu.d2(x, y) + 0.5 * tail;
    // -d/dy [nu(x, y) (sigma^2(x) + sigma^2(x + y)) / 2] + sigma^2(x)/2 * tail
    const double sx = model.sigma(x);
    const double sq = model.sigma(x + y);
    const double avg = 0.5 * (sx * sx + sq * sq);
    return -(model.nu.d2(x, y) * avg + model.nu.value(x, y) * sq * model.sigma.deriv(1, x + y)) + 0.5 * sx * sx * tail;
}

}  // namespace jumptail
