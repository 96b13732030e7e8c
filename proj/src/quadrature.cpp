#include "jumptail/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "jumptail/errors.hpp"

namespace jumptail::quad {

double Tolerance::target(double value) const { return std::max(abs, rel * std::fabs(value)); }

QuadratureResult& QuadratureResult::operator+=(const QuadratureResult& other) {
    value += other.value;
    abs_error += other.abs_error;
    evaluations += other.evaluations;
    return *this;
}

QuadratureResult& QuadratureResult::operator-=(const QuadratureResult& other) {
    value -= other.value;
    abs_error += other.abs_error;
    evaluations += other.evaluations;
    return *this;
}

QuadratureResult operator+(QuadratureResult a, const QuadratureResult& b) { return a += b; }
QuadratureResult operator-(QuadratureResult a, const QuadratureResult& b) { return a -= b; }
QuadratureResult operator*(double s, QuadratureResult a) {
    a.value *= s;
    a.abs_error *= std::fabs(s);
    return a;
}

namespace {

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

struct Rule {
    std::array<double, 11> x{};
    std::array<double, 11> wk{};
    std::array<double, 5> wg{};
};

const Rule& gk21() {
    static const Rule rule = [] {
        using boost::math::quadrature::gauss;
        using boost::math::quadrature::gauss_kronrod;
        Rule r;
        const auto& x = gauss_kronrod<double, 21>::abscissa();
        const auto& wk = gauss_kronrod<double, 21>::weights();
        const auto& wg = gauss<double, 10>::weights();
        std::copy(x.begin(), x.end(), r.x.begin());
        std::copy(wk.begin(), wk.end(), r.wk.begin());
        std::copy(wg.begin(), wg.end(), r.wg.begin());
        return r;
    }();
    return rule;
}

double checked(const Integrand& f, double r) {
    const double v = f(r);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite integrand value at r = " << r;
        throw IntegrationError(os.str(), std::numeric_limits<double>::quiet_NaN(), inf);
    }
    return v;
}

// One GK21 panel. The 10-point Gauss nodes sit at the odd Kronrod indices.
Panel apply_rule(const Integrand& f, double a, double b) {
    const Rule& rule = gk21();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = checked(f, mid);
    double kronrod = f0 * rule.wk[0];
    double gauss = 0.0;
    double l1 = std::fabs(kronrod);
    for (std::size_t i = 1; i < rule.x.size(); ++i) {
        const double fp = checked(f, mid + half * rule.x[i]);
        const double fm = checked(f, mid - half * rule.x[i]);
        kronrod += (fp + fm) * rule.wk[i];
        l1 += (std::fabs(fp) + std::fabs(fm)) * rule.wk[i];
        if (i % 2 == 1) gauss += (fp + fm) * rule.wg[i / 2];
    }
    const double value = kronrod * half;
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * l1 * std::fabs(half);
    const double error = std::max(std::fabs((kronrod - gauss) * half), roundoff);
    return {a, b, value, error};
}

constexpr std::size_t evals_per_panel = 21;

}  // namespace

QuadratureResult integrate_interval(const Integrand& f, double a, double b, Tolerance tol,
                                    int max_subdivisions) {
    if (a == b) return {};
    if (b < a) {
        QuadratureResult r = integrate_interval(f, b, a, tol, max_subdivisions);
        r.value = -r.value;
        return r;
    }
    std::priority_queue<Panel> heap;
    Panel first = apply_rule(f, a, b);
    heap.push(first);
    double total = first.value;
    double total_error = first.error;
    std::size_t evaluations = evals_per_panel;
    int subdivisions = 0;
    // Panels too narrow to bisect in double precision are retired with their error kept.
    double retired_value = 0.0;
    double retired_error = 0.0;

    while (total_error > tol.target(total)) {
        if (heap.empty() || subdivisions >= max_subdivisions) {
            std::ostringstream os;
            os << "adaptive quadrature on [" << a << ", " << b << "] stopped after " << subdivisions
               << " subdivisions with error " << total_error << " (target " << tol.target(total) << ")";
            throw IntegrationError(os.str(), total, total_error);
        }
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) ||
            (worst.b - worst.a) < 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(mid)) {
            retired_value += worst.value;
            retired_error += worst.error;
            continue;
        }
        Panel left = apply_rule(f, worst.a, mid);
        Panel right = apply_rule(f, mid, worst.b);
        evaluations += 2 * evals_per_panel;
        ++subdivisions;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from the panels so the reported value carries no update drift.
    double value = retired_value;
    double error = retired_error;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    return {value, error, evaluations};
}

QuadratureResult integrate_semi_infinite(const Integrand& f, double a, Tolerance tol) {
    const double scale = std::max(std::fabs(a), 0.01);
    auto g = [&](double s) {
        const double one_minus = 1.0 - s;
        const double r = a + scale * s / one_minus;
        if (!std::isfinite(r)) return 0.0;
        const double v = f(r);
        if (v == 0.0) return 0.0;
        return v * scale / (one_minus * one_minus);
    };
    return integrate_interval(g, 0.0, 1.0, tol);
}

QuadratureResult integrate_semi_infinite_left(const Integrand& f, double b, Tolerance tol) {
    return integrate_semi_infinite([&](double r) { return f(-r); }, -b, tol);
}

QuadratureResult integrate_range(const Integrand& f, double a, double b, Tolerance tol,
                                 const std::vector<double>& breakpoints) {
    if (a == b) return {};
    if (b < a) {
        QuadratureResult r = integrate_range(f, b, a, tol, breakpoints);
        r.value = -r.value;
        return r;
    }
    std::vector<double> cuts{a};
    std::vector<double> inner;
    for (double p : breakpoints)
        if (p > a && p < b && std::isfinite(p)) inner.push_back(p);
    std::sort(inner.begin(), inner.end());
    inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
    cuts.insert(cuts.end(), inner.begin(), inner.end());
    cuts.push_back(b);

    // Infinite ends need a finite anchor to map from.
    if (std::isinf(a) && std::isinf(b) && cuts.size() == 2) cuts.insert(cuts.begin() + 1, 0.0);

    const std::size_t pieces = cuts.size() - 1;
    const Tolerance piece_tol{tol.abs / static_cast<double>(pieces), tol.rel};
    QuadratureResult total;
    for (std::size_t i = 0; i < pieces; ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (std::isinf(lo))
            total += integrate_semi_infinite_left(f, hi, piece_tol);
        else if (std::isinf(hi))
            total += integrate_semi_infinite(f, lo, piece_tol);
        else
            total += integrate_interval(f, lo, hi, piece_tol);
    }
    return total;
}

namespace {

constexpr int growth_limit = 8;
constexpr int max_shells = 1100;

// Accumulates shell integrals until a shell is negligible; detects monotone growth.
template <class ShellFn>
QuadratureResult accumulate_shells(ShellFn shell, Tolerance tol, const char* where) {
    QuadratureResult total;
    double previous = -1.0;
    int growing = 0;
    int quiet = 0;
    for (int k = 0; k < max_shells; ++k) {
        QuadratureResult piece = shell(k);
        total += piece;
        const double size = std::fabs(piece.value);
        growing = (previous >= 0.0 && size > previous) ? growing + 1 : 0;
        if (growing >= growth_limit) {
            std::ostringstream os;
            os << "integral diverges: " << growth_limit << " successive growing shells " << where;
            throw DivergenceError(os.str());
        }
        previous = size;
        quiet = (size < 0.1 * tol.target(total.value)) ? quiet + 1 : 0;
        if (quiet >= 2) return total;
    }
    throw IntegrationError(std::string("shell accumulation did not settle ") + where, total.value,
                           total.abs_error);
}

}  // namespace

QuadratureResult integrate_to_origin(const Integrand& f, double end, Tolerance tol) {
    if (end == 0.0) return {};
    const Tolerance shell_tol = tol.scaled(0.1);
    return accumulate_shells(
        [&](int k) {
            const double outer = std::ldexp(end, -k);
            return integrate_interval(f, 0.5 * outer, outer, shell_tol);
        },
        tol, "toward the origin");
}

QuadratureResult integrate_small_jumps(const Integrand& f, double eps, Tolerance tol) {
    if (!(eps > 0.0)) return {};
    const Tolerance shell_tol = tol.scaled(0.1);
    return accumulate_shells(
        [&](int k) {
            const double hi = std::ldexp(eps, -k);
            const double lo = 0.5 * hi;
            return integrate_interval(f, lo, hi, shell_tol) + integrate_interval(f, -hi, -lo, shell_tol);
        },
        tol, "toward the origin");
}

QuadratureResult integrate_blocks_to_infinity(const Integrand& f, double a, Tolerance tol) {
    if (!(a > 0.0)) throw DomainError("integrate_blocks_to_infinity needs a > 0");
    const Tolerance block_tol = tol.scaled(0.1);
    return accumulate_shells(
        [&](int k) {
            const double lo = std::ldexp(a, k);
            if (!std::isfinite(2.0 * lo)) throw DivergenceError("block accumulation overflowed");
            return integrate_interval(f, lo, 2.0 * lo, block_tol);
        },
        tol, "toward infinity");
}

QuadratureResult integrate_punctured(const Integrand& f, double eps, Tolerance tol,
                                     const std::vector<double>& breakpoints) {
    if (eps < 0.0) throw DomainError("integrate_punctured needs eps >= 0");
    const double edge = eps > 0.0 ? eps : 1.0;
    std::vector<double> neg, pos;
    for (double p : breakpoints) {
        if (p < -edge) neg.push_back(p);
        if (p > edge) pos.push_back(p);
    }
    QuadratureResult total = integrate_range(f, -inf, -edge, tol.scaled(0.5), neg) +
                             integrate_range(f, edge, inf, tol.scaled(0.5), pos);
    if (eps == 0.0) total += integrate_small_jumps(f, 1.0, tol.scaled(0.5));
    return total;
}

QuadratureResult integrate_double(const Integrand2& f, double a, double b,
                                  const std::function<double(double)>& inner_lo,
                                  const std::function<double(double)>& inner_hi, Tolerance tol,
                                  const std::vector<double>& outer_breakpoints,
                                  const std::vector<double>& inner_breakpoints) {
    std::size_t outer_pieces = 1;
    for (double p : outer_breakpoints)
        if (p > std::min(a, b) && p < std::max(a, b)) ++outer_pieces;
    const Tolerance inner_tol = tol.scaled(1.0 / (10.0 * static_cast<double>(outer_pieces)));
    std::size_t inner_evaluations = 0;
    double worst_inner_error = 0.0;
    auto outer = [&](double r) {
        QuadratureResult in = integrate_range([&](double s) { return f(r, s); }, inner_lo(r),
                                              inner_hi(r), inner_tol, inner_breakpoints);
        inner_evaluations += in.evaluations;
        worst_inner_error = std::max(worst_inner_error, in.abs_error);
        return in.value;
    };
    QuadratureResult result = integrate_range(outer, a, b, tol, outer_breakpoints);
    const double width = std::isfinite(b - a) ? std::fabs(b - a) : 1.0;
    result.abs_error += worst_inner_error * width;
    result.evaluations += inner_evaluations;
    return result;
}

}  // namespace jumptail::quad
