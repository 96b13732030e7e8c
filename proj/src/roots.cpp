#include "jumptail/roots.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "jumptail/errors.hpp"

namespace jumptail::roots {

namespace {

// Illinois false position with a bisection step whenever the bracket fails to halve.
double refine(const std::function<double(double)>& f, double target, double lo, double flo, double hi,
              double fhi, const RootOptions& options) {
    const double tol = options.residual_tol * std::max(1.0, std::fabs(target));
    double glo = flo - target;
    double ghi = fhi - target;
    if (std::fabs(glo) <= tol) return lo;
    if (std::fabs(ghi) <= tol) return hi;
    int side = 0;
    double width = hi - lo;
    for (int it = 0; it < options.max_iterations; ++it) {
        double z = hi - ghi * (hi - lo) / (ghi - glo);
        if (!(z > lo && z < hi) || (it % 3 == 2 && (hi - lo) > 0.5 * width)) z = 0.5 * (lo + hi);
        if (it % 3 == 2) width = hi - lo;
        const double g = f(z) - target;
        if (!std::isfinite(g)) {
            std::ostringstream os;
            os << "root search hit a non-finite value at " << z;
            throw RootFindError(os.str());
        }
        if (std::fabs(g) <= tol) return z;
        if (g < 0.0) {
            lo = z;
            glo = g;
            if (side == -1) ghi *= 0.5;
            side = -1;
        } else {
            hi = z;
            ghi = g;
            if (side == 1) glo *= 0.5;
            side = 1;
        }
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) return std::fabs(glo) < std::fabs(ghi) ? lo : hi;
    }
    std::ostringstream os;
    os << "root search did not converge within " << options.max_iterations << " iterations";
    throw RootFindError(os.str());
}

}  // namespace

double solve_increasing(const std::function<double(double)>& f, double target, double start,
                        RootOptions options) {
    double f0 = f(start);
    if (!std::isfinite(f0)) throw RootFindError("non-finite function value at the bracket start");
    if (std::fabs(f0 - target) <= options.residual_tol * std::max(1.0, std::fabs(target))) return start;
    const double direction = f0 < target ? 1.0 : -1.0;
    double step = options.initial_step;
    double near = start;
    double fnear = f0;
    for (int k = 0; k < options.max_expansions; ++k) {
        const double far = start + direction * step;
        const double ffar = f(far);
        if (!std::isfinite(ffar)) throw RootFindError("non-finite function value while bracketing");
        if ((ffar - target) * direction >= 0.0) {
            if (direction > 0.0) return refine(f, target, near, fnear, far, ffar, options);
            return refine(f, target, far, ffar, near, fnear, options);
        }
        near = far;
        fnear = ffar;
        step *= 2.0;
    }
    throw RootFindError("bracket expansion exceeded its cap");
}

double solve_increasing_on(const std::function<double(double)>& f, double target, double lo, double hi,
                           RootOptions options) {
    // Shrink toward the ends geometrically until the target is bracketed.
    double a = lo + 0.5 * (hi - lo);
    double fa = f(a);
    double b = a;
    double fb = fa;
    if (fa < target) {
        double gap = hi - a;
        for (int k = 0; k < 2000 && fb < target; ++k) {
            a = b;
            fa = fb;
            gap *= 0.5;
            b = hi - gap;
            if (!(b < hi)) throw RootFindError("target not reached before the upper end");
            fb = f(b);
        }
        if (fb < target) throw RootFindError("target not reached before the upper end");
    } else {
        double gap = a - lo;
        for (int k = 0; k < 2000 && fa > target; ++k) {
            b = a;
            fb = fa;
            gap *= 0.5;
            a = lo + gap;
            if (!(a > lo)) throw RootFindError("target not reached before the lower end");
            fa = f(a);
        }
        if (fa > target) throw RootFindError("target not reached before the lower end");
    }
    return refine(f, target, a, fa, b, fb, options);
}

}  // namespace jumptail::roots
