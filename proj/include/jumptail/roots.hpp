#pragma once

#include <functional>

namespace jumptail::roots {

struct RootOptions {
    double residual_tol = 1e-12;  // relative to max(1, |target|)
    int max_iterations = 200;
    double initial_step = 1.0;
    int max_expansions = 80;
};

// Solves f(z) = target for an increasing f on the whole real line. The bracket is grown
// geometrically from `start`, then refined by a false-position/bisection hybrid.
double solve_increasing(const std::function<double(double)>& f, double target, double start = 0.0,
                        RootOptions options = {});

// Solves f(z) = target for an increasing f on the open interval (lo, hi), given that
// f(lo+) < target < f(hi-). The interval ends are never evaluated.
double solve_increasing_on(const std::function<double(double)>& f, double target, double lo, double hi,
                           RootOptions options = {});

}  // namespace jumptail::roots
