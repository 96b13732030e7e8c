#include <doctest.h>

#include <cmath>
#include <random>

#include "jumptail/equivalence.hpp"
#include "jumptail/errors.hpp"
#include "jumptail/models.hpp"
#include "jumptail/roots.hpp"

using namespace jumptail;

namespace {
constexpr double kAlpha = 1.01;

ModelSpec state_free() {
    models::LocalStableParams p;
    p.intensity_base = 1.0;
    p.intensity_slope = 0.0;
    return models::local_stable(p);
}

std::vector<double> x_grid() {
    std::vector<double> x;
    for (int i = 0; i <= 10; ++i) x.push_back(-5.0 + i);
    return x;
}
}  // namespace

TEST_CASE("psi on the power-law density") {
    const ReparamContext ctx(models::model_a(), 0.1);
    const double want = -(std::pow(0.05, -kAlpha) - std::pow(0.1, -kAlpha)) / kAlpha;
    CHECK(ctx.psi(0.05) == doctest::Approx(want).epsilon(1e-13));
    CHECK(ctx.psi(-0.05) == doctest::Approx(-want).epsilon(1e-13));
    CHECK(std::fabs(ctx.psi(0.1 * (1.0 - 1e-12))) < 1e-9);
    CHECK(ctx.psi(0.1 * (1.0 - 1e-12)) <= 0.0);
    CHECK_THROWS_AS(ctx.psi(0.1), DomainError);
    CHECK_THROWS_AS(ctx.psi(0.0), DomainError);
    CHECK(ctx.psi_inverse(ctx.psi(0.037)) == doctest::Approx(0.037).epsilon(1e-12));
}

TEST_CASE("psi bar for a proportional intensity") {
    const ReparamContext ctx(models::model_a(), 0.1);
    for (double w : {0.09, 0.05, 0.001, -0.02}) CHECK(ctx.psi_bar(0.0, w) == doctest::Approx(0.75 * ctx.psi(w)).epsilon(1e-12));
    for (double v : {-50.0, -1.0, 3.0}) CHECK(ctx.psi_bar_inverse(0.0, v) == doctest::Approx(ctx.psi_inverse(v / 0.75)).epsilon(1e-11));
    // Large |v| pushes the mark toward 0 from the matching side.
    const double tiny = ctx.psi_bar_inverse(0.0, -1e12);
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-8);
    CHECK(ctx.psi_bar_inverse(0.0, 1e12) < 0.0);
}

TEST_CASE("state-free intensity: every map is the identity") {
    const ReparamContext ctx(state_free(), 0.1);
    for (double x : {-2.0, 0.0, 3.0}) {
        for (double w : {-0.07, -0.001, 0.004, 0.06}) {
            CHECK(ctx.psi_bar(x, w) == doctest::Approx(ctx.psi(w)).epsilon(1e-13));
            CHECK(ctx.psi_bar_inverse(x, ctx.psi(w)) == doctest::Approx(w).epsilon(1e-11));
            CHECK(ctx.delta(x, w) == doctest::Approx(w).epsilon(1e-11));
            CHECK(ctx.delta_inverse(x, w) == doctest::Approx(w).epsilon(1e-11));
        }
    }
    double worst = 0.0;
    for (double x : x_grid())
        for (const auto& [a, b] : kernel_interval_family(0.1)) worst = std::max(worst, kernel_equivalence_error(ctx, x, a, b));
    CHECK(worst < 1e-10);
    const auto rep = delta_bound_check(ctx, x_grid(), {0.09, 0.01, -0.05});
    CHECK(rep.passed());
    CHECK(rep.k1 < 1e-6);
}

TEST_CASE("delta for model A at the origin") {
    const ReparamContext ctx(models::model_a(), 0.1);
    CHECK(ctx.delta(0.0, 0.0) == 0.0);
    CHECK(ctx.delta_inverse(0.0, 0.0) == 0.0);
    // Closed forms: psi(w) = -(w^-a - eps^-a)/a, so psi^-1(v) = (eps^-a - a v)^(-1/a).
    const double v = ctx.psi(0.05) / 0.75;
    const double want = std::pow(std::pow(0.1, -kAlpha) - kAlpha * v, -1.0 / kAlpha);
    CHECK(ctx.delta(0.0, 0.05) == doctest::Approx(want).epsilon(1e-12));
    CHECK(want == doctest::Approx(0.042880708328788).epsilon(1e-12));
}

TEST_CASE("round trips and monotonicity") {
    models::LocalStableParams p;
    p.gamma_tanh = 0.2;
    for (const auto& model : {models::model_a(), models::local_stable(p)}) {
        const ReparamContext ctx(model, 0.05);
        std::mt19937_64 gen(5);
        std::uniform_real_distribution<double> ux(-4.0, 4.0), uw(-0.049, 0.049);
        for (int i = 0; i < 40; ++i) {
            const double x = ux(gen), w = uw(gen);
            if (w == 0.0) continue;
            CHECK(std::fabs(ctx.psi_bar_inverse(x, ctx.psi_bar(x, w)) - w) < 1e-9);
            const double d = ctx.delta(x, w);
            CHECK(std::fabs(ctx.delta(x, ctx.delta_inverse(x, d)) - d) < 1e-9);
            // Range containment.
            CHECK(std::fabs(ctx.psi_bar_inverse(x, ctx.psi(w))) <= std::fabs(w) * (1.0 + 1e-12));
        }
        for (double x : {-3.0, 0.5}) {
            double prev = -INFINITY;
            for (double w = -0.0495; w < 0.05; w += 0.0045) {
                const double d = ctx.delta(x, w);
                CHECK(d > prev);
                prev = d;
            }
        }
    }
}

TEST_CASE("kernel equivalence for model A") {
    for (double eps : {0.1, 0.01}) {
        const ReparamContext ctx(models::model_a(), eps);
        double worst = 0.0;
        for (double x : x_grid())
            for (const auto& [a, b] : kernel_interval_family(eps)) worst = std::max(worst, kernel_equivalence_error(ctx, x, a, b));
        CHECK(worst <= 1e-7);
    }
    const ReparamContext ctx(models::model_a(), 0.1);
    CHECK(kernel_equivalence_error(ctx, 0.0, 0.02, 0.05) <= 1e-8);
    CHECK(kernel_equivalence_error(ctx, 0.0, 0.5, 0.9) == 0.0);
    CHECK_THROWS_AS(kernel_equivalence_error(ctx, 0.0, -0.01, 0.02), DomainError);
    CHECK(kernel_interval_family(0.1).size() == 20);
}

TEST_CASE("regularity proxies for model A and a steep state dependence") {
    const ReparamContext ctx(models::model_a(), 0.1);
    std::vector<double> ws;
    for (double f : {0.9, 0.5, 0.1, 0.01}) {
        ws.push_back(f * 0.1);
        ws.push_back(-f * 0.1);
    }
    const auto rep = delta_bound_check(ctx, x_grid(), ws);
    CHECK(rep.passed());
    CHECK(rep.min_one_plus_d1 > 0.9);
    CHECK(std::isfinite(rep.k0));
    CHECK(std::isfinite(rep.k2));

    // A sharp state factor inflates the fitted constant without failing the check.
    models::LocalStableParams p;
    p.intensity_base = 0.5;
    p.intensity_slope = 0.3;
    const ReparamContext steep(models::local_stable(p), 0.1);
    const auto rs = delta_bound_check(steep, x_grid(), ws);
    CHECK(rs.k1 > rep.k1);
    CHECK(rs.all_finite);
}
