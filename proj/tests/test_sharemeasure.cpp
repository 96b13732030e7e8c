#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "jumptail/errors.hpp"
#include "jumptail/models.hpp"
#include "jumptail/sharemeasure.hpp"
#include "oracles.hpp"

using namespace jumptail;

namespace {
double tempered_shape(double r) { return std::exp(-2.0 * std::fabs(r)) * std::pow(std::fabs(r), -2.01); }
// exp(r) times the shape for r > 0, without forming exp(r) itself.
double tilted_shape(double r) { return std::exp(-r) * std::pow(r, -2.01); }

double semi_infinite(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::exp_sinh<double> es;
    return es.integrate([&](double s) { return f(a + s); }, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

// A jump model whose jumps never move the state.
ModelSpec frozen_jumps(double sigma) {
    ModelSpec m = models::model_b(sigma);
    m.gamma = JumpTransform::zero();
    m.b = SmoothField::constant(-0.5 * sigma * sigma);
    return m;
}
}  // namespace

TEST_CASE("calibrated tempered model satisfies the martingale restriction") {
    const auto b = models::model_b();
    for (int i = 0; i <= 20; ++i) {
        const double x = -2.0 + 0.2 * i;
        CHECK(std::fabs(martingale_residual(b, x)) <= 1e-9);
        // Independent evaluation of the same restriction.
        CHECK(std::fabs(oracle::tempered_martingale_residual(b.b(x), 0.2, x)) <= 1e-10);
    }
    CHECK(b.b(0.0) == doctest::Approx(-0.417210547812875).epsilon(1e-10));
}

TEST_CASE("drift calibration on closed-form cases") {
    const auto none = calibrate_drift(SmoothField::constant(0.3), JumpTransform::identity(), JumpIntensity::none());
    CHECK(none(1.7) == doctest::Approx(-0.045).epsilon(1e-14));

    // Uniform jumps on +-[1, 2] at rate 1: the compensator is
    // 1/2 (e^2 - e - 1) + 1/2 (e^-1 - e^-2 - 1).
    const auto cp = models::compound_uniform(1.0, 1.0, 2.0, 0.0, 0.2);
    const auto b = calibrate_drift(cp.sigma, cp.gamma, cp.nu);
    const double e = std::exp(1.0);
    const double integral = 0.5 * (e * e - e - 1.0) + 0.5 * (1.0 / e - 1.0 / (e * e) - 1.0);
    CHECK(b(0.0) == doctest::Approx(-0.02 - integral).epsilon(1e-10));
}

TEST_CASE("frozen jumps: zero residual and an unchanged intensity under the share measure") {
    const auto m = frozen_jumps(0.2);
    CHECK(std::fabs(martingale_residual(m, 0.5)) <= 1e-15);
    const auto s = share_transform(m);
    for (double r : {-1.0, -0.01, 0.3, 2.0}) CHECK(s.nu(0.4, r) == doctest::Approx(m.nu(0.4, r)).epsilon(1e-15));
    CHECK(s.b(0.4) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("heavy-tailed model A fails the exponential moment condition") {
    const auto a = models::model_a();
    CHECK_THROWS_AS(check_moment_condition(a), MomentConditionError);
    CHECK_THROWS_AS(martingale_residual(a, 0.0), MomentConditionError);
    CHECK_THROWS_AS(share_transform(a), MomentConditionError);
    CHECK_THROWS_AS(otm_price_expansion(a, 1.0, 0.3, 0.05), MomentConditionError);
    CHECK_NOTHROW(check_moment_condition(models::model_b()));
}

TEST_CASE("share-measure intensity, drift and domination for the tempered model") {
    const auto b = models::model_b();
    const auto s = share_transform(b);
    for (double r : {-3.0, -0.5, -0.01, 0.01, 0.3, 1.0, 4.0})
        CHECK(s.nu(0.0, r) == doctest::Approx(0.75 * std::exp(r) * tempered_shape(r)).epsilon(1e-12));
    const auto g = ValidationGrids::defaults();
    for (double x : g.x)
        for (double r : g.r) CHECK(s.nu(x, r) <= s.nu.h(r) * (1.0 + 1e-12));

    // The two drift formulas agree once the martingale restriction holds.
    for (double x : {-1.0, 0.0, 0.6}) CHECK(std::fabs(share_drift_before_restriction(b, x) - s.b(x)) <= 1e-8);
}

TEST_CASE("leading option term equals the direct positive-part integral") {
    const auto b = models::model_b();
    for (double k : {0.1, 0.3, 0.5}) {
        const auto o = otm_price_expansion(b, 1.0, k, 0.05);
        const double direct = leading_term_direct(b, 1.0, k, 0.05);
        CHECK(std::fabs(o.first_term - direct) <= 1e-8);
        CHECK(o.total == doctest::Approx(o.first_term + o.second_term).epsilon(1e-15));
        CHECK(o.first_term == doctest::Approx(0.05 * (o.p1_sharp - std::exp(k) * o.p1_plain)).epsilon(1e-13));

        // Sharp first-order coefficient against an independent tail quadrature.
        const double sharp = 0.75 * semi_infinite(tilted_shape, k);
        CHECK(o.p1_sharp == doctest::Approx(sharp).epsilon(1e-8));
        // Direct term against an independent quadrature of (e^r - e^k) nu(0, r) over r > k.
        const double want =
            0.05 * 0.75 * semi_infinite([k](double r) { return tilted_shape(r) - std::exp(k) * tempered_shape(r); }, k);
        CHECK(direct == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("option expansion edge cases") {
    const auto b = models::model_b();
    const auto zero = otm_price_expansion(b, 1.0, 0.3, 0.0);
    CHECK(zero.first_term == 0.0);
    CHECK(zero.second_term == 0.0);
    CHECK(zero.total == 0.0);
    CHECK(leading_term_direct(b, 1.0, 20.0, 0.05) <= 1e-12);

    const auto diffusion = models::pure_diffusion(-0.02, 0.2);
    const auto o = otm_price_expansion(diffusion, 1.0, 0.3, 0.1);
    CHECK(o.total == 0.0);
    CHECK(leading_term_direct(diffusion, 1.0, 0.3, 0.1) == 0.0);

    CHECK_THROWS_AS(otm_price_expansion(b, 1.0, -0.1, 0.1), DomainError);
    auto off = b;
    off.b = SmoothField::constant(0.0);
    CHECK_THROWS_AS(otm_price_expansion(off, 1.0, 0.3, 0.1), CalibrationError);
}

TEST_CASE("first-order option value is nonincreasing in the strike") {
    const auto b = models::model_b();
    double prev = INFINITY;
    for (double k = 0.05; k <= 1.5; k += 0.1) {
        const double v = leading_term_direct(b, 1.0, k, 0.05);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("jump intensity from strike curvature") {
    CHECK(implied_intensity_from_curvature(0.05 * std::exp(-0.3) * 2.5, 0.05, 0.3) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(implied_intensity_from_curvature(0.0, 0.05, 0.3) == 0.0);
    CHECK_THROWS_AS(implied_intensity_from_curvature(1.0, 0.0, 0.3), DomainError);

    // Central second difference in the strike of the leading term.
    const auto b = models::model_b();
    const double t = 0.05, kappa = 0.3, strike = std::exp(kappa), dk = 1e-3 * strike;
    const auto price = [&](double kk) { return leading_term_direct(b, 1.0, std::log(kk), t); };
    const double ckk = (price(strike + dk) - 2.0 * price(strike) + price(strike - dk)) / (dk * dk);
    const double nu = 0.75 * std::exp(-0.6) * std::pow(0.3, -2.01);
    CHECK(implied_intensity_from_curvature(ckk, t, kappa) == doctest::Approx(nu).epsilon(0.02));
}

TEST_CASE("volatility effect on the option price") {
    const auto b = models::model_b();
    const double k = 0.3;
    const double c1 = 1.0 / (2.0 * oracle::kPi);
    const double want = std::exp(k) * 0.75 * tempered_shape(k) +
                        c1 * semi_infinite([k](double r) { return 0.5 * (tilted_shape(r) + std::exp(k) * tempered_shape(r)); }, k);
    CHECK(vol_effect_on_price(b, 1.0, k) == doctest::Approx(want).epsilon(1e-8));

    models::LocalStableParams p;
    p.tempering = 2.0;
    p.intensity_slope = 0.0;
    p.drift = "martingale";
    p.sigma_sin_amplitude = 0.0;
    const auto free = models::local_stable(p);
    CHECK(vol_effect_on_price(free, 2.0, k) == doctest::Approx(2.0 * std::exp(k) * free.nu(0.0, k)).epsilon(1e-14));
    CHECK(vol_effect_on_price(models::pure_diffusion(-0.02, 0.2), 1.0, k) == 0.0);
}

TEST_CASE("exponential compensator series near zero") {
    for (double g : {1e-9, 1e-5, 3e-3, 0.02, -0.007, 0.5}) {
        const long double exact = std::expm1l(static_cast<long double>(g)) - g;
        CHECK(expm1_minus_linear(g) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-13));
    }
    CHECK(mark_slope_bound(models::model_b()) == 1.0);
}
