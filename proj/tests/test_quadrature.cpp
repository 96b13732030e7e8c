#include <doctest.h>

#include <cmath>
#include <random>

#include "jumptail/errors.hpp"
#include "jumptail/quadrature.hpp"
#include "jumptail/roots.hpp"

using namespace jumptail;
using namespace jumptail::quad;

namespace {
constexpr double kAlpha = 1.01;
double power_law(double r) { return std::pow(std::fabs(r), -1.0 - kAlpha); }
}  // namespace

TEST_CASE("finite interval: polynomial, power law and zero integrands") {
    const auto lin = integrate_interval([](double r) { return r; }, 0.0, 1.0, {1e-10, 1e-10});
    CHECK(lin.value == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lin.abs_error <= 1e-10);

    const double expected = (1.0 - std::pow(2.0, -kAlpha)) / kAlpha;
    CHECK(std::fabs(integrate_interval(power_law, 1.0, 2.0, Tolerance::oracle()).value - expected) < 1e-12);

    CHECK(integrate_interval([](double) { return 0.0; }, 0.0, 1.0).value == 0.0);
}

TEST_CASE("reversed interval flips the sign") {
    const auto f = [](double r) { return std::exp(r); };
    CHECK(integrate_interval(f, 1.0, 0.0).value == doctest::Approx(-(std::exp(1.0) - 1.0)).epsilon(1e-12));
}

TEST_CASE("semi-infinite: power law tail, zero and exponential") {
    CHECK(std::fabs(integrate_semi_infinite(power_law, 1.0, Tolerance::oracle()).value - 1.0 / kAlpha) < 1e-11);
    CHECK(integrate_semi_infinite([](double) { return 0.0; }, 1.0).value == 0.0);
    CHECK(std::fabs(integrate_semi_infinite([](double r) { return std::exp(-2.0 * r); }, 0.0, Tolerance::oracle()).value -
                    0.5) < 1e-12);
    CHECK(std::fabs(integrate_semi_infinite_left([](double r) { return std::exp(2.0 * r); }, 0.0,
                                                 Tolerance::oracle()).value - 0.5) < 1e-12);
}

TEST_CASE("punctured integration around the origin") {
    const double eps = 0.1;
    const double mass = 2.0 * std::pow(eps, -kAlpha) / kAlpha;  // 20.2632...
    CHECK(std::fabs(integrate_punctured(power_law, eps, Tolerance::oracle()).value - mass) < 1e-9);
    CHECK(mass == doctest::Approx(20.2632).epsilon(1e-5));

    // An odd integrand over eps < |r| <= 1 cancels.
    const auto odd = [](double r) { return std::fabs(r) <= 1.0 ? r * power_law(r) : 0.0; };
    CHECK(std::fabs(integrate_punctured(odd, eps, {1e-10, 1e-10}, {-1.0, 1.0}).value) < 1e-10);

    const double e2 = 0.01;
    const auto second_moment = [](double r) { return r * r * power_law(r); };
    const double want = 2.0 * std::pow(e2, 2.0 - kAlpha) / (2.0 - kAlpha);
    CHECK(std::fabs(integrate_small_jumps(second_moment, e2, Tolerance::oracle()).value - want) < 1e-11);
}

TEST_CASE("divergent tails are detected") {
    CHECK_THROWS_AS(integrate_blocks_to_infinity([](double r) { return std::exp(r) * power_law(r); }, 1.0),
                    DivergenceError);
    CHECK(std::fabs(integrate_blocks_to_infinity(power_law, 1.0, Tolerance::oracle()).value - 1.0 / kAlpha) < 1e-10);
}

TEST_CASE("double integrals") {
    const auto one = integrate_double([](double, double) { return 1.0; }, 0.0, 1.0, [](double) { return 0.0; },
                                      [](double) { return 1.0; });
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-12));

    const auto zero = integrate_double([](double, double) { return 0.0; }, 0.0, 1.0, [](double) { return 0.0; },
                                       [](double) { return 1.0; });
    CHECK(zero.value == 0.0);

    // The inner integral over [y - r, y] has length r, so the double integral reduces to
    // the integral of r h(r) over [eps, 1].
    const double eps = 0.1, y = 1.0;
    const auto two = integrate_double([](double r, double) { return power_law(r); }, eps, 1.0,
                                      [y](double r) { return y - r; }, [y](double) { return y; }, Tolerance::oracle());
    const double want = (std::pow(eps, 1.0 - kAlpha) - 1.0) / (kAlpha - 1.0);
    CHECK(std::fabs(two.value - want) < 1e-9);
}

TEST_CASE("linearity on random polynomials against the power-law density") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a0 = coef(gen), a1 = coef(gen), a2 = coef(gen), s = coef(gen), u = coef(gen);
        const auto f = [&](double r) { return (a0 + a1 * r) * power_law(r); };
        const auto g = [&](double r) { return a2 * r * r * power_law(r); };
        const auto rf = integrate_interval(f, 0.5, 3.0);
        const auto rg = integrate_interval(g, 0.5, 3.0);
        const auto rc = integrate_interval([&](double r) { return s * f(r) + u * g(r); }, 0.5, 3.0);
        const double bound = 2.0 * (std::fabs(s) * rf.abs_error + std::fabs(u) * rg.abs_error + rc.abs_error) + 1e-14;
        CHECK(std::fabs(rc.value - (s * rf.value + u * rg.value)) <= bound);
    }
}

TEST_CASE("reported error bounds the true error on the closed-form battery") {
    struct Case {
        double value;
        double error;
        double exact;
    };
    std::vector<Case> cases;
    const Tolerance tol{1e-9, 1e-8};
    for (double a : {0.5, 1.0, 2.0}) {
        const auto r = integrate_semi_infinite(power_law, a, tol);
        cases.push_back({r.value, r.abs_error, std::pow(a, -kAlpha) / kAlpha});
        const auto q = integrate_interval(power_law, a, 2.0 * a, tol);
        cases.push_back({q.value, q.abs_error, (std::pow(a, -kAlpha) - std::pow(2.0 * a, -kAlpha)) / kAlpha});
    }
    for (double eps : {0.1, 0.01, 0.001}) {
        const auto r = integrate_punctured(power_law, eps, tol);
        cases.push_back({r.value, r.abs_error, 2.0 * std::pow(eps, -kAlpha) / kAlpha});
    }
    int honest = 0;
    for (const auto& c : cases) honest += std::fabs(c.value - c.exact) <= c.error + 1e-15 * std::fabs(c.exact);
    CHECK(honest >= static_cast<int>(std::ceil(0.95 * cases.size())));
}

TEST_CASE("monotone root finding") {
    const double z = roots::solve_increasing([](double v) { return v * v * v + v; }, 10.0);
    CHECK(std::fabs(z * z * z + z - 10.0) < 1e-11);
    const double w = roots::solve_increasing_on([](double v) { return std::log(v); }, -3.0, 0.0, 1.0);
    CHECK(w == doctest::Approx(std::exp(-3.0)).epsilon(1e-11));
}
