#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "jumptail/errors.hpp"
#include "jumptail/models.hpp"
#include "jumptail/montecarlo.hpp"
#include "jumptail/sharemeasure.hpp"
#include "oracles.hpp"

using namespace jumptail;
using namespace jumptail::mc;

namespace {
constexpr double kAlpha = 1.01;

// Kolmogorov-Smirnov statistic sqrt(n) D_n of a sample against a continuous CDF.
double ks_statistic(std::vector<double> v, const std::function<double(double)>& cdf) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return std::sqrt(n) * d;
}
constexpr double kKsCritical1 = 1.6276;  // asymptotic 1% critical value of sqrt(n) D_n

SimConfig config(double eps, double t, long paths, std::uint64_t seed = 99) {
    SimConfig c;
    c.eps = eps;
    c.horizon_t = t;
    c.n_paths = paths;
    c.seed = seed;
    return c;
}
}  // namespace

TEST_CASE("jump arrival times") {
    CounterRng rng(1, 2);
    CHECK(sample_jump_times(rng, 0.0, 1.0).empty());
    CHECK(sample_jump_times(rng, 20.0, 0.0).empty());

    const double lambda = 2.0 * std::pow(0.1, -kAlpha) / kAlpha;  // 20.2632
    const double t = 0.2;
    const int n = 100000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        CounterRng r(5, i);
        const auto times = sample_jump_times(r, lambda, t);
        CHECK(std::is_sorted(times.begin(), times.end()));
        if (!times.empty()) CHECK(times.back() <= t);
        total += times.size();
    }
    const double mean = total / n;
    CHECK(std::fabs(mean - lambda * t) <= 3.0 * std::sqrt(lambda * t / n));
}

TEST_CASE("power-law jump sizes") {
    const auto a = models::model_a();
    const JumpSizeSampler s(a, {0.1});
    CHECK(s.lambda() == doctest::Approx(2.0 * std::pow(0.1, -kAlpha) / kAlpha).epsilon(1e-12));
    CHECK(s.from_uniforms(0.75, 0.5) == doctest::Approx(0.1 * std::pow(2.0, 1.0 / kAlpha)).epsilon(1e-14));
    CHECK(s.from_uniforms(0.75, 0.5) == doctest::Approx(0.19864).epsilon(1e-4));
    CHECK(s.from_uniforms(0.25, 0.5) < 0.0);
    CHECK(s.from_uniforms(0.75, 1e-300) > 1e100);
    CHECK(s.from_uniforms(0.75, 1.0 - 1e-16) == doctest::Approx(0.1).epsilon(1e-14));

    const int n = 100000;
    int beyond = 0;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(17, i);
        beyond += std::fabs(s.sample(rng)) > 0.2;
    }
    const double p = std::pow(2.0, -kAlpha);
    CHECK(p == doctest::Approx(0.4965).epsilon(1e-3));
    CHECK(std::fabs(static_cast<double>(beyond) / n - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("tabulated jump sizes for the tempered density follow the truncated law") {
    const auto b = models::model_b();
    const double eps = 0.01;
    const JumpSizeSampler s(b, {eps});
    const auto shape = [](double r) { return std::exp(-2.0 * r) * std::pow(r, -2.01); };
    const double side_mass = oracle::gk(shape, eps, 1.0) + oracle::gk(shape, 1.0, INFINITY);
    CHECK(s.lambda() == doctest::Approx(2.0 * side_mass).epsilon(1e-10));

    // Inversion accuracy at fixed uniforms.
    for (double v : {0.9, 0.5, 0.1, 1e-3, 1e-6}) {
        const double r = s.from_uniforms(0.75, v);
        const double tail = oracle::gk(shape, r, r + 1.0) + oracle::gk(shape, r + 1.0, INFINITY);
        CHECK(tail / side_mass == doctest::Approx(v).epsilon(1e-9));
    }

    std::vector<double> mags;
    int positive = 0;
    for (int i = 0; i < 10000; ++i) {
        CounterRng rng(23, i);
        const double j = s.sample(rng);
        positive += j > 0.0;
        mags.push_back(std::fabs(j));
    }
    const auto cdf = [&](double r) { return 1.0 - (oracle::gk(shape, r, r + 1.0) + oracle::gk(shape, r + 1.0, INFINITY)) / side_mass; };
    CHECK(ks_statistic(mags, cdf) < kKsCritical1);
    CHECK(std::fabs(positive - 5000) <= 3.0 * 50.0);
}

TEST_CASE("driftless unit diffusion: terminal values are Gaussian with variance t") {
    const auto m = models::pure_diffusion(0.0, 1.0);
    const double t = 0.3;
    const Simulator sim(m, config(0.01, t, 10000), 0.0);
    const auto paths = run_paths(sim);
    std::vector<double> v;
    for (const auto& p : paths) v.push_back(p.terminal);
    CHECK(ks_statistic(v, [t](double x) { return oracle::norm_cdf(x / std::sqrt(t)); }) < kKsCritical1);

    const auto half = estimate_tail(m, config(0.01, t, 10000), 0.0, 0.0);
    CHECK(std::fabs(half.p_hat - 0.5) <= 3.0 * half.std_err);
}

TEST_CASE("deterministic drift: terminal equals x plus t") {
    const auto m = models::pure_diffusion(1.0, 0.0);
    const auto r = simulate_path(m, config(0.01, 0.4, 1), 0.25, 0);
    CHECK(r.terminal == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(r.candidates == 0);
}

TEST_CASE("thinning acceptance matches the intensity ratio along paths") {
    const auto a = models::model_a();
    const Simulator sim(a, config(0.01, 0.1, 20000), 0.0);
    const auto paths = run_paths(sim);
    double cand = 0.0, acc = 0.0, pred = 0.0;
    for (const auto& p : paths) {
        cand += p.candidates;
        acc += p.accepted;
        pred += p.acceptance_sum;
    }
    const double rate = acc / cand;
    const double predicted = pred / cand;
    CHECK(std::fabs(rate - predicted) <= 3.0 * std::sqrt(predicted * (1.0 - predicted) / cand));
    // Started at 0, the state stays near 0 where nu / h = 3/4.
    CHECK(predicted == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("candidate jump counts per path are Poisson") {
    const auto a = models::model_a();
    const double t = 0.1;
    const Simulator sim(a, config(0.01, t, 10000), 0.0);
    const double mean = sim.lambda_eps() * t;
    const auto paths = run_paths(sim);
    const boost::math::poisson_distribution<double> pois(mean);
    // Bins of counts with expected frequency at least 5; the upper bin collects the tail.
    const double n = static_cast<double>(paths.size());
    int lo = static_cast<int>(std::floor(mean));
    while (lo > 0 && n * boost::math::cdf(pois, lo - 1) >= 5.0) --lo;
    int hi = static_cast<int>(std::ceil(mean));
    while (n * boost::math::cdf(boost::math::complement(pois, hi)) >= 5.0) ++hi;
    std::vector<double> observed(hi - lo + 1, 0.0);
    for (const auto& p : paths) observed[std::clamp(p.candidates, lo, hi) - lo] += 1.0;
    double chi2 = 0.0;
    for (int k = lo; k <= hi; ++k) {
        double prob;
        if (k == lo) prob = boost::math::cdf(pois, lo);
        else if (k == hi) prob = boost::math::cdf(boost::math::complement(pois, hi - 1));
        else prob = boost::math::pdf(pois, k);
        const double e = n * prob;
        chi2 += (observed[k - lo] - e) * (observed[k - lo] - e) / e;
    }
    const boost::math::chi_squared_distribution<double> dist(hi - lo);
    CHECK(chi2 < boost::math::quantile(boost::math::complement(dist, 0.01)));
}

TEST_CASE("tail estimates: unreachable threshold and standard error") {
    const auto a = models::model_a();
    const auto far = estimate_tail(a, config(0.01, 0.01, 2000), 0.0, 100.0);
    CHECK(far.p_hat == 0.0);
    CHECK(far.std_err == 0.0);
    const auto e = estimate_tail(a, config(0.01, 0.1, 4000), 0.0, 1.0);
    CHECK(e.std_err == doctest::Approx(std::sqrt(e.p_hat * (1.0 - e.p_hat) / 4000)).epsilon(1e-14));
    CHECK(e.ci_lo == doctest::Approx(e.p_hat - kZ95 * e.std_err).epsilon(1e-14));
    CHECK(e.seed == 99);
    CHECK(e.n_paths == 4000);
}

TEST_CASE("pure diffusion call price matches Black-Scholes") {
    const double vol = 0.2;
    const auto m = models::pure_diffusion(-0.5 * vol * vol, vol);
    auto c = config(0.01, 0.25, 100000);
    c.n_steps = 10;
    const auto o = estimate_option(m, c, 1.0, 0.1);
    const double bs = oracle::black_scholes_call(1.0, std::exp(0.1), vol, 0.25);
    CHECK(std::fabs(o.price - bs) <= 3.0 * o.std_err);
    CHECK(std::fabs(o.mean_exp - 1.0) <= 3.0 * o.mean_exp_se);
}

TEST_CASE("tempered model: martingale diagnostic and deep out-of-the-money calls") {
    const auto b = models::model_b();
    const auto o = estimate_option(b, config(0.01, 0.1, 100000), 1.0, 0.3);
    CHECK(std::fabs(o.mean_exp - 1.0) <= 2.576 * o.mean_exp_se);
    const auto deep = estimate_option(b, config(0.01, 0.1, 20000), 1.0, 10.0);
    CHECK(deep.price <= 1e-6);
}

TEST_CASE("short-maturity call price is led by the jump term") {
    const auto b = models::model_b();
    const double t = 0.01, k = 0.3;
    const auto o = estimate_option(b, config(0.01, t, 200000), 1.0, k);
    const auto e = otm_price_expansion(b, 1.0, k, t);
    CHECK(std::fabs(o.price - leading_term_direct(b, 1.0, k, t)) <= 3.0 * o.std_err + std::fabs(e.second_term));
}

TEST_CASE("results are identical for every thread count") {
    const auto a = models::model_a();
    auto c = config(0.01, 0.1, 3000, 4242);
    c.threads = 1;
    const auto one = run_paths(Simulator(a, c, 0.0));
    c.threads = 3;
    const auto three = run_paths(Simulator(a, c, 0.0));
    REQUIRE(one.size() == three.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].terminal == three[i].terminal);
        CHECK(one[i].candidates == three[i].candidates);
    }
    c.threads = 1;
    const auto e1 = estimate_tail(a, c, 0.0, 1.0);
    c.threads = 4;
    const auto e4 = estimate_tail(a, c, 0.0, 1.0);
    CHECK(e1.p_hat == e4.p_hat);
    CHECK(e1.std_err == e4.std_err);
}

TEST_CASE("antithetic pairs reuse the stream with negated Gaussians") {
    const auto m = models::pure_diffusion(0.0, 1.0);
    auto c = config(0.01, 0.2, 1000);
    c.antithetic = true;
    const Simulator sim(m, c, 0.0);
    const auto plain = sim.simulate(7, false);
    const auto mirrored = sim.simulate(7, true);
    CHECK(plain.terminal == doctest::Approx(-mirrored.terminal).epsilon(1e-14));
    const auto e = estimate_tail(m, c, 0.0, 0.0);
    CHECK(e.p_hat == doctest::Approx(0.5).epsilon(1e-12));
    c.n_paths = 999;
    CHECK_THROWS_AS(Simulator(m, c, 0.0), ConfigurationError);
}

TEST_CASE("invalid simulation settings are rejected") {
    const auto a = models::model_a();
    auto c = config(0.01, 0.1, 10);
    c.n_steps = 0;
    CHECK_THROWS_AS(Simulator(a, c, 0.0), ConfigurationError);
    c = config(0.0, 0.1, 10);
    CHECK_THROWS_AS(Simulator(a, c, 0.0), ConfigurationError);
}

TEST_CASE("pairwise summation and generator streams") {
    std::vector<double> v(1001);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(pairwise_sum(v) == 1001.0 * 1002.0 / 2.0);
    CHECK(pairwise_sum(nullptr, 0) == 0.0);

    CounterRng a(1, 0), b(1, 0), c(1, 1);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
    CounterRng u(9, 9);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK((x > 0.0 && x < 1.0));
    }
}

TEST_CASE("coefficient grid interpolates the approximating drift and volatility") {
    const auto a = models::model_a();
    const CoefficientGrid g(a, 0.01, 0.0, 2.0);
    for (double x : {-1.9, -0.33, 0.0, 0.71, 1.5, 3.7}) {
        CHECK(g.drift(x) == doctest::Approx(b_tilde_eps(a, {0.01}, x)).epsilon(1e-6));
        const double s = a.sigma(x);
        CHECK(g.vol(x) == doctest::Approx(std::sqrt(s * s + sigma_hat_eps(a, {0.01}, x))).epsilon(1e-6));
    }
}
