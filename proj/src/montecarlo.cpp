#include "jumptail/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "jumptail/errors.hpp"
#include "jumptail/roots.hpp"

namespace jumptail::mc {

using quad::inf;

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("JUMPTAIL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

std::vector<double> sample_jump_times(CounterRng& rng, double lambda, double t) {
    std::vector<double> times;
    if (!(lambda > 0.0) || !(t > 0.0)) return times;
    double tau = 0.0;
    for (;;) {
        tau += rng.exponential() / lambda;
        if (tau > t) break;
        times.push_back(tau);
    }
    return times;
}

// ---------------------------------------------------------------------------------------------
// Jump sizes

namespace {

constexpr double kNodeRatio = 1.0905077326652577;  // 2^(1/8)

double gk21(const Fn1& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 0);
}

}  // namespace

JumpSizeSampler::JumpSizeSampler(const ModelSpec& model, const TruncationConfig& trunc)
    : h_(model.nu.h), eps_(trunc.eps), alpha_(model.nu.alpha), breakpoints_(model.nu.breakpoints) {
    if (!(eps_ > 0.0)) throw ConfigurationError("the jump-size sampler needs eps > 0");
    if (model.nu.vanishes) return;
    if (model.nu.power_law_scale && model.nu.symmetric) {
        pareto_ = true;
        mass_pos_ = mass_neg_ = *model.nu.power_law_scale * std::pow(eps_, -alpha_) / alpha_;
        return;
    }
    try {
        neg_ = build_side(-1.0);
        pos_ = build_side(1.0);
    } catch (const Error& e) {
        throw ConfigurationError(std::string("cannot tabulate the jump-size distribution: ") + e.what());
    }
    mass_neg_ = neg_.tail.front();
    mass_pos_ = pos_.tail.front();
}

JumpSizeSampler::Side JumpSizeSampler::build_side(double sign) const {
    auto g = [&](double s) { return h_(sign * s); };
    std::vector<double> stops;
    for (double b : breakpoints_)
        if (sign * b > eps_) stops.push_back(sign * b);
    std::sort(stops.begin(), stops.end());

    const quad::Tolerance tol = quad::Tolerance::oracle();
    const double total = quad::integrate_semi_infinite(g, eps_, tol).value;
    Side s;
    std::vector<double> seg;
    s.r.push_back(eps_);
    double r = eps_;
    std::size_t next_stop = 0;
    for (int k = 0; k < 4000; ++k) {
        double r_next = r * kNodeRatio;
        if (next_stop < stops.size() && stops[next_stop] <= r_next) r_next = stops[next_stop++];
        seg.push_back(quad::integrate_interval(g, r, r_next, tol).value);
        s.r.push_back(r_next);
        r = r_next;
        if (k % 8 == 7 && next_stop == stops.size()) {
            const double rest = quad::integrate_semi_infinite(g, r, tol).value;
            if (rest <= 1e-18 * total) break;
        }
    }
    s.tail.assign(s.r.size(), 0.0);
    s.tail.back() = quad::integrate_semi_infinite(g, s.r.back(), tol).value;
    for (std::size_t k = seg.size(); k-- > 0;) s.tail[k] = s.tail[k + 1] + seg[k];
    return s;
}

double JumpSizeSampler::invert_side(const Side& s, double sign, double target) const {
    auto g = [&](double r) { return h_(sign * r); };
    const std::size_t last = s.r.size() - 1;
    if (target >= s.tail.front()) return s.r.front();
    if (target <= s.tail[last]) {
        // Beyond the table: solve tail(r) = target with adaptive quadrature.
        const double r0 = s.r[last];
        const double t0 = s.tail[last];
        auto f = [&](double r) { return -(t0 - quad::integrate_interval(g, r0, r, quad::Tolerance::oracle()).value); };
        roots::RootOptions o;
        o.initial_step = r0;
        return roots::solve_increasing(f, -target, r0, o);
    }
    // Largest k with tail[k] >= target; tail is nonincreasing.
    const auto it = std::upper_bound(s.tail.begin(), s.tail.end(), target, [](double v, double e) { return e < v; });
    const std::size_t k = static_cast<std::size_t>(it - s.tail.begin()) - 1;
    double a = s.r[k];
    double b = s.r[k + 1];
    const double tk = s.tail[k];
    const double tk1 = s.tail[k + 1];
    double r;
    if (tk1 > 0.0) {
        r = a * std::pow(b / a, std::log(tk / target) / std::log(tk / tk1));
    } else {
        r = a + (b - a) * (tk - target) / (tk - tk1);
    }
    const double left = a;
    for (int it_n = 0; it_n < 60; ++it_n) {
        r = std::clamp(r, a, b);
        const double f = tk - gk21(g, left, r) - target;  // decreasing in r
        if (f > 0.0) a = r;
        else b = r;
        const double hr = g(r);
        double next = hr > 0.0 ? r + f / hr : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::fabs(next - r) <= 1e-12 * r || f == 0.0) return next;
        r = next;
    }
    return r;
}

double JumpSizeSampler::from_uniforms(double u_side, double v) const {
    const double lam = lambda();
    if (!(lam > 0.0)) throw DomainError("no jumps larger than eps to sample");
    if (pareto_) {
        const double sign = u_side < 0.5 ? -1.0 : 1.0;
        return sign * eps_ * std::pow(v, -1.0 / alpha_);
    }
    if (u_side * lam < mass_neg_) return -invert_side(neg_, -1.0, v * mass_neg_);
    return invert_side(pos_, 1.0, v * mass_pos_);
}

double JumpSizeSampler::sample(CounterRng& rng) const {
    const double u_side = rng.uniform();
    const double v = rng.uniform();
    return from_uniforms(u_side, v);
}

// ---------------------------------------------------------------------------------------------
// Coefficients

struct CoefficientGrid::Cache {
    std::shared_mutex mutex;
    std::unordered_map<long, Node> nodes;
};

CoefficientGrid::CoefficientGrid(const ModelSpec& model, double eps, double center, double half_width, int n_core)
    : model_(std::make_shared<const ModelSpec>(model)), eps_(eps), cache_(std::make_shared<Cache>()) {
    if (n_core < 2 || !(half_width > 0.0)) throw ConfigurationError("coefficient grid needs two nodes and a positive width");
    lo_ = center - half_width;
    dx_ = 2.0 * half_width / (n_core - 1);
    core_.reserve(n_core);
    for (int i = 0; i < n_core; ++i) core_.push_back(compute(lo_ + i * dx_));
}

CoefficientGrid::Node CoefficientGrid::compute(double x) const {
    const TruncationConfig trunc{eps_};
    const quad::Tolerance tol{1e-11, 1e-11};
    const double s = model_->sigma(x);
    return {b_tilde_eps(*model_, trunc, x, tol), s * s + sigma_hat_eps(*model_, trunc, x, tol)};
}

CoefficientGrid::Node CoefficientGrid::node(long i) const {
    if (i >= 0 && i < static_cast<long>(core_.size())) return core_[static_cast<std::size_t>(i)];
    {
        std::shared_lock lock(cache_->mutex);
        auto it = cache_->nodes.find(i);
        if (it != cache_->nodes.end()) return it->second;
    }
    const Node n = compute(lo_ + static_cast<double>(i) * dx_);
    std::unique_lock lock(cache_->mutex);
    cache_->nodes.emplace(i, n);
    return n;
}

CoefficientGrid::Node CoefficientGrid::interpolate(double x) const {
    const double s = (x - lo_) / dx_;
    // Far from any grid the nodes would be meaningless; evaluate the coefficients directly.
    if (!(std::fabs(s) < 1e12)) return compute(x);
    const double fl = std::floor(s);
    const long i = static_cast<long>(fl);
    const double t = s - fl;
    const double w[4] = {
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    };
    Node out{0.0, 0.0};
    for (int j = 0; j < 4; ++j) {
        const Node n = node(i - 1 + j);
        out.drift += w[j] * n.drift;
        out.variance += w[j] * n.variance;
    }
    return out;
}

double CoefficientGrid::drift(double x) const { return interpolate(x).drift; }

double CoefficientGrid::vol(double x) const { return std::sqrt(std::max(interpolate(x).variance, 0.0)); }

// ---------------------------------------------------------------------------------------------
// Paths

Simulator::Simulator(const ModelSpec& model, const SimConfig& cfg, double x0) : model_(model), cfg_(cfg), x0_(x0) {
    if (!(cfg.eps > 0.0)) throw ConfigurationError("simulation eps must be positive");
    if (cfg.n_steps < 1) throw ConfigurationError("n_steps must be at least 1");
    if (cfg.n_paths < 1) throw ConfigurationError("n_paths must be at least 1");
    if (!(cfg.horizon_t >= 0.0)) throw ConfigurationError("the horizon must be nonnegative");
    if (cfg.antithetic && cfg.n_paths % 2 != 0) throw ConfigurationError("antithetic runs need an even n_paths");
    if (!model.nu.vanishes) {
        sampler_ = std::make_shared<JumpSizeSampler>(model, TruncationConfig{cfg.eps});
        if (!(sampler_->lambda() > 0.0)) sampler_.reset();
    }
    const TruncationConfig trunc{cfg.eps};
    const double s = model.sigma(x0);
    const double var0 = s * s + (model.nu.vanishes ? 0.0 : sigma_hat_eps(model, trunc, x0));
    const double half_width = std::max(6.0 * std::sqrt(var0 * cfg.horizon_t), 1.0);
    grid_ = std::make_shared<CoefficientGrid>(model, cfg.eps, x0, half_width);
}

PathResult Simulator::simulate(std::uint64_t index, bool negate_gaussians,
                               std::vector<std::pair<double, double>>* trace) const {
    CounterRng rng(cfg_.seed, index);
    PathResult res;
    const double t = cfg_.horizon_t;
    const std::vector<double> times = sampler_ ? sample_jump_times(rng, sampler_->lambda(), t) : std::vector<double>{};
    const double z_sign = negate_gaussians ? -1.0 : 1.0;
    double x = x0_;
    double clock = 0.0;
    if (trace) trace->emplace_back(clock, x);

    auto advance = [&](double to) {
        const double dt = to - clock;
        if (!(dt > 0.0)) return;
        const double z = z_sign * rng.normal();
        x += grid_->drift(x) * dt + grid_->vol(x) * std::sqrt(dt) * z;
        clock = to;
        if (trace) trace->emplace_back(clock, x);
    };
    auto jump = [&]() {
        const double r = sampler_->sample(rng);
        const double u = rng.uniform();
        const double g = model_.gamma.value(x, r);
        const double p = std::fabs(g) > cfg_.eps ? model_.nu.ratio(x, r) : 0.0;
        ++res.candidates;
        res.acceptance_sum += p;
        if (u < p) {
            x += g;
            ++res.accepted;
            if (trace) trace->emplace_back(clock, x);
        }
    };

    if (t > 0.0) {
        const double step = t / cfg_.n_steps;
        std::size_t next_jump = 0;
        for (int j = 1; j <= cfg_.n_steps; ++j) {
            const double grid_time = j == cfg_.n_steps ? t : j * step;
            while (next_jump < times.size() && times[next_jump] <= grid_time) {
                advance(times[next_jump]);
                jump();
                ++next_jump;
            }
            advance(grid_time);
        }
    }
    res.terminal = x;
    return res;
}

std::vector<PathResult> run_paths(const Simulator& sim) {
    const SimConfig& cfg = sim.config();
    const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<PathResult> out(n);
    constexpr std::size_t chunk = 256;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(resolve_threads(cfg.threads), (n + chunk - 1) / chunk));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        try {
            for (;;) {
                const std::size_t start = next.fetch_add(chunk);
                if (start >= n) break;
                const std::size_t end = std::min(n, start + chunk);
                for (std::size_t i = start; i < end; ++i)
                    out[i] = cfg.antithetic ? sim.simulate(i / 2, i % 2 == 1) : sim.simulate(i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(n);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

PathResult simulate_path(const ModelSpec& model, const SimConfig& cfg, double x0, std::uint64_t index) {
    return Simulator(model, cfg, x0).simulate(index);
}

namespace {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Mean and standard error; antithetic runs treat each pair average as one observation.
MeanSe mean_and_se(const std::vector<double>& v, bool antithetic) {
    std::vector<double> obs;
    if (antithetic) {
        obs.resize(v.size() / 2);
        for (std::size_t j = 0; j < obs.size(); ++j) obs[j] = 0.5 * (v[2 * j] + v[2 * j + 1]);
    } else {
        obs = v;
    }
    const double m = static_cast<double>(obs.size());
    MeanSe out;
    out.mean = pairwise_sum(obs) / m;
    if (obs.size() < 2) return out;
    std::vector<double> sq(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) sq[i] = (obs[i] - out.mean) * (obs[i] - out.mean);
    out.se = std::sqrt(pairwise_sum(sq) / (m - 1.0) / m);
    return out;
}

}  // namespace

TailEstimate tail_from_paths(const std::vector<PathResult>& paths, const SimConfig& cfg, double threshold) {
    const std::size_t n = paths.size();
    std::vector<double> hit(n), cand(n), acc(n), prob(n);
    for (std::size_t i = 0; i < n; ++i) {
        hit[i] = paths[i].terminal >= threshold ? 1.0 : 0.0;
        cand[i] = paths[i].candidates;
        acc[i] = paths[i].accepted;
        prob[i] = paths[i].acceptance_sum;
    }
    TailEstimate est;
    est.n_paths = static_cast<long>(n);
    est.seed = cfg.seed;
    const double dn = static_cast<double>(n);
    est.p_hat = pairwise_sum(hit) / dn;
    if (cfg.antithetic) {
        est.std_err = mean_and_se(hit, true).se;
    } else {
        est.std_err = std::sqrt(est.p_hat * (1.0 - est.p_hat) / dn);
    }
    est.ci_lo = std::max(0.0, est.p_hat - kZ95 * est.std_err);
    est.ci_hi = std::min(1.0, est.p_hat + kZ95 * est.std_err);
    est.mean_candidates = pairwise_sum(cand) / dn;
    est.mean_accepted = pairwise_sum(acc) / dn;
    est.mean_acceptance = pairwise_sum(prob) / dn;
    return est;
}

TailEstimate estimate_tail(const ModelSpec& model, const SimConfig& cfg, double x, double y) {
    const Simulator sim(model, cfg, x);
    return tail_from_paths(run_paths(sim), cfg, x + y);
}

OptionEstimate estimate_option(const ModelSpec& model, const SimConfig& cfg, double s0, double k) {
    const Simulator sim(model, cfg, 0.0);
    const std::vector<PathResult> paths = run_paths(sim);
    const std::size_t n = paths.size();
    const double strike = s0 * std::exp(k);
    std::vector<double> payoff(n), growth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(paths[i].terminal);
        growth[i] = e;
        payoff[i] = std::max(s0 * e - strike, 0.0);
    }
    const MeanSe p = mean_and_se(payoff, cfg.antithetic);
    const MeanSe g = mean_and_se(growth, cfg.antithetic);
    OptionEstimate est;
    est.price = p.mean;
    est.std_err = p.se;
    est.ci_lo = p.mean - kZ95 * p.se;
    est.ci_hi = p.mean + kZ95 * p.se;
    est.mean_exp = g.mean;
    est.mean_exp_se = g.se;
    est.n_paths = static_cast<long>(n);
    est.seed = cfg.seed;
    return est;
}

}  // namespace jumptail::mc
