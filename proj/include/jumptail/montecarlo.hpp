#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "jumptail/model.hpp"
#include "jumptail/rng.hpp"

namespace jumptail::mc {

struct SimConfig {
    double eps = 0.01;
    int n_steps = 100;
    long n_paths = 100000;
    double horizon_t = 0.1;
    std::uint64_t seed = 20240601;
    bool antithetic = false;
    unsigned threads = 0;  // 0: JUMPTAIL_THREADS if set, otherwise the hardware concurrency
};

// Per-path record: terminal state and the jump bookkeeping used by the diagnostics.
struct PathResult {
    double terminal = 0.0;
    int candidates = 0;              // jump times of the dominating process
    int accepted = 0;                // jumps kept by thinning
    double acceptance_sum = 0.0;     // sum over candidates of nu / h times 1{|gamma| > eps}
};

struct TailEstimate {
    double p_hat = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
    double mean_candidates = 0.0;
    double mean_accepted = 0.0;
    double mean_acceptance = 0.0;    // path average of the thinning probabilities
};

struct OptionEstimate {
    double price = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_exp = 0.0;     // average of exp(X_t), 1 for a martingale
    double mean_exp_se = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
};

inline constexpr double kZ95 = 1.959963984540054;

// Threads to use: `requested` when positive, else JUMPTAIL_THREADS, else the hardware count.
unsigned resolve_threads(unsigned requested);

// Sum in a fixed binary-tree order so the result depends only on the values.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// Arrival times in (0, t] of a Poisson process with rate lambda.
std::vector<double> sample_jump_times(CounterRng& rng, double lambda, double t);

// Draws marks from h(r) 1{|r| > eps} / lambda_eps. Power-law densities use the closed-form
// Pareto inverse; other densities use a tabulated tail function refined by Newton steps.
class JumpSizeSampler {
public:
    JumpSizeSampler(const ModelSpec& model, const TruncationConfig& trunc);

    double lambda() const { return mass_neg_ + mass_pos_; }
    double sample(CounterRng& rng) const;
    // The mark selected by the uniforms: u_side picks the side, v in (0, 1) is the upper-tail
    // probability of the magnitude.
    double from_uniforms(double u_side, double v) const;

private:
    struct Side {
        std::vector<double> r;     // nodes, increasing magnitudes starting at eps
        std::vector<double> tail;  // integral of h over [r_k, inf) on this side
    };
    Side build_side(double sign) const;
    double invert_side(const Side& s, double sign, double target) const;

    Fn1 h_;
    double eps_;
    double alpha_;
    std::vector<double> breakpoints_;
    bool pareto_ = false;
    double mass_neg_ = 0.0;
    double mass_pos_ = 0.0;
    Side neg_;
    Side pos_;
};

// Drift and diffusion coefficients of the approximating process, cubic-interpolated from
// nodes at a fixed spacing. Nodes outside the core grid are computed on first use.
class CoefficientGrid {
public:
    CoefficientGrid(const ModelSpec& model, double eps, double center, double half_width, int n_core = 201);

    double drift(double x) const;
    double vol(double x) const;  // sqrt(sigma^2 + sigma_hat_eps^2)
    double spacing() const { return dx_; }

private:
    struct Node {
        double drift;
        double variance;
    };
    Node node(long i) const;
    Node compute(double x) const;
    Node interpolate(double x) const;

    std::shared_ptr<const ModelSpec> model_;
    double eps_;
    double lo_;
    double dx_;
    std::vector<Node> core_;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

class Simulator {
public:
    Simulator(const ModelSpec& model, const SimConfig& cfg, double x0);

    // Path `index` of the configured seed. With `negate_gaussians` the same stream is used with
    // every Gaussian increment negated. When `trace` is given it receives (time, state) pairs.
    PathResult simulate(std::uint64_t index, bool negate_gaussians = false,
                        std::vector<std::pair<double, double>>* trace = nullptr) const;

    const SimConfig& config() const { return cfg_; }
    double x0() const { return x0_; }
    double lambda_eps() const { return sampler_ ? sampler_->lambda() : 0.0; }
    const CoefficientGrid& coefficients() const { return *grid_; }

private:
    ModelSpec model_;
    SimConfig cfg_;
    double x0_;
    std::shared_ptr<JumpSizeSampler> sampler_;
    std::shared_ptr<CoefficientGrid> grid_;
};

// All configured paths, stored by index. Antithetic runs pair path 2j with 2j + 1.
std::vector<PathResult> run_paths(const Simulator& sim);

// Terminal value of one path.
PathResult simulate_path(const ModelSpec& model, const SimConfig& cfg, double x0, std::uint64_t index);

TailEstimate estimate_tail(const ModelSpec& model, const SimConfig& cfg, double x, double y);
TailEstimate tail_from_paths(const std::vector<PathResult>& paths, const SimConfig& cfg, double threshold);

// E[(s0 exp(X_t) - s0 exp(k))+] with X_0 = 0.
OptionEstimate estimate_option(const ModelSpec& model, const SimConfig& cfg, double s0, double k);

}  // namespace jumptail::mc
