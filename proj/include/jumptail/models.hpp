#pragma once

#include <string>

#include "jumptail/model.hpp"

namespace jumptail::models {

// State factor c(x) = base + slope * atan(x) used by the built-in stable-like models.
SmoothField atan_intensity(double base, double slope);

// b = sin x, sigma = 1/2 + sin(x)/4, gamma = r, nu = c(x) |r|^(-2.01) with
// c(x) = 3/4 + atan(x)/(2 pi).
ModelSpec model_a();

// Tempered variant: nu = c(x) exp(-2|r|) |r|^(-1-alpha), alpha = 1.01, gamma = r, constant
// sigma, drift fixed by the martingale restriction.
ModelSpec model_b(double sigma = 0.2);

struct LocalStableParams {
    double alpha = 1.01;
    double tempering = 0.0;        // h(r) = exp(-tempering |r|) |r|^(-1-alpha)
    double intensity_base = 0.75;  // c(x) = base + slope * atan(x)
    double intensity_slope = 0.15915494309189535;
    std::string drift = "sin";  // "sin", "constant" or "martingale"
    double drift_value = 0.0;   // used when drift == "constant"
    double sigma_base = 0.5;    // sigma(x) = base + sin_amplitude * sin(x)
    double sigma_sin_amplitude = 0.25;
    double gamma_tanh = 0.0;  // gamma = r (1 + k tanh x); identity when 0
    std::string label = "local_stable";
};

ModelSpec local_stable(const LocalStableParams& p);

// Compound Poisson jumps uniform on [-hi, -lo] U [lo, hi] at total rate `rate`, with
// constant drift and volatility. The intensity is its own dominating density.
ModelSpec compound_uniform(double rate, double lo, double hi, double b, double sigma);

// Diffusion without jumps.
ModelSpec pure_diffusion(double b, double sigma);

// Selects a built-in model by label: "modelA" or "modelB".
ModelSpec by_label(const std::string& label);

}  // namespace jumptail::models
