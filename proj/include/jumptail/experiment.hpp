#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jumptail/expansion.hpp"
#include "jumptail/model.hpp"
#include "jumptail/montecarlo.hpp"

namespace jumptail::experiment {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsageError = 2 };

// A parsed experiment document. Every field has a default so a config may be as small as
// {"model": "modelA"}.
struct ExperimentConfig {
    std::string model_json = "\"modelA\"";  // the "model" member as written, re-parsed on demand
    std::string model_label = "modelA";
    double x0 = 0.0;
    std::vector<double> eps_list;           // empty: default truncation per grid point
    std::vector<double> t_grid{0.05, 0.1, 0.2};
    std::vector<double> y_grid{1.0};
    std::vector<double> k_grid{0.1, 0.3, 0.5};
    double s0 = 1.0;
    mc::SimConfig sim;
    bool mc_enabled = true;
    bool diffusion_cross_term = false;
    // validate
    double eta = 1e-6;
    bool check_s5 = false;
    // equivalence
    std::vector<double> equivalence_eps{0.1, 0.01};
    std::vector<double> equivalence_x;       // empty: 11 points on [-5, 5]
    double kernel_threshold = 1e-7;
    // compare
    bool keep_going = false;
};

// Parses a JSON document; throws ConfigurationError naming the offending field or position.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Builds the model described by the config's "model" member: a label ("modelA", "modelB") or
// an object with "family" in {local_stable, compound_uniform, pure_diffusion}.
ModelSpec build_model(const ExperimentConfig& cfg);

struct CommandResult {
    int exit_code = kSuccess;
    std::string output;       // CSV or JSON document
    std::string diagnostics;  // human-readable messages for stderr
};

CommandResult run_validate(const ExperimentConfig& cfg);
CommandResult run_compare(const ExperimentConfig& cfg);
CommandResult run_price(const ExperimentConfig& cfg);
CommandResult run_equivalence(const ExperimentConfig& cfg);

// Reals in CSV output: 17 significant digits, '.' decimal separator.
std::string format_real(double v);

inline const char* kCompareHeader = "t,y,eps,p1_term,p2_term,order1,order2,mc_est,mc_se,mc_ci_lo,mc_ci_hi,n_paths,seed";
inline const char* kPriceHeader = "k,t,first_term,second_term,total,leading_direct,mc_price,mc_se";

}  // namespace jumptail::experiment
