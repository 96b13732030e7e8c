#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jumptail/errors.hpp"
#include "jumptail/experiment.hpp"

using namespace jumptail;
using namespace jumptail::experiment;

namespace {

struct Overrides {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> eps;
    std::optional<long> paths;
    std::optional<unsigned> threads;
    bool keep_going = false;
    bool check_s5 = false;
    bool no_mc = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config (defaults apply when omitted)");
    cmd->add_option("--out", o.out_path, "write the CSV/JSON document here instead of stdout");
    cmd->add_option("--seed", o.seed, "Monte Carlo seed");
    cmd->add_option("--eps", o.eps, "truncation level, replaces every eps list")->check(CLI::PositiveNumber);
    cmd->add_option("--paths", o.paths, "Monte Carlo path count")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", o.threads, "Monte Carlo worker threads (0: automatic)");
    cmd->add_flag("--keep-going", o.keep_going, "mark failed rows instead of stopping");
    cmd->add_flag("--check-s5", o.check_s5, "also check the exponential moment condition");
    cmd->add_flag("--no-mc", o.no_mc, "skip the Monte Carlo columns");
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig cfg = o.config_path.empty() ? parse_config("{}") : load_config(o.config_path);
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.eps) {
        cfg.eps_list = {*o.eps};
        cfg.equivalence_eps = {*o.eps};
    }
    if (o.paths) cfg.sim.n_paths = *o.paths;
    if (o.threads) cfg.sim.threads = *o.threads;
    if (o.keep_going) cfg.keep_going = true;
    if (o.check_s5) cfg.check_s5 = true;
    if (o.no_mc) cfg.mc_enabled = false;
    if (cfg.sim.antithetic && cfg.sim.n_paths % 2 != 0)
        throw ConfigurationError("antithetic sampling needs an even path count");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Short-time tail probabilities and option prices for state-dependent jump diffusions"};
    app.require_subcommand(1);
    Overrides o;
    CLI::App* validate = app.add_subcommand("validate", "check the model conditions, JSON report");
    CLI::App* compare = app.add_subcommand("compare", "expansion against Monte Carlo tail estimates, CSV");
    CLI::App* price = app.add_subcommand("price", "out-of-the-money call expansion, CSV");
    CLI::App* equivalence = app.add_subcommand("equivalence", "kernel equivalence and reparametrization bounds, JSON");
    for (CLI::App* cmd : {validate, compare, price, equivalence}) add_common(cmd, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    CommandResult res;
    try {
        const ExperimentConfig cfg = resolve(o);
        if (validate->parsed()) res = run_validate(cfg);
        else if (compare->parsed()) res = run_compare(cfg);
        else if (price->parsed()) res = run_price(cfg);
        else res = run_equivalence(cfg);
    } catch (const ConfigurationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCheckFailed;
    }

    std::cerr << res.diagnostics;
    if (o.out_path.empty()) {
        std::cout << res.output;
    } else {
        std::ofstream out(o.out_path, std::ios::binary);
        out << res.output;
        if (!out) {
            std::cerr << "cannot write '" << o.out_path << "'\n";
            return kUsageError;
        }
    }
    return res.exit_code;
}
