#include "jumptail/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jumptail/equivalence.hpp"
#include "jumptail/errors.hpp"
#include "jumptail/models.hpp"
#include "jumptail/sharemeasure.hpp"

namespace jumptail::experiment {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    const std::set<std::string> names(known.begin(), known.end());
    for (const auto& item : obj.items()) {
        if (!names.count(item.key())) throw ConfigurationError("unknown field '" + where + item.key() + "'");
    }
}

template <typename T>
T field(const json& obj, const std::string& where, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigurationError("field '" + where + key + "' has the wrong type");
    }
}

std::vector<double> real_list(const json& obj, const std::string& where, const char* key, std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigurationError("field '" + where + key + "' must be a number or a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigurationError("field '" + where + key + "' must contain only numbers");
        out.push_back(e.get<double>());
    }
    if (out.empty()) throw ConfigurationError("field '" + where + key + "' must not be empty");
    return out;
}

void require_all(const std::vector<double>& v, const char* name, bool (*ok)(double), const char* rule) {
    for (double e : v) {
        if (!std::isfinite(e) || !ok(e)) throw ConfigurationError(std::string("field '") + name + "' entries must be " + rule);
    }
}

json check_to_json(const ConditionCheck& c) {
    return json{{"name", c.name},           {"passed", c.passed},       {"margin", c.margin},
                {"witness_x", c.witness_x}, {"witness_r", c.witness_r}, {"detail", c.detail}};
}

std::vector<double> default_x_grid() {
    std::vector<double> x;
    for (int i = 0; i <= 10; ++i) x.push_back(-5.0 + i);
    return x;
}

}  // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigurationError("config must be a JSON object");
    reject_unknown(doc, "", {"model", "x0", "eps_list", "t_grid", "y_grid", "k_grid", "s0", "sim", "expansion", "validate",
                             "equivalence", "keep_going"});

    ExperimentConfig cfg;
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        if (!m.is_string() && !m.is_object()) throw ConfigurationError("field 'model' must be a label or an object");
        cfg.model_json = m.dump();
        cfg.model_label = m.is_string() ? m.get<std::string>() : field<std::string>(m, "model.", "label", "custom");
    }
    cfg.x0 = field<double>(doc, "", "x0", cfg.x0);
    cfg.eps_list = real_list(doc, "", "eps_list", {});
    cfg.t_grid = real_list(doc, "", "t_grid", cfg.t_grid);
    cfg.y_grid = real_list(doc, "", "y_grid", cfg.y_grid);
    cfg.k_grid = real_list(doc, "", "k_grid", cfg.k_grid);
    cfg.s0 = field<double>(doc, "", "s0", cfg.s0);
    cfg.keep_going = field<bool>(doc, "", "keep_going", cfg.keep_going);
    require_all(cfg.eps_list, "eps_list", [](double e) { return e > 0.0; }, "positive");
    require_all(cfg.t_grid, "t_grid", [](double e) { return e >= 0.0; }, "nonnegative");
    require_all(cfg.y_grid, "y_grid", [](double e) { return e > 0.0; }, "positive");
    require_all(cfg.k_grid, "k_grid", [](double e) { return e > 0.0; }, "positive");
    if (!(cfg.s0 > 0.0)) throw ConfigurationError("field 's0' must be positive");

    if (doc.contains("sim")) {
        const json& s = doc.at("sim");
        if (!s.is_object()) throw ConfigurationError("field 'sim' must be an object");
        reject_unknown(s, "sim.", {"n_steps", "n_paths", "seed", "antithetic", "threads", "enabled"});
        cfg.sim.n_steps = field<int>(s, "sim.", "n_steps", cfg.sim.n_steps);
        cfg.sim.n_paths = field<long>(s, "sim.", "n_paths", cfg.sim.n_paths);
        cfg.sim.seed = field<std::uint64_t>(s, "sim.", "seed", cfg.sim.seed);
        cfg.sim.antithetic = field<bool>(s, "sim.", "antithetic", cfg.sim.antithetic);
        cfg.sim.threads = field<unsigned>(s, "sim.", "threads", cfg.sim.threads);
        cfg.mc_enabled = field<bool>(s, "sim.", "enabled", cfg.mc_enabled);
        if (cfg.sim.n_steps < 1) throw ConfigurationError("field 'sim.n_steps' must be at least 1");
        if (cfg.sim.n_paths < 1) throw ConfigurationError("field 'sim.n_paths' must be at least 1");
    }
    if (doc.contains("expansion")) {
        const json& e = doc.at("expansion");
        if (!e.is_object()) throw ConfigurationError("field 'expansion' must be an object");
        reject_unknown(e, "expansion.", {"diffusion_cross_term"});
        cfg.diffusion_cross_term = field<bool>(e, "expansion.", "diffusion_cross_term", cfg.diffusion_cross_term);
    }
    if (doc.contains("validate")) {
        const json& v = doc.at("validate");
        if (!v.is_object()) throw ConfigurationError("field 'validate' must be an object");
        reject_unknown(v, "validate.", {"eta", "check_s5"});
        cfg.eta = field<double>(v, "validate.", "eta", cfg.eta);
        cfg.check_s5 = field<bool>(v, "validate.", "check_s5", cfg.check_s5);
    }
    if (doc.contains("equivalence")) {
        const json& q = doc.at("equivalence");
        if (!q.is_object()) throw ConfigurationError("field 'equivalence' must be an object");
        reject_unknown(q, "equivalence.", {"eps_list", "x_grid", "threshold"});
        cfg.equivalence_eps = real_list(q, "equivalence.", "eps_list", cfg.equivalence_eps);
        cfg.equivalence_x = real_list(q, "equivalence.", "x_grid", {});
        cfg.kernel_threshold = field<double>(q, "equivalence.", "threshold", cfg.kernel_threshold);
        require_all(cfg.equivalence_eps, "equivalence.eps_list", [](double e) { return e > 0.0; }, "positive");
    }
    // Building the model once here surfaces model-description errors as config errors.
    build_model(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

ModelSpec build_model(const ExperimentConfig& cfg) {
    const json m = json::parse(cfg.model_json);
    if (m.is_string()) return models::by_label(m.get<std::string>());
    const std::string family = field<std::string>(m, "model.", "family", "");
    if (family == "local_stable") {
        reject_unknown(m, "model.", {"family", "alpha", "tempering", "intensity_base", "intensity_slope", "drift",
                                     "drift_value", "sigma_base", "sigma_sin_amplitude", "gamma_tanh", "label"});
        models::LocalStableParams p;
        p.alpha = field<double>(m, "model.", "alpha", p.alpha);
        p.tempering = field<double>(m, "model.", "tempering", p.tempering);
        p.intensity_base = field<double>(m, "model.", "intensity_base", p.intensity_base);
        p.intensity_slope = field<double>(m, "model.", "intensity_slope", p.intensity_slope);
        p.drift = field<std::string>(m, "model.", "drift", p.drift);
        p.drift_value = field<double>(m, "model.", "drift_value", p.drift_value);
        p.sigma_base = field<double>(m, "model.", "sigma_base", p.sigma_base);
        p.sigma_sin_amplitude = field<double>(m, "model.", "sigma_sin_amplitude", p.sigma_sin_amplitude);
        p.gamma_tanh = field<double>(m, "model.", "gamma_tanh", p.gamma_tanh);
        p.label = field<std::string>(m, "model.", "label", "local_stable");
        return models::local_stable(p);
    }
    if (family == "compound_uniform") {
        reject_unknown(m, "model.", {"family", "rate", "lo", "hi", "b", "sigma", "label"});
        ModelSpec spec = models::compound_uniform(field<double>(m, "model.", "rate", 1.0), field<double>(m, "model.", "lo", 1.0),
                                                  field<double>(m, "model.", "hi", 2.0), field<double>(m, "model.", "b", 0.0),
                                                  field<double>(m, "model.", "sigma", 0.2));
        spec.label = field<std::string>(m, "model.", "label", spec.label);
        return spec;
    }
    if (family == "pure_diffusion") {
        reject_unknown(m, "model.", {"family", "b", "sigma", "label"});
        ModelSpec spec = models::pure_diffusion(field<double>(m, "model.", "b", 0.0), field<double>(m, "model.", "sigma", 0.2));
        spec.label = field<std::string>(m, "model.", "label", spec.label);
        return spec;
    }
    throw ConfigurationError("field 'model.family' must be local_stable, compound_uniform or pure_diffusion");
}

CommandResult run_validate(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const ValidationGrids grids = ValidationGrids::defaults();
    const ValidationReport rep = validate_assumptions(model, grids.x, grids.r, cfg.eta);
    json doc;
    doc["model"] = cfg.model_label;
    doc["eta"] = cfg.eta;
    json checks = json::array();
    for (const auto& c : rep.checks) checks.push_back(check_to_json(c));
    doc["checks"] = checks;
    bool passed = rep.all_passed();
    CommandResult res;
    if (cfg.check_s5) {
        json mc{{"checked", true}};
        try {
            check_moment_condition(model);
            mc["passed"] = true;
            mc["detail"] = "";
        } catch (const MomentConditionError& e) {
            mc["passed"] = false;
            mc["detail"] = e.what();
            passed = false;
            res.diagnostics += std::string("moment condition failed: ") + e.what() + "\n";
        }
        doc["moment_condition"] = mc;
    }
    doc["passed"] = passed;
    for (const auto& c : rep.checks)
        if (!c.passed) res.diagnostics += "check '" + c.name + "' failed: " + c.detail + "\n";
    res.output = doc.dump(2) + "\n";
    res.exit_code = passed ? kSuccess : kCheckFailed;
    return res;
}

CommandResult run_compare(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    ExpansionOptions opts;
    opts.diffusion_cross_term = cfg.diffusion_cross_term;
    CommandResult res;
    std::ostringstream out;
    out << kCompareHeader << "\n";
    const std::vector<double> eps_values = cfg.eps_list.empty() ? std::vector<double>{0.0} : cfg.eps_list;
    for (double eps_cfg : eps_values) {
        for (double y : cfg.y_grid) {
            const double eps = eps_cfg > 0.0 ? eps_cfg : default_truncation(y).eps;
            for (double t : cfg.t_grid) {
                std::ostringstream row;
                try {
                    const ExpansionResult e = tail_expansion(model, TruncationConfig{eps}, cfg.x0, y, t, opts);
                    row << format_real(t) << ',' << format_real(y) << ',' << format_real(eps) << ',' << format_real(e.p1)
                        << ',' << format_real(e.p2) << ',' << format_real(e.order1) << ',' << format_real(e.order2);
                    if (cfg.mc_enabled) {
                        mc::SimConfig sc = cfg.sim;
                        sc.eps = eps;
                        sc.horizon_t = t;
                        const mc::TailEstimate m = mc::estimate_tail(model, sc, cfg.x0, y);
                        row << ',' << format_real(m.p_hat) << ',' << format_real(m.std_err) << ',' << format_real(m.ci_lo)
                            << ',' << format_real(m.ci_hi) << ',' << m.n_paths << ',' << m.seed;
                    } else {
                        row << ",nan,nan,nan,nan,0," << cfg.sim.seed;
                    }
                } catch (const Error& e) {
                    res.diagnostics += "row t=" + format_real(t) + " y=" + format_real(y) + " eps=" + format_real(eps) +
                                       ": " + e.what() + "\n";
                    res.exit_code = kCheckFailed;
                    if (!cfg.keep_going) return res;
                    row.str("");
                    row << format_real(t) << ',' << format_real(y) << ',' << format_real(eps)
                        << ",error,error,error,error,error,error,error,error,error,error";
                }
                out << row.str() << "\n";
            }
        }
    }
    res.output = out.str();
    return res;
}

CommandResult run_price(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    CommandResult res;
    // Gates: both must pass before any row is written.
    try {
        check_moment_condition(model);
        for (int i = 0; i <= 10; ++i) {
            const double x = -1.0 + 0.2 * i;
            const double r = martingale_residual(model, x);
            if (!(std::fabs(r) <= 1e-6))
                throw CalibrationError("martingale residual " + format_real(r) + " at x = " + format_real(x));
        }
    } catch (const Error& e) {
        res.exit_code = kCheckFailed;
        res.diagnostics = std::string("pricing gate failed: ") + e.what() + "\n";
        return res;
    }
    ExpansionOptions opts;
    opts.diffusion_cross_term = cfg.diffusion_cross_term;
    std::ostringstream out;
    out << kPriceHeader << "\n";
    for (double k : cfg.k_grid) {
        const TruncationConfig trunc = cfg.eps_list.empty() ? default_truncation(k) : TruncationConfig{cfg.eps_list.front()};
        for (double t : cfg.t_grid) {
            try {
                const OptionExpansion o = otm_price_expansion(model, cfg.s0, k, t, trunc, opts);
                const double direct = leading_term_direct(model, cfg.s0, k, t);
                out << format_real(k) << ',' << format_real(t) << ',' << format_real(o.first_term) << ','
                    << format_real(o.second_term) << ',' << format_real(o.total) << ',' << format_real(direct);
                if (cfg.mc_enabled) {
                    mc::SimConfig sc = cfg.sim;
                    sc.eps = trunc.eps;
                    sc.horizon_t = t;
                    const mc::OptionEstimate m = mc::estimate_option(model, sc, cfg.s0, k);
                    out << ',' << format_real(m.price) << ',' << format_real(m.std_err);
                } else {
                    out << ",nan,nan";
                }
                out << "\n";
            } catch (const Error& e) {
                res.exit_code = kCheckFailed;
                res.diagnostics += "row k=" + format_real(k) + " t=" + format_real(t) + ": " + e.what() + "\n";
                if (!cfg.keep_going) return res;
                out << format_real(k) << ',' << format_real(t) << ",error,error,error,error,error,error\n";
            }
        }
    }
    res.output = out.str();
    return res;
}

CommandResult run_equivalence(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const std::vector<double> xs = cfg.equivalence_x.empty() ? default_x_grid() : cfg.equivalence_x;
    json doc;
    doc["model"] = cfg.model_label;
    doc["threshold"] = cfg.kernel_threshold;
    json results = json::array();
    bool passed = true;
    CommandResult res;
    for (double eps : cfg.equivalence_eps) {
        const ReparamContext ctx(model, eps);
        double worst = 0.0;
        double worst_x = xs.front();
        std::pair<double, double> worst_ab{0.0, 0.0};
        for (double x : xs) {
            for (const auto& [a, b] : kernel_interval_family(eps)) {
                const double err = kernel_equivalence_error(ctx, x, a, b);
                if (err > worst) {
                    worst = err;
                    worst_x = x;
                    worst_ab = {a, b};
                }
            }
        }
        std::vector<double> ws;
        for (double f : {0.9, 0.5, 0.1, 0.01}) {
            ws.push_back(f * eps);
            ws.push_back(-f * eps);
        }
        const DeltaBoundReport rep = delta_bound_check(ctx, xs, ws, cfg.eta);
        const bool ok = worst < cfg.kernel_threshold && rep.passed();
        passed = passed && ok;
        if (!ok) {
            res.diagnostics += "eps=" + format_real(eps) + ": max kernel error " + format_real(worst) +
                               (rep.passed() ? "" : "; regularity proxies failed") + "\n";
        }
        results.push_back(json{{"eps", eps},
                               {"max_kernel_error", worst},
                               {"worst_x", worst_x},
                               {"worst_interval", {worst_ab.first, worst_ab.second}},
                               {"intervals", kernel_interval_family(eps).size()},
                               {"delta_bounds",
                                {{"max_abs_d2", rep.max_abs_d2},
                                 {"k0", rep.k0},
                                 {"k1", rep.k1},
                                 {"k2", rep.k2},
                                 {"min_one_plus_d1", rep.min_one_plus_d1},
                                 {"max_range_excess", rep.max_range_excess},
                                 {"one_plus_d1_ok", rep.one_plus_d1_ok},
                                 {"range_ok", rep.range_ok},
                                 {"all_finite", rep.all_finite}}},
                               {"passed", ok}});
    }
    doc["results"] = results;
    doc["passed"] = passed;
    res.output = doc.dump(2) + "\n";
    res.exit_code = passed ? kSuccess : kCheckFailed;
    return res;
}

}  // namespace jumptail::experiment
