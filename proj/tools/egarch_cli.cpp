// Command-line front end: simulate, fit, check-invertibility, stability, domain-map, forecast, mc-study.

#include "egarch/error.hpp"
#include "egarch/experiments.hpp"
#include "egarch/fit.hpp"
#include "egarch/inversion.hpp"
#include "egarch/io.hpp"
#include "egarch/model.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using egarch::Error;
using egarch::ErrorKind;
namespace io = egarch::io;

constexpr int kSchemaVersion = 1;

/// JSON configuration files: {"schema_version": 1, "<subcommand>": {"<flag>": value, ...}}.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        nlohmann::ordered_json j;
        j["schema_version"] = kSchemaVersion;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) {
                continue;
            }
            const std::string name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& res = opt->results();
                j[name] = res.size() == 1 ? nlohmann::ordered_json(res.front()) : nlohmann::ordered_json(res);
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            if (sub->get_name().empty()) {
                continue;
            }
            auto inner = nlohmann::ordered_json::parse(to_config(sub, default_also, false, ""));
            inner.erase("schema_version");
            if (!inner.empty()) {
                j[sub->get_name()] = inner;
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) {
            throw CLI::ConversionError("config must be a JSON object");
        }
        if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
            j["schema_version"].get<int>() != kSchemaVersion) {
            throw CLI::ConversionError("config needs \"schema_version\": " + std::to_string(kSchemaVersion));
        }
        j.erase("schema_version");
        return flatten(j, "", {});
    }

private:
    static std::string scalar(const nlohmann::json& v, const std::string& name) {
        if (v.is_boolean()) {
            return v.get<bool>() ? "true" : "false";
        }
        if (v.is_number()) {
            return v.dump();
        }
        if (v.is_string()) {
            return v.get<std::string>();
        }
        throw CLI::ConversionError("config value of '" + name + "' must be a scalar or an array of scalars");
    }

    static std::vector<CLI::ConfigItem> flatten(const nlohmann::json& j, const std::string& name,
                                                std::vector<std::string> prefix) {
        std::vector<CLI::ConfigItem> out;
        if (j.is_object()) {
            if (!name.empty()) {
                prefix.push_back(name);
            }
            for (auto it = j.begin(); it != j.end(); ++it) {
                auto sub = flatten(*it, it.key(), prefix);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        }
        CLI::ConfigItem item;
        item.name = name;
        item.parents = prefix;
        if (j.is_array()) {
            for (const auto& v : j) {
                item.inputs.push_back(scalar(v, name));
            }
        } else {
            item.inputs.push_back(scalar(j, name));
        }
        out.push_back(std::move(item));
        return out;
    }
};

/// Either a JSON file (--params) or the four inline coefficients.
struct ParamsInput {
    std::string file;
    std::optional<double> alpha, beta, gamma, delta;

    void attach(CLI::App* cmd, const std::string& what) {
        cmd->add_option("--params", file, "JSON file with " + what + " (alpha, beta, gamma, delta or theta_hat)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--alpha", alpha, "log-variance intercept");
        cmd->add_option("--beta", beta, "log-variance persistence");
        cmd->add_option("--gamma", gamma, "sign coefficient");
        cmd->add_option("--delta", delta, "magnitude coefficient");
    }

    [[nodiscard]] egarch::ModelParams resolve() const {
        const bool any_inline = alpha || beta || gamma || delta;
        if (!file.empty()) {
            if (any_inline) {
                throw Error(ErrorKind::InvalidArgument, "give either --params or --alpha/--beta/--gamma/--delta");
            }
            return io::load_params(file);
        }
        if (!(alpha && beta && gamma && delta)) {
            throw Error(ErrorKind::InvalidArgument,
                        "parameters needed: --params FILE or all of --alpha --beta --gamma --delta");
        }
        egarch::ModelParams p{*alpha, *beta, *gamma, *delta};
        if (!p.finite()) {
            throw Error(ErrorKind::NonFiniteValue, "parameters must be finite");
        }
        return p;
    }
};

struct InnovationInput {
    std::string kind = "normal";
    double dof = 0.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--innovations", kind, "innovation law")
            ->check(CLI::IsMember({"normal", "student-t", "rademacher"}))
            ->capture_default_str();
        cmd->add_option("--dof", dof, "Student-t degrees of freedom (> 4)");
    }

    [[nodiscard]] egarch::InnovationSpec resolve() const {
        egarch::InnovationSpec spec;
        if (kind == "student-t") {
            spec = egarch::InnovationSpec::student_t(dof);
        } else if (kind == "rademacher") {
            spec = egarch::InnovationSpec::rademacher();
        }
        spec.validate();
        return spec;
    }
};

void emit(const std::string& out, const std::string& content) {
    if (out.empty()) {
        std::cout << content;
    } else {
        io::write_atomic(out, content);
    }
}

std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

egarch::FitMode parse_mode(const std::string& m) {
    return m == "qmle" ? egarch::FitMode::QMLE : egarch::FitMode::SQMLE;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EGARCH(1,1) simulation, invertibility checks and stable quasi-maximum likelihood"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file with schema_version and one object per subcommand");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads for Monte Carlo work (0 = logical cores)")
        ->capture_default_str();

    int exit_code = 0;

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate the stationary process");
    ParamsInput sim_params;
    InnovationInput sim_innov;
    std::size_t sim_n = 0;
    std::size_t sim_burn = 1000;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    sim_params.attach(sim, "the data-generating parameters");
    sim_innov.attach(sim);
    sim->add_option("--n", sim_n, "number of observations")->required()->check(CLI::PositiveNumber);
    sim->add_option("--burn-in", sim_burn, "discarded warm-up steps")->capture_default_str();
    sim->add_option("--seed", sim_seed, "random seed")->required();
    sim->add_option("--out", sim_out, "output CSV (t,x,log_sigma2,z); stdout when absent");
    sim->callback([&] {
        const auto series = egarch::simulate(sim_params.resolve(), sim_innov.resolve(), sim_n, sim_burn, sim_seed);
        emit(sim_out, io::series_csv(series));
    });

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "QMLE or stable QMLE of the parameters");
    std::string fit_input;
    std::string fit_column;
    std::string fit_mode = "sqmle";
    egarch::FitOptions fit_opts;
    std::string fit_start_file;
    std::optional<std::uint64_t> fit_seed;
    std::string fit_out;
    fit_cmd->add_option("--input", fit_input, "series CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--column", fit_column, "column to read (default x)");
    fit_cmd->add_option("--mode", fit_mode, "estimator")->check(CLI::IsMember({"qmle", "sqmle"}))->capture_default_str();
    fit_cmd->add_option("--epsilon", fit_opts.epsilon, "margin of the empirical invertibility constraint")
        ->capture_default_str();
    fit_cmd->add_option("--start", fit_start_file, "JSON file with starting parameters")->check(CLI::ExistingFile);
    fit_cmd->add_option("--alpha-max", fit_opts.box.alpha_max, "box bound on |alpha|")->capture_default_str();
    fit_cmd->add_option("--beta-max", fit_opts.box.beta_max, "box bound on |beta|")->capture_default_str();
    fit_cmd->add_option("--gamma-max", fit_opts.box.gamma_max, "box bound on |gamma|")->capture_default_str();
    fit_cmd->add_option("--delta-max", fit_opts.box.delta_max, "box bound on delta")->capture_default_str();
    fit_cmd->add_option("--max-iter", fit_opts.max_iter, "optimizer iteration cap")->capture_default_str();
    fit_cmd->add_option("--seed", fit_seed, "recorded for reproducibility; the fit itself is deterministic");
    fit_cmd->add_option("--out", fit_out, "output JSON; stdout when absent");
    fit_cmd->callback([&] {
        auto series = io::load_series(fit_input, fit_column.empty() ? std::nullopt : std::optional(fit_column));
        io::require_length(series, 10);
        fit_opts.mode = parse_mode(fit_mode);
        const egarch::ModelParams start =
            fit_start_file.empty() ? egarch::default_start(series.returns) : io::load_params(fit_start_file);
        const egarch::FitResult res = egarch::fit(series, start, fit_opts);
        io::Json j = io::to_json(res);
        if (fit_seed) {
            j["seed"] = *fit_seed;
        }
        emit(fit_out, dump(j));
        if (!res.converged) {
            std::cerr << "fit did not converge: " << res.stop_reason << "\n";
            exit_code = 1;
        }
    });

    // check-invertibility
    auto* inv = app.add_subcommand("check-invertibility", "Lyapunov test of invertibility");
    ParamsInput inv_params;
    InnovationInput inv_innov;
    std::string inv_method = "empirical";
    std::string inv_input;
    std::string inv_column;
    double inv_epsilon = egarch::kDefaultEpsilon;
    std::size_t inv_paths = 10000;
    std::optional<std::uint64_t> inv_seed;
    std::string inv_dgp_file;
    std::string inv_out;
    inv_params.attach(inv, "the parameters to test");
    inv_innov.attach(inv);
    inv->add_option("--method", inv_method, "empirical (on --input) or theoretical (Monte Carlo)")
        ->check(CLI::IsMember({"empirical", "theoretical"}))
        ->capture_default_str();
    inv->add_option("--input", inv_input, "series CSV for the empirical method")->check(CLI::ExistingFile);
    inv->add_option("--column", inv_column, "column to read (default x)");
    inv->add_option("--epsilon", inv_epsilon, "empirical margin")->capture_default_str();
    inv->add_option("--mc-paths", inv_paths, "Monte Carlo paths for the theoretical method")->capture_default_str();
    inv->add_option("--seed", inv_seed, "random seed (theoretical method)");
    inv->add_option("--dgp", inv_dgp_file, "JSON file with the data-generating parameters (default: tested ones)")
        ->check(CLI::ExistingFile);
    inv->add_option("--out", inv_out, "write the report as JSON");
    inv->callback([&] {
        const egarch::ModelParams p = inv_params.resolve();
        egarch::LyapunovReport rep;
        if (inv_method == "empirical") {
            if (inv_input.empty()) {
                throw Error(ErrorKind::InvalidArgument, "the empirical method needs --input");
            }
            const auto series =
                io::load_series(inv_input, inv_column.empty() ? std::nullopt : std::optional(inv_column));
            rep = egarch::check_inv_empirical(p, series.returns, inv_epsilon);
        } else {
            if (!inv_seed) {
                throw Error(ErrorKind::InvalidArgument, "the theoretical method draws random paths: --seed is required");
            }
            const egarch::ModelParams dgp = inv_dgp_file.empty() ? p : io::load_params(inv_dgp_file);
            egarch::TheoreticalCheckOptions opts;
            opts.threads = threads;
            rep = egarch::check_inv_theoretical(dgp, p, inv_innov.resolve(), inv_paths, *inv_seed, opts);
        }
        std::cout << "verdict: " << egarch::to_string(rep.verdict) << "\n"
                  << "lyapunov_mean: " << io::format_double(rep.estimate) << "\n"
                  << "std_error: " << io::format_double(rep.std_error) << "\n";
        if (!inv_out.empty()) {
            io::Json j = io::to_json(rep);
            if (inv_seed) {
                j["seed"] = *inv_seed;
            }
            io::write_atomic(inv_out, dump(j));
        }
        exit_code = rep.verdict == egarch::Verdict::Invertible ? 0 : 1;
    });

    // stability
    auto* stab = app.add_subcommand("stability", "divergence of filtered paths from several initial values");
    ParamsInput stab_params;
    std::string stab_input;
    std::vector<double> stab_init;
    std::string stab_out;
    stab_params.attach(stab, "the filter parameters");
    stab->add_option("--input", stab_input, "series CSV (a log_sigma2 column adds the criterion column)")
        ->required()
        ->check(CLI::ExistingFile);
    stab->add_option("--init", stab_init, "initial log-variances (default: alpha/(1-beta) and alpha/(1-beta)+5)");
    stab->add_option("--out", stab_out, "output CSV t,diff_max[,criterion]; stdout when absent");
    stab->callback([&] {
        const egarch::ModelParams p = stab_params.resolve();
        const auto series = io::load_series(stab_input);
        std::vector<double> init = stab_init;
        if (init.empty()) {
            egarch::require_stationary(p);
            init = {p.unconditional_mean(), p.unconditional_mean() + 5.0};
        }
        emit(stab_out, io::stability_csv(egarch::stability_diagnostic(p, series, init)));
    });

    // domain-map
    auto* dom = app.add_subcommand("domain-map", "largest invertible beta over a (gamma, delta) grid");
    egarch::DomainMapOptions dom_opts;
    std::string dom_out;
    std::string dom_json;
    dom->add_option("--gamma-min", dom_opts.gamma_min)->capture_default_str();
    dom->add_option("--gamma-max", dom_opts.gamma_max)->capture_default_str();
    dom->add_option("--delta-min", dom_opts.delta_min)->capture_default_str();
    dom->add_option("--delta-max", dom_opts.delta_max)->capture_default_str();
    dom->add_option("--grid", dom_opts.grid_size, "points per axis")->capture_default_str();
    dom->add_option("--beta-tol", dom_opts.beta_tolerance, "bisection resolution on beta")->capture_default_str();
    dom->add_option("--mc-paths", dom_opts.mc_paths, "Monte Carlo paths per probe")->capture_default_str();
    dom->add_option("--seed", dom_opts.seed, "random seed")->required();
    dom->add_option("--out", dom_out, "output CSV gamma,delta,beta_max; stdout when absent");
    dom->add_option("--json", dom_json, "also write the grid as JSON");
    dom->callback([&] {
        dom_opts.threads = threads;
        const auto grid = egarch::domain_map(dom_opts);
        emit(dom_out, io::domain_csv(grid));
        if (!dom_json.empty()) {
            io::write_atomic(dom_json, dump(io::to_json(grid)));
        }
    });

    // forecast
    auto* fc = app.add_subcommand("forecast", "one-step-ahead variance from a fit");
    std::string fc_params;
    std::string fc_input;
    std::string fc_column;
    std::string fc_out;
    fc->add_option("--params", fc_params, "FitResult JSON (or bare parameter JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    fc->add_option("--input", fc_input, "series CSV")->required()->check(CLI::ExistingFile);
    fc->add_option("--column", fc_column, "column to read (default x)");
    fc->add_option("--out", fc_out, "write the forecast as JSON");
    fc->callback([&] {
        const io::Json j = io::Json::parse(io::read_file(fc_params), nullptr, false);
        if (j.is_discarded()) {
            throw Error(ErrorKind::ParseError, fc_params + ": not valid JSON");
        }
        egarch::FitResult fr;
        fr.theta_hat = io::params_from_json(j);
        if (j.contains("start") && j["start"].is_object()) {
            fr.start.relative = j["start"].value("relative", true);
            fr.start.value = j["start"].value("value", 0.0);
        }
        const auto series = io::load_series(fc_input, fc_column.empty() ? std::nullopt : std::optional(fc_column));
        const double var = egarch::forecast(fr, series.returns);
        std::cout << "sigma2_next: " << io::format_double(var) << "\n";
        if (!fc_out.empty()) {
            io::write_atomic(fc_out, dump(io::Json{{"n", series.size()}, {"sigma2_next", var}}));
        }
    });

    // mc-study
    auto* mc = app.add_subcommand("mc-study", "Monte Carlo consistency or normality study");
    ParamsInput mc_params;
    InnovationInput mc_innov;
    std::string mc_kind = "consistency";
    std::vector<std::size_t> mc_grid;
    std::string mc_mode = "sqmle";
    egarch::StudyOptions mc_opts;
    std::string mc_out;
    std::string mc_std_out;
    mc_params.attach(mc, "the true parameters");
    mc_innov.attach(mc);
    mc->add_option("--kind", mc_kind, "consistency (n grid) or normality (single n)")
        ->check(CLI::IsMember({"consistency", "normality"}))
        ->capture_default_str();
    mc->add_option("--n", mc_grid, "sample sizes, increasing")->required();
    mc->add_option("--replications", mc_opts.replications)->capture_default_str();
    mc->add_option("--mode", mc_mode)->check(CLI::IsMember({"qmle", "sqmle"}))->capture_default_str();
    mc->add_option("--epsilon", mc_opts.epsilon)->capture_default_str();
    mc->add_option("--burn-in", mc_opts.burn_in)->capture_default_str();
    mc->add_option("--seed", mc_opts.seed, "random seed")->required();
    mc->add_flag("--start-at-truth", mc_opts.start_at_truth, "start each fit at the true parameters");
    mc->add_option("--out", mc_out, "report JSON; stdout when absent");
    mc->add_option("--standardized", mc_std_out, "CSV of standardized estimates at the largest n");
    mc->callback([&] {
        mc_opts.theta0 = mc_params.resolve();
        mc_opts.innovations = mc_innov.resolve();
        mc_opts.n_grid = mc_grid;
        mc_opts.mode = parse_mode(mc_mode);
        mc_opts.threads = threads;
        const auto report =
            mc_kind == "normality" ? egarch::normality_study(mc_opts) : egarch::consistency_study(mc_opts);
        emit(mc_out, dump(io::to_json(report)));
        if (!mc_std_out.empty()) {
            io::write_atomic(mc_std_out, io::standardized_csv(report));
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error (" << egarch::to_string(e.kind()) << "): " << e.what() << "\n";
        return e.is_domain_error() ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code;
}
