#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ivbounds/checks.hpp"
#include "ivbounds/csv.hpp"
#include "ivbounds/error.hpp"
#include "ivbounds/report.hpp"
#include "ivbounds/simulation.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
    } else {
        ivb::write_text(path, text);
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

ivb::LseConfig::Rule parse_rule(const std::string& text) {
    if (text == "data") return ivb::LseConfig::Rule::data_analysis;
    if (text == "simulation") return ivb::LseConfig::Rule::simulation;
    if (text == "fixed") return ivb::LseConfig::Rule::fixed;
    throw ivb::Error(ivb::ErrorCode::invalid_argument, "unknown --t-rule '" + text + "' (data, simulation, fixed)");
}

struct BoundsArgs {
    ivb::RunConfig cfg;
    std::string covariates;
    std::string method = "direct";
    std::string learner_pi = "histogram";
    std::string learner_lambda = "histogram";
    std::string outcome_kind;
    std::string t_rule;
    std::string inner;
    double t = 0.0;
    int m = 20;
    std::vector<double> y_range;
    std::string weights_col;
    std::string output;
    CLI::Option* t_opt = nullptr;
    CLI::Option* m_opt = nullptr;
};

void add_bounds(CLI::App& app, BoundsArgs& a) {
    auto* cmd = app.add_subcommand("bounds", "Estimate covariate-adjusted bounds on the ATE from a CSV file");
    cmd->add_option("--input", a.cfg.input, "CSV file with a header row")->required();
    cmd->add_option("--covariates", a.covariates, "Comma-separated covariate columns (default: all others)");
    cmd->add_option("--z-col", a.cfg.columns.instrument, "Instrument column")->capture_default_str();
    cmd->add_option("--a-col", a.cfg.columns.exposure, "Exposure column")->capture_default_str();
    cmd->add_option("--y-col", a.cfg.columns.outcome, "Outcome column")->capture_default_str();
    cmd->add_option("--weights-col", a.weights_col, "Sampling-weight column");
    cmd->add_option("--outcome-kind", a.outcome_kind, "binary or bounded (default: bounded for --method continuous)");
    cmd->add_option("--method", a.method, "direct, lse or continuous")->capture_default_str();
    cmd->add_option("--folds", a.cfg.folds, "Cross-fitting folds")->capture_default_str();
    cmd->add_option("--eps", a.cfg.eps, "Propensity truncation level")->capture_default_str();
    a.t_opt = cmd->add_option("--t", a.t, "Fixed smoothing parameter (lse)");
    cmd->add_option("--t-rule", a.t_rule, "data (100 n^1/4), simulation (2 h n^r) or fixed");
    cmd->add_option("--sim-h", a.cfg.sim_h, "h for --t-rule simulation")->capture_default_str();
    cmd->add_option("--sim-r", a.cfg.sim_r, "r for --t-rule simulation")->capture_default_str();
    a.m_opt = cmd->add_option("--m", a.m, "Threshold replicates (continuous, default 20)");
    cmd->add_option("--inner", a.inner, "Estimator inside the continuous method: direct or lse");
    cmd->add_option("--y-range", a.y_range, "Outcome range y_min y_max (continuous)")->expected(2);
    cmd->add_option("--delta", a.cfg.delta, "Interval level is 1 - delta")->capture_default_str();
    cmd->add_option("--seed", a.cfg.seed, "Master seed")->capture_default_str();
    cmd->add_flag("--clamp", a.cfg.clamp, "Clamp reported bounds to [-1, 1]");
    cmd->add_option("--threads", a.cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--learner-pi", a.learner_pi, "Learner for the (Y, A) law per arm")->capture_default_str();
    cmd->add_option("--learner-lambda", a.learner_lambda, "Learner for P(Z=1 | X), or known:<c>")
        ->capture_default_str();
    cmd->add_option("--output", a.output, "Report path (default: stdout)");
}

int run_bounds(BoundsArgs& a) {
    ivb::RunConfig& cfg = a.cfg;
    cfg.method = ivb::parse_method(a.method);
    cfg.columns.covariates = split_list(a.covariates);
    if (!a.weights_col.empty()) cfg.columns.weight = a.weights_col;
    const std::string kind = a.outcome_kind.empty() ? (cfg.method == ivb::Method::continuous ? "bounded" : "binary")
                                                    : a.outcome_kind;
    if (kind != "binary" && kind != "bounded")
        throw ivb::Error(ivb::ErrorCode::invalid_argument, "--outcome-kind must be binary or bounded");
    cfg.columns.outcome_kind = kind == "binary" ? ivb::OutcomeKind::binary : ivb::OutcomeKind::bounded;
    cfg.learner_pi = ivb::LearnerSpec::parse(a.learner_pi);
    cfg.learner_lambda = ivb::LearnerSpec::parse(a.learner_lambda);
    if (a.t_opt->count() > 0) cfg.t = a.t;
    if (!a.t_rule.empty()) cfg.t_rule = parse_rule(a.t_rule);
    if (a.m_opt->count() > 0) cfg.m = a.m;
    if (!a.inner.empty()) cfg.inner = ivb::parse_method(a.inner);
    if (a.y_range.size() == 2) {
        cfg.y_min = a.y_range[0];
        cfg.y_max = a.y_range[1];
    }
    cfg.validate();
    const ivb::Dataset data = ivb::load_csv(cfg.input, cfg.columns);
    const ivb::BoundsReport report = ivb::run_bounds(cfg, data);
    emit(a.output, json(report).dump(2) + "\n");
    return 0;
}

struct SimulateArgs {
    ivb::RmseConfig cfg;
    bool full = false;
    std::string csv;
    std::string output;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
    auto* cmd = app.add_subcommand("simulate", "RMSE experiment on the margin design with noise-injected nuisances");
    cmd->set_help_flag("--help", "Print this help message and exit");
    cmd->add_option("--n-grid", a.cfg.n_grid, "Sample sizes")->capture_default_str();
    cmd->add_option("--r-grid", a.cfg.r_grid, "Nuisance error rates")->capture_default_str();
    cmd->add_option("--reps", a.cfg.reps, "Replications per cell")->capture_default_str();
    cmd->add_flag("--full", a.full, "Use 5000 replications");
    cmd->add_option("--h", a.cfg.h, "Noise scale")->capture_default_str();
    cmd->add_option("--seed", a.cfg.seed, "Master seed")->capture_default_str();
    cmd->add_option("--threads", a.cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--csv", a.csv, "Long-format results (n,r,rep,estimator,estimate,truth)");
    cmd->add_option("--output", a.output, "JSON summary path (default: stdout)");
}

int run_simulate(SimulateArgs& a) {
    if (a.full) a.cfg.reps = 5000;
    const ivb::RmseResult result = ivb::rmse_experiment(a.cfg);
    if (!a.csv.empty()) ivb::write_text(a.csv, ivb::rmse_csv(result));
    emit(a.output, ivb::rmse_summary(result).dump(2) + "\n");
    return 0;
}

struct IllustrateArgs {
    ivb::IllustrateConfig cfg;
    std::string learner_pi = "histogram";
    std::string learner_lambda = "known:0.5";
    std::string output;
};

void add_illustrate(CLI::App& app, IllustrateArgs& a) {
    auto* cmd = app.add_subcommand("illustrate", "True and estimated bounds on the illustration design");
    cmd->add_option("--n", a.cfg.n, "Sample size")->capture_default_str();
    cmd->add_option("--folds", a.cfg.folds, "Cross-fitting folds")->capture_default_str();
    cmd->add_option("--mc-n", a.cfg.mc_n, "Monte Carlo rows for the truth")->capture_default_str();
    cmd->add_option("--learner-pi", a.learner_pi, "Learner for the (Y, A) law per arm")->capture_default_str();
    cmd->add_option("--learner-lambda", a.learner_lambda, "Propensity learner")->capture_default_str();
    cmd->add_option("--eps", a.cfg.eps, "Propensity truncation level")->capture_default_str();
    cmd->add_option("--delta", a.cfg.delta, "Interval level is 1 - delta")->capture_default_str();
    cmd->add_flag("--appendix-f-compat", a.cfg.compat, "Defier/complier-only variant of the design");
    cmd->add_option("--seed", a.cfg.seed, "Master seed")->capture_default_str();
    cmd->add_option("--threads", a.cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--output", a.output, "Report path (default: stdout)");
}

int run_illustrate(IllustrateArgs& a) {
    a.cfg.learner_pi = ivb::LearnerSpec::parse(a.learner_pi);
    a.cfg.learner_lambda = ivb::LearnerSpec::parse(a.learner_lambda);
    const auto run = ivb::run_illustration(a.cfg);
    emit(a.output, ivb::to_json(a.cfg, run).dump(2) + "\n");
    return 0;
}

struct CheckArgs {
    std::size_t draws = 1000;
    std::uint64_t seed = 1;
};

void add_check(CLI::App& app, CheckArgs& a) {
    auto* cmd = app.add_subcommand("check", "Verify the closed-form bounds against the LP oracle and invariants");
    cmd->add_option("--draws", a.draws, "Random laws per check")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
}

int run_check(const CheckArgs& a) {
    bool ok = true;
    for (const auto& r : ivb::run_checks(a.draws, a.seed)) {
        std::printf("%-20s %s  (%zu cases, %zu failures)%s%s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.cases,
                    r.failures, r.detail.empty() ? "" : "  ", r.detail.c_str());
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

struct GenerateArgs {
    std::string dgp = "illustration";
    std::size_t n = 5000;
    std::uint64_t seed = 1;
    bool compat = false;
    std::string output;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
    auto* cmd = app.add_subcommand("generate", "Write a simulated dataset as CSV");
    cmd->add_option("--dgp", a.dgp, "illustration or margin")->capture_default_str();
    cmd->add_option("--n", a.n, "Rows")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
    cmd->add_flag("--appendix-f-compat", a.compat, "Defier/complier-only illustration variant");
    cmd->add_option("--output", a.output, "CSV path (default: stdout)");
}

int run_generate(const GenerateArgs& a) {
    ivb::Dataset data;
    if (a.dgp == "illustration") data = ivb::gen_illustration(a.n, a.seed, a.compat);
    else if (a.dgp == "margin") data = ivb::gen_margin_dgp(a.n, a.seed);
    else throw ivb::Error(ivb::ErrorCode::invalid_argument, "unknown --dgp '" + a.dgp + "' (illustration, margin)");
    emit(a.output, ivb::to_csv(data));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariate-adjusted instrumental-variable bounds on the average treatment effect"};
    app.set_version_flag("--version", ivb::software_version());
    app.require_subcommand(1);
    BoundsArgs bounds;
    SimulateArgs simulate;
    IllustrateArgs illustrate;
    CheckArgs check;
    GenerateArgs generate;
    add_bounds(app, bounds);
    add_simulate(app, simulate);
    add_illustrate(app, illustrate);
    add_check(app, check);
    add_generate(app, generate);
    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("bounds")) return run_bounds(bounds);
        if (app.got_subcommand("simulate")) return run_simulate(simulate);
        if (app.got_subcommand("illustrate")) return run_illustrate(illustrate);
        if (app.got_subcommand("check")) return run_check(check);
        if (app.got_subcommand("generate")) return run_generate(generate);
    } catch (const ivb::Error& e) {
        const json err{{"error", ivb::error_code_name(e.code())}, {"code", static_cast<int>(e.code())},
                       {"message", e.what()}};
        std::cerr << err.dump() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"code", 1}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}
