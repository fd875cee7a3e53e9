#include "ivbounds/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ivbounds/continuous.hpp"
#include "ivbounds/error.hpp"
#include "ivbounds/if_estimators.hpp"
#include "ivbounds/nuisance.hpp"

namespace ivb {

using nlohmann::json;

const char* software_version() noexcept { return IVBOUNDS_VERSION; }

const char* method_name(Method m) noexcept {
    switch (m) {
        case Method::direct: return "direct";
        case Method::lse: return "lse";
        case Method::continuous: return "continuous";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    if (text == "direct") return Method::direct;
    if (text == "lse") return Method::lse;
    if (text == "continuous") return Method::continuous;
    throw Error(ErrorCode::invalid_argument, "unknown method '" + text + "' (direct, lse, continuous)");
}

namespace {

const char* rule_name(LseConfig::Rule r) {
    switch (r) {
        case LseConfig::Rule::fixed: return "fixed";
        case LseConfig::Rule::data_analysis: return "data";
        case LseConfig::Rule::simulation: return "simulation";
    }
    return "?";
}

bool uses_lse(const RunConfig& cfg) {
    return cfg.method == Method::lse || (cfg.method == Method::continuous && cfg.inner == Method::lse);
}

}  // namespace

void RunConfig::validate() const {
    if (folds < 2) throw Error(ErrorCode::invalid_argument, "--folds must be at least 2");
    if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorCode::invalid_argument, "--eps must lie in (0, 0.5)");
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::invalid_argument, "--delta must lie in (0, 1)");
    if (learner_pi.kind == LearnerSpec::Kind::known)
        throw Error(ErrorCode::invalid_argument, "--learner-pi cannot be 'known'");
    if (method != Method::continuous) {
        if (m) throw Error(ErrorCode::mismatched_config, "--m applies only to --method continuous");
        if (inner) throw Error(ErrorCode::mismatched_config, "--inner applies only to --method continuous");
        if (y_min || y_max) throw Error(ErrorCode::mismatched_config, "outcome range applies only to --method continuous");
    }
    if (inner && *inner == Method::continuous)
        throw Error(ErrorCode::invalid_argument, "--inner must be direct or lse");
    if (!uses_lse(*this) && (t || t_rule))
        throw Error(ErrorCode::mismatched_config, "--t and --t-rule apply only to the lse estimator");
    if (t && t_rule && *t_rule != LseConfig::Rule::fixed)
        throw Error(ErrorCode::mismatched_config, "--t conflicts with --t-rule " + std::string(rule_name(*t_rule)));
    if (t_rule == LseConfig::Rule::fixed && !t) throw Error(ErrorCode::invalid_argument, "--t-rule fixed needs --t");
    if (t && !(*t > 0.0)) throw Error(ErrorCode::invalid_argument, "--t must be positive");
    if (m && *m < 1) throw Error(ErrorCode::invalid_argument, "--m must be at least 1");
    if (y_min.has_value() != y_max.has_value())
        throw Error(ErrorCode::invalid_argument, "give both ends of the outcome range or neither");
    if (y_min && !(*y_max > *y_min)) throw Error(ErrorCode::invalid_argument, "outcome range needs y_min < y_max");
}

std::optional<LseConfig> RunConfig::lse_config() const {
    if (!uses_lse(*this)) return std::nullopt;
    if (t) return LseConfig::fixed(*t);
    const auto rule = t_rule.value_or(LseConfig::Rule::data_analysis);
    if (rule == LseConfig::Rule::simulation) return LseConfig::simulation(sim_h, sim_r);
    return LseConfig::data_analysis();
}

json RunConfig::to_json() const {
    json j;
    j["input"] = input;
    j["columns"] = {{"covariates", columns.covariates},
                    {"instrument", columns.instrument},
                    {"exposure", columns.exposure},
                    {"outcome", columns.outcome},
                    {"weight", columns.weight ? json(*columns.weight) : json(nullptr)},
                    {"outcome_kind", columns.outcome_kind == OutcomeKind::binary ? "binary" : "bounded"}};
    j["method"] = method_name(method);
    j["learner_pi"] = learner_pi.describe();
    j["learner_lambda"] = learner_lambda.describe();
    j["folds"] = folds;
    j["eps"] = eps;
    j["delta"] = delta;
    j["seed"] = seed;
    j["clamp"] = clamp;
    j["threads"] = threads;
    if (const auto lse = lse_config()) {
        j["t_rule"] = rule_name(lse->rule);
        if (lse->rule == LseConfig::Rule::fixed) j["t"] = lse->t;
        if (lse->rule == LseConfig::Rule::simulation) {
            j["sim_h"] = lse->h;
            j["sim_r"] = lse->r;
        }
    }
    if (method == Method::continuous) {
        j["m"] = m.value_or(20);
        j["inner"] = method_name(inner.value_or(Method::direct));
        j["y_range"] = y_min ? json::array({*y_min, *y_max}) : json(nullptr);
    }
    return j;
}

void to_json(json& j, const BoundsReport& r) {
    j = json{{"schema_version", r.schema_version},
             {"version", r.version},
             {"config", r.config},
             {"method", r.method},
             {"n", r.n},
             {"lower", r.lower},
             {"upper", r.upper},
             {"var_lower", r.var_lower},
             {"var_upper", r.var_upper},
             {"interval", {{"lo", r.interval_lo}, {"hi", r.interval_hi}, {"delta", r.delta}}},
             {"t", r.t ? json(*r.t) : json(nullptr)},
             {"d_lower_counts", r.d_lower_counts},
             {"d_upper_counts", r.d_upper_counts},
             {"diagnostics",
              {{"propensity_min", r.diagnostics.propensity_min},
               {"propensity_max", r.diagnostics.propensity_max},
               {"max_simplex_violation", r.diagnostics.max_simplex_violation},
               {"crossed", r.diagnostics.crossed},
               {"warnings", r.diagnostics.warnings}}},
             {"seed", r.seed}};
    if (r.continuous) {
        const auto& c = *r.continuous;
        j["continuous"] = {{"y_min", c.y_min},
                           {"y_max", c.y_max},
                           {"replicates", c.replicates},
                           {"lower_original", c.lower_original},
                           {"upper_original", c.upper_original},
                           {"interval_original", {{"lo", c.interval_lo_original}, {"hi", c.interval_hi_original}}}};
    } else {
        j["continuous"] = nullptr;
    }
}

void from_json(const json& j, BoundsReport& r) {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != report_schema_version)
        throw Error(ErrorCode::invalid_argument, "unsupported report schema version " + std::to_string(r.schema_version));
    r.version = j.at("version").get<std::string>();
    r.config = j.at("config");
    r.method = j.at("method").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.lower = j.at("lower").get<double>();
    r.upper = j.at("upper").get<double>();
    r.var_lower = j.at("var_lower").get<double>();
    r.var_upper = j.at("var_upper").get<double>();
    const auto& interval = j.at("interval");
    r.interval_lo = interval.at("lo").get<double>();
    r.interval_hi = interval.at("hi").get<double>();
    r.delta = interval.at("delta").get<double>();
    r.t = j.at("t").is_null() ? std::nullopt : std::optional<double>(j.at("t").get<double>());
    r.d_lower_counts = j.at("d_lower_counts").get<std::array<std::size_t, 8>>();
    r.d_upper_counts = j.at("d_upper_counts").get<std::array<std::size_t, 8>>();
    const auto& d = j.at("diagnostics");
    r.diagnostics.propensity_min = d.at("propensity_min").get<double>();
    r.diagnostics.propensity_max = d.at("propensity_max").get<double>();
    r.diagnostics.max_simplex_violation = d.at("max_simplex_violation").get<double>();
    r.diagnostics.crossed = d.at("crossed").get<bool>();
    r.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("continuous") && !j.at("continuous").is_null()) {
        const auto& c = j.at("continuous");
        ContinuousSummary s;
        s.y_min = c.at("y_min").get<double>();
        s.y_max = c.at("y_max").get<double>();
        s.replicates = c.at("replicates").get<int>();
        s.lower_original = c.at("lower_original").get<double>();
        s.upper_original = c.at("upper_original").get<double>();
        s.interval_lo_original = c.at("interval_original").at("lo").get<double>();
        s.interval_hi_original = c.at("interval_original").at("hi").get<double>();
        r.continuous = s;
    } else {
        r.continuous.reset();
    }
}

namespace {

Diagnostics nuisance_diagnostics(std::span<const NuisanceValue> nuis) {
    Diagnostics d;
    d.propensity_min = 1.0;
    for (const auto& v : nuis) {
        d.propensity_min = std::min(d.propensity_min, v.lambda1);
        d.propensity_max = std::max(d.propensity_max, v.lambda1);
        d.max_simplex_violation = std::max(d.max_simplex_violation, v.pi.simplex_violation());
    }
    return d;
}

void finish_interval(BoundsReport& r, const BoundEstimate& est, const RunConfig& cfg, bool smoothed) {
    const auto [lo, hi] = smoothed ? conservative_interval(est, cfg.delta) : wald_interval(est, cfg.delta);
    r.method = est.method;
    r.lower = est.lower;
    r.upper = est.upper;
    r.var_lower = est.var_lower;
    r.var_upper = est.var_upper;
    r.interval_lo = lo;
    r.interval_hi = hi;
    r.d_lower_counts = est.d_lower_counts;
    r.d_upper_counts = est.d_upper_counts;
    r.diagnostics.crossed = est.crossed();
    if (est.crossed())
        r.diagnostics.warnings.push_back("estimated lower bound exceeds estimated upper bound");
    if (smoothed) r.t = est.t;
    if (cfg.clamp) {
        r.lower = std::clamp(r.lower, -1.0, 1.0);
        r.upper = std::clamp(r.upper, -1.0, 1.0);
        r.interval_lo = std::clamp(r.interval_lo, -1.0, 1.0);
        r.interval_hi = std::clamp(r.interval_hi, -1.0, 1.0);
    }
}

}  // namespace

BoundsReport run_bounds(const RunConfig& cfg, const Dataset& data) {
    cfg.validate();
    data.validate();
    BoundsReport r;
    r.version = software_version();
    r.config = cfg.to_json();
    r.method = method_name(cfg.method);
    r.n = data.size();
    r.delta = cfg.delta;
    r.seed = cfg.seed;

    const LearnerSpecs learners{cfg.learner_lambda, cfg.learner_pi, cfg.eps};
    const auto lse = cfg.lse_config();
    if (cfg.method == Method::continuous) {
        ContinuousConfig cc;
        cc.replicates = cfg.m.value_or(20);
        cc.estimator = lse ? ContinuousConfig::Estimator::lse : ContinuousConfig::Estimator::direct;
        if (lse) cc.lse = *lse;
        cc.learners = learners;
        cc.folds = cfg.folds;
        if (cfg.y_min) cc.transform = OutcomeTransform{*cfg.y_min, *cfg.y_max};
        cc.threads = cfg.threads;
        const ContinuousEstimate est = continuous_bounds(data, cc, cfg.seed);
        r.diagnostics.propensity_min = est.propensity_min;
        r.diagnostics.propensity_max = est.propensity_max;
        r.diagnostics.max_simplex_violation = est.max_simplex_violation;
        finish_interval(r, est.scaled, cfg, lse.has_value());
        const double range = est.transform.range();
        r.continuous = ContinuousSummary{est.transform.y_min, est.transform.y_max, cc.replicates,
                                         r.lower * range,     r.upper * range,     r.interval_lo * range,
                                         r.interval_hi * range};
        return r;
    }

    if (data.outcome_kind != OutcomeKind::binary)
        throw Error(ErrorCode::mismatched_config, "a bounded outcome needs --method continuous");
    const FoldedNuisances folded = cross_fit(data, cfg.folds, learners, cfg.seed, cfg.threads);
    const auto nuis = folded.evaluate_all(data, cfg.threads);
    const Diagnostics d = nuisance_diagnostics(nuis);
    r.diagnostics = d;
    const BoundEstimate est = lse ? lse_bounds(data, nuis, *lse, cfg.threads) : direct_bounds(data, nuis, cfg.threads);
    finish_interval(r, est, cfg, lse.has_value());
    return r;
}

std::string rmse_csv(const RmseResult& result) {
    std::ostringstream out;
    out.precision(17);
    out << "n,r,rep,estimator,estimate,truth\n";
    for (const auto& row : result.rows)
        out << row.n << ',' << row.r << ',' << row.rep << ',' << row.estimator << ',' << row.estimate << ','
            << row.truth << '\n';
    return out.str();
}

json rmse_summary(const RmseResult& result) {
    json cells = json::array();
    for (const auto& c : result.cells)
        cells.push_back({{"n", c.n}, {"r", c.r}, {"estimator", c.estimator}, {"rmse", c.rmse}, {"bias", c.bias},
                         {"reps", c.reps}});
    return {{"version", software_version()},
            {"config",
             {{"n_grid", result.config.n_grid},
              {"r_grid", result.config.r_grid},
              {"reps", result.config.reps},
              {"h", result.config.h},
              {"seed", result.config.seed}}},
            {"cells", cells}};
}

IllustrationRun run_illustration(const IllustrateConfig& cfg) {
    IllustrationRun run;
    run.truth_exact = illustration_truth_exact(cfg.compat);
    run.truth_mc = illustration_truth(cfg.mc_n, cfg.seed, cfg.compat);
    run.widths = width_comparison({AdjustmentSet::none, AdjustmentSet::x1, AdjustmentSet::x2, AdjustmentSet::both},
                                  std::max<std::size_t>(cfg.mc_n / 10, 2), cfg.seed, cfg.compat);

    const Dataset data = gen_illustration(cfg.n, cfg.seed, cfg.compat);
    const LearnerSpecs adjusted{cfg.learner_lambda, cfg.learner_pi, cfg.eps};
    const auto nuis = cross_fit(data, cfg.folds, adjusted, cfg.seed, cfg.threads).evaluate_all(data, cfg.threads);
    run.adjusted = direct_bounds(data, nuis, cfg.threads);
    run.adjusted_interval = wald_interval(run.adjusted, cfg.delta);

    const LearnerSpecs pooled{cfg.learner_lambda, LearnerSpec::constant(), cfg.eps};
    const auto pooled_nuis = cross_fit(data, cfg.folds, pooled, cfg.seed, cfg.threads).evaluate_all(data, cfg.threads);
    run.unadjusted = direct_bounds(data, pooled_nuis, cfg.threads);
    run.unadjusted_interval = wald_interval(run.unadjusted, cfg.delta);

    const PropensityModel prop = fit_propensity(data, cfg.learner_lambda, cfg.eps);
    const JointModel arm0 = fit_joint(data, 0, LearnerSpec::constant());
    const JointModel arm1 = fit_joint(data, 1, LearnerSpec::constant());
    std::vector<NuisanceValue> full(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        full[i] = {prop(data.row(i)), PiVector::from_arms(arm0(data.row(i)), arm1(data.row(i)))};
    run.unadjusted_plugin = plugin_bounds(data, full, cfg.threads);
    return run;
}

namespace {

json truth_json(const IllustrationTruth& t) {
    json j{{"ate", t.ate},
           {"adjusted", {t.adjusted_lower, t.adjusted_upper}},
           {"unadjusted", {t.unadjusted_lower, t.unadjusted_upper}}};
    if (t.mc_n > 0) {
        j["mc_n"] = t.mc_n;
        j["adjusted_se"] = {t.adjusted_lower_se, t.adjusted_upper_se};
    }
    return j;
}

json estimate_json(const BoundEstimate& e, const std::pair<double, double>* interval) {
    json j{{"method", e.method}, {"lower", e.lower}, {"upper", e.upper}, {"se_lower", e.se_lower()},
           {"se_upper", e.se_upper()}};
    if (interval) j["interval"] = {interval->first, interval->second};
    return j;
}

}  // namespace

json to_json(const IllustrateConfig& cfg, const IllustrationRun& run) {
    json widths = json::array();
    for (const auto& e : run.widths.entries)
        widths.push_back({{"set", adjustment_set_name(e.set)},
                          {"exact", {e.exact_lower, e.exact_upper}},
                          {"monte_carlo", {e.mc_lower, e.mc_upper}},
                          {"width", e.width()},
                          {"mc_width_se", e.mc_width_se}});
    return {{"version", software_version()},
            {"config",
             {{"n", cfg.n},
              {"folds", cfg.folds},
              {"mc_n", cfg.mc_n},
              {"learner_pi", cfg.learner_pi.describe()},
              {"learner_lambda", cfg.learner_lambda.describe()},
              {"eps", cfg.eps},
              {"delta", cfg.delta},
              {"compat", cfg.compat},
              {"seed", cfg.seed}}},
            {"truth", truth_json(run.truth_exact)},
            {"truth_monte_carlo", truth_json(run.truth_mc)},
            {"widths", {{"entries", widths}, {"nested_monotone", run.widths.nested_monotone}}},
            {"adjusted", estimate_json(run.adjusted, &run.adjusted_interval)},
            {"unadjusted", estimate_json(run.unadjusted, &run.unadjusted_interval)},
            {"unadjusted_plugin", estimate_json(run.unadjusted_plugin, nullptr)}};
}

}  // namespace ivb
