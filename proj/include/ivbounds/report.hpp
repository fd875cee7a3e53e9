#pragma once

// End-to-end runs and their JSON reports.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivbounds/csv.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/learners.hpp"
#include "ivbounds/lse.hpp"
#include "ivbounds/simulation.hpp"

namespace ivb {

inline constexpr int report_schema_version = 1;

const char* software_version() noexcept;

enum class Method { direct, lse, continuous };

const char* method_name(Method m) noexcept;
Method parse_method(const std::string& text);

struct RunConfig {
    std::string input;
    ColumnMapping columns;
    Method method = Method::direct;
    LearnerSpec learner_pi = LearnerSpec::histogram();
    LearnerSpec learner_lambda = LearnerSpec::histogram();
    int folds = 5;
    double eps = 0.01;
    // Unset fields take method defaults; setting one that the method does not
    // use is an error.
    std::optional<double> t;
    std::optional<LseConfig::Rule> t_rule;
    double sim_h = 2.25;
    double sim_r = 0.25;
    std::optional<int> m;
    std::optional<Method> inner;  // continuous only: direct or lse
    std::optional<double> y_min;
    std::optional<double> y_max;
    double delta = 0.05;
    std::uint64_t seed = 1;
    bool clamp = false;
    unsigned threads = 1;

    void validate() const;
    /// Smoothing rule actually used (lse, or continuous with an lse inner step).
    std::optional<LseConfig> lse_config() const;
    /// Full resolved configuration.
    nlohmann::json to_json() const;
};

struct Diagnostics {
    double propensity_min = 0.0;
    double propensity_max = 0.0;
    double max_simplex_violation = 0.0;
    bool crossed = false;  // raw lower estimate above raw upper estimate
    std::vector<std::string> warnings;

    bool operator==(const Diagnostics&) const = default;
};

struct ContinuousSummary {
    double y_min = 0.0;
    double y_max = 1.0;
    int replicates = 0;
    double lower_original = 0.0;
    double upper_original = 0.0;
    double interval_lo_original = 0.0;
    double interval_hi_original = 0.0;

    bool operator==(const ContinuousSummary&) const = default;
};

struct BoundsReport {
    int schema_version = report_schema_version;
    std::string version;
    nlohmann::json config;
    std::string method;
    std::size_t n = 0;
    double lower = 0.0;
    double upper = 0.0;
    double var_lower = 0.0;
    double var_upper = 0.0;
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    double delta = 0.05;
    std::optional<double> t;
    std::array<std::size_t, 8> d_lower_counts{};
    std::array<std::size_t, 8> d_upper_counts{};
    Diagnostics diagnostics;
    std::optional<ContinuousSummary> continuous;
    std::uint64_t seed = 0;

    bool operator==(const BoundsReport&) const = default;
};

void to_json(nlohmann::json& j, const BoundsReport& r);
void from_json(const nlohmann::json& j, BoundsReport& r);

/// Runs the configured estimator on `data`.
BoundsReport run_bounds(const RunConfig& cfg, const Dataset& data);

std::string rmse_csv(const RmseResult& result);
nlohmann::json rmse_summary(const RmseResult& result);

struct IllustrateConfig {
    std::size_t n = 5000;
    int folds = 10;
    std::size_t mc_n = 1000000;
    LearnerSpec learner_pi = LearnerSpec::histogram();
    LearnerSpec learner_lambda = LearnerSpec::known(0.5);
    double eps = 0.01;
    double delta = 0.05;
    bool compat = false;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct IllustrationRun {
    IllustrationTruth truth_exact;
    IllustrationTruth truth_mc;
    WidthReport widths;
    BoundEstimate adjusted;
    std::pair<double, double> adjusted_interval;
    BoundEstimate unadjusted;  // constant learners with the same propensity
    std::pair<double, double> unadjusted_interval;
    BoundEstimate unadjusted_plugin;  // gamma at the empirical pooled law
};

IllustrationRun run_illustration(const IllustrateConfig& cfg);
nlohmann::json to_json(const IllustrateConfig& cfg, const IllustrationRun& run);

}  // namespace ivb
