#pragma once

// Data-generating processes with closed-form truths, and the experiments
// built on them.
//
// Illustration design: Z ~ Bernoulli(1/2), X1 ~ Bernoulli(0.7), X2 ~ U(-1, 1).
// Compliance is a deterministic function of (X1, X2):
//   always taker  X2 >= 0.99
//   never taker   X2 <= -0.99
//   defier        X1 = 0 and X2 in (-0.5, 0.5]
//   complier      otherwise
// Compat mode keeps only defiers (X1 = 0, X2 in [-0.5, 0.5]) and compliers.
//
// Margin design: X ~ U(0, 1), Z ~ Bernoulli(clip(X^2, 0.1, 0.9)), A = Z,
// U ~ U(0, 1), Y ~ Bernoulli(U (A (1 - X) + (1 - A) X)). Both bounds are 0.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivbounds/core_model.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/nuisance.hpp"

namespace ivb {

enum class Stratum { always_taker, never_taker, defier, complier };

const char* stratum_name(Stratum s) noexcept;
Stratum illustration_stratum(double x1, double x2, bool compat) noexcept;
/// Exposure of stratum s under instrument z.
int stratum_exposure(Stratum s, int z) noexcept;
/// E[Y(a) | stratum].
double stratum_outcome_mean(Stratum s, int a) noexcept;
double stratum_probability(Stratum s, bool compat) noexcept;
/// pi_{ya.z} for a unit of stratum s.
PiVector stratum_pi(Stratum s) noexcept;

struct IllustrationSample {
    Dataset data;  // covariates X1, X2
    std::vector<int> y0;
    std::vector<int> y1;
    std::vector<Stratum> strata;
};

IllustrationSample gen_illustration_sample(std::size_t n, std::uint64_t seed, bool compat = false);
Dataset gen_illustration(std::size_t n, std::uint64_t seed, bool compat = false);

struct IllustrationTruth {
    double ate = 0.0;
    double adjusted_lower = 0.0;
    double adjusted_upper = 0.0;
    double unadjusted_lower = 0.0;
    double unadjusted_upper = 0.0;
    std::size_t mc_n = 0;            // 0 for the exact version
    double adjusted_lower_se = 0.0;  // Monte Carlo standard errors
    double adjusted_upper_se = 0.0;
};

/// Exact truth from the stratum probabilities.
IllustrationTruth illustration_truth_exact(bool compat = false);
/// Adjusted bounds averaged over mc_n sampled covariate rows (mc_n >= 1e5);
/// ATE and unadjusted bounds from stratum algebra.
IllustrationTruth illustration_truth(std::size_t mc_n, std::uint64_t seed, bool compat = false);

enum class AdjustmentSet { none, x1, x2, both, constant };

const char* adjustment_set_name(AdjustmentSet s) noexcept;
/// pi given the retained coordinates, integrating the others out exactly.
PiVector conditional_pi(AdjustmentSet set, double x1, double x2, bool compat);

struct WidthEntry {
    AdjustmentSet set;
    double lower = 0.0;
    double upper = 0.0;
    double exact_lower = 0.0;
    double exact_upper = 0.0;
    double mc_lower = 0.0;
    double mc_upper = 0.0;
    double mc_width_se = 0.0;

    double width() const noexcept { return exact_upper - exact_lower; }
    double mc_width() const noexcept { return mc_upper - mc_lower; }
};

struct WidthReport {
    std::vector<WidthEntry> entries;
    std::size_t mc_n = 0;
    /// Every nested pair of listed sets has width(smaller) >= width(larger).
    bool nested_monotone = true;
};

WidthReport width_comparison(const std::vector<AdjustmentSet>& sets, std::size_t mc_n, std::uint64_t seed,
                             bool compat = false);

namespace margin_dgp {

double lambda1(double x) noexcept;
PiVector pi(double x) noexcept;
/// gamma_l(x) = gamma_u(x) = 1/2 - x.
double gamma(double x) noexcept;
/// Distance between the largest and the runner-up lower term, 1/2 min(x, 1 - x).
double gap(double x) noexcept;
/// P[gap(X) <= t].
double gap_cdf(double t) noexcept;
inline constexpr double lower_bound = 0.0;
inline constexpr double upper_bound = 0.0;

ClosedFormNuisance nuisance();

}  // namespace margin_dgp

Dataset gen_margin_dgp(std::size_t n, std::uint64_t seed);

struct RmseConfig {
    std::vector<std::size_t> n_grid{500, 1000, 5000};
    std::vector<double> r_grid{0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    int reps = 500;
    double h = 2.25;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct RmseRow {
    std::size_t n = 0;
    double r = 0.0;
    int rep = 0;
    std::string estimator;
    double estimate = 0.0;
    double truth = 0.0;
};

struct RmseCell {
    std::size_t n = 0;
    double r = 0.0;
    std::string estimator;
    double rmse = 0.0;
    double bias = 0.0;
    int reps = 0;
};

struct RmseResult {
    RmseConfig config;
    std::vector<RmseRow> rows;  // (n, r, rep, estimator) order
    std::vector<RmseCell> cells;

    /// RMSE of `estimator` at (n, r); throws if absent.
    double rmse(std::size_t n, double r, const std::string& estimator) const;
};

/// Lower-bound estimates (direct, lse with t = 2 h n^r, plug-in) against the
/// true value 0. Each (n, rep) shares one dataset and one noise draw across r.
RmseResult rmse_experiment(const RmseConfig& cfg);

}  // namespace ivb
