#pragma once

// Bounds for a bounded outcome through the thresholded pseudo-outcome
// 1(Y <= W) with W ~ Uniform(0, 1) drawn independently of the data.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ivbounds/dataset.hpp"
#include "ivbounds/if_estimators.hpp"
#include "ivbounds/lse.hpp"
#include "ivbounds/nuisance.hpp"
#include "ivbounds/rng.hpp"

namespace ivb {

struct OutcomeTransform {
    double y_min = 0.0;
    double y_max = 1.0;

    /// Observed outcome range of `data`.
    static OutcomeTransform from_data(const Dataset& data);

    double range() const noexcept { return y_max - y_min; }
    double operator()(double y) const noexcept { return (y - y_min) / (y_max - y_min); }
    void validate() const;
};

struct AugmentedDataset {
    Dataset data;                   // outcome replaced by the 0/1 pseudo-outcome
    std::vector<double> threshold;  // W_i in (0, 1)
    int replicate = 0;
};

/// Pseudo-outcome 1(scaled y_i <= W_i); W_i comes from a stream keyed by
/// (seed, replicate, i). Throws out_of_range listing rows outside the range.
AugmentedDataset augment(const Dataset& data, const OutcomeTransform& transform, std::uint64_t seed,
                         int replicate);

struct ContinuousConfig {
    enum class Estimator { direct, lse };

    int replicates = 20;
    Estimator estimator = Estimator::direct;
    LseConfig lse;
    LearnerSpecs learners;
    int folds = 5;
    std::optional<OutcomeTransform> transform;  // default: observed range
    unsigned threads = 1;
};

struct ContinuousEstimate {
    /// ATE bounds for the outcome rescaled to [0, 1], with IF values averaged
    /// over replicates.
    BoundEstimate scaled;
    OutcomeTransform transform;
    double lower_original = 0.0;  // scaled bounds times the outcome range
    double upper_original = 0.0;
    std::vector<double> replicate_lower;
    std::vector<double> replicate_upper;
    // Nuisance diagnostics over all replicates.
    double propensity_min = 0.0;
    double propensity_max = 0.0;
    double max_simplex_violation = 0.0;
};

/// Every replicate reuses the fold partition of `seed`. The ATE bounds are
/// (-U', -L') where (L', U') are the binary bounds for the pseudo-outcome.
ContinuousEstimate continuous_bounds(const Dataset& data, const ContinuousConfig& cfg, std::uint64_t seed);

struct Prop2Result {
    double mu = 0.0;
    double sigma2 = 0.0;
    std::size_t n = 0;
    int m = 0;
    int reps = 0;
    double empirical_variance = 0.0;
    double predicted_variance = 0.0;
    double relative_error = 0.0;
};

/// (sigma2 + (mu (1 - mu) - sigma2) / m) / n.
double prop2_variance(double mu, double sigma2, std::size_t n, int m);

/// Draws `reps` samples of n values from `sampler` (on [0, 1]) and reports the
/// empirical variance of the m-averaged estimator mean_j P_n[T > W^(j)].
Prop2Result prop2_variance_check(const std::function<double(RandomStream&)>& sampler, double mu, double sigma2,
                                 std::size_t n, int m, int reps, std::uint64_t seed, unsigned threads = 1);

}  // namespace ivb
