#pragma once

// Log-sum-exp smoothing of the max/min in the bound functionals:
//   g_t(v) = (1/t) log sum_j exp(t v_j),   h_t(v) = -g_t(-v).

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ivbounds/dataset.hpp"
#include "ivbounds/if_estimators.hpp"
#include "ivbounds/nuisance.hpp"

namespace ivb {

/// g_t(v), evaluated as max(v) + lse_excess(v, t).
double lse(std::span<const double> v, double t);
/// g_t(v) - max(v) = log1p(sum_{j != argmax} exp(t (v_j - max))) / t, in [0, log(k)/t].
double lse_excess(std::span<const double> v, double t);
/// Softmax weights exp(t v_j) / sum_k exp(t v_k).
std::vector<double> lse_grad(std::span<const double> v, double t);
/// t (diag(p) - p p^T), row-major k x k, with p = lse_grad(v, t).
std::vector<double> lse_hess(std::span<const double> v, double t);
/// h_t(v) = -g_t(-v).
double lse_min(std::span<const double> v, double t);

struct LseConfig {
    enum class Rule { fixed, data_analysis, simulation };

    Rule rule = Rule::data_analysis;
    double t = 0.0;    // fixed
    double h = 2.25;   // simulation
    double r = 0.25;   // simulation

    static LseConfig fixed(double t);
    static LseConfig data_analysis() { return {}; }
    static LseConfig simulation(double h, double r);

    /// t for a sample of size n: fixed t, 100 n^(1/4), or 2 h n^r.
    double resolve(std::size_t n) const;
};

BoundEstimate lse_bounds(const Dataset& data, std::span<const NuisanceValue> nuis, const LseConfig& cfg,
                         unsigned threads = 1);

/// (lower - log(8)/t - z se_l, upper + log(8)/t + z se_u) at est.t.
std::pair<double, double> conservative_interval(const BoundEstimate& est, double delta);
/// Same with the two bounds taken from separate estimates; throws
/// mismatched_config unless both were computed at `t`.
std::pair<double, double> conservative_interval(const BoundEstimate& lower_est, const BoundEstimate& upper_est,
                                                double t, double delta);

}  // namespace ivb
