#pragma once

// Influence-function based estimators of the covariate-adjusted bounds
// L = E[max_j theta_{l,j}(X)] and U = E[min_j theta_{u,j}(X)].

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ivbounds/core_model.hpp"
#include "ivbounds/dataset.hpp"
#include "ivbounds/nuisance.hpp"

namespace ivb {

struct Observation {
    int z = 0;
    int a = 0;
    int y = 0;
};

/// psi_{ya.z} at one observation, indexed like PiVector.
using PsiVector = std::array<double, 8>;

PsiVector psi_components(const Observation& obs, double lambda1, const PiVector& pi);

struct IfContribution {
    ThetaVector lower{};  // L_1..L_8
    ThetaVector upper{};  // U_1..U_8
};

IfContribution if_contributions(const Observation& obs, const NuisanceValue& nuis);

struct BoundEstimate {
    double lower = 0.0;
    double upper = 0.0;
    double var_lower = 0.0;  // V
    double var_upper = 0.0;  // W
    std::size_t n = 0;
    std::string method;
    double t = 0.0;  // smoothing parameter (lse only)
    bool clamped = false;
    std::vector<double> phi_lower;  // per-row uncentered influence values
    std::vector<double> phi_upper;
    std::array<std::size_t, 8> d_lower_counts{};  // rows whose argmax slot is j
    std::array<std::size_t, 8> d_upper_counts{};

    /// Raw lower estimate above the raw upper one.
    bool crossed() const noexcept { return lower > upper; }
    double se_lower() const;
    double se_upper() const;
};

/// Reads observation i; throws unless y is 0/1.
Observation observation(const Dataset& data, std::size_t i);

/// Weighted mean and variance of `values` under `data`'s normalized weights,
/// accumulated in row order.
std::pair<double, double> weighted_moments(const Dataset& data, std::span<const double> values);

/// L-hat = P_n[L_{d(X)} + theta_{l,d(X)}] and the matching upper estimate,
/// with nuis[i] the out-of-fold nuisances at row i.
BoundEstimate direct_bounds(const Dataset& data, std::span<const NuisanceValue> nuis, unsigned threads = 1);

/// P_n[gamma_l-hat(X)], P_n[gamma_u-hat(X)] without correction.
BoundEstimate plugin_bounds(const Dataset& data, std::span<const NuisanceValue> nuis, unsigned threads = 1);

/// (lower - z sqrt(V/n), upper + z sqrt(W/n)) with z = Phi^{-1}(1 - delta/2).
std::pair<double, double> wald_interval(const BoundEstimate& est, double delta);

/// Copy of `est` with both bounds clamped to [-1, 1].
BoundEstimate clamp_bounds(BoundEstimate est);

}  // namespace ivb
